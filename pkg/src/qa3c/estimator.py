"""scikit-learn style facade over training and greedy evaluation.

``fit`` ignores ``X``/``y``: the data come from interacting with the
environment.  ``predict`` maps observations to greedy actions, so a fitted
agent can be used wherever an estimator with ``predict`` is expected.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .envs import make_env
from .models import policy_forward
from .runner import greedy_episodes
from .trainer import TrainConfig, train


class QA3C(BaseEstimator):
    def __init__(self, env: str = "cartpole", variant: str = "quantum", total_episodes: int = 100,
                 workers: int = 1, seed: int = 0, sync_interval: int = 5, gamma: float = 0.9,
                 lr: float = 1e-4, beta1: float = 0.92, beta2: float = 0.999, entropy_coef: float = 0.0,
                 max_grad_norm: Optional[float] = None, n_qubits: int = 8, vqc_layers: int = 2):
        self.env = env
        self.variant = variant
        self.total_episodes = total_episodes
        self.workers = workers
        self.seed = seed
        self.sync_interval = sync_interval
        self.gamma = gamma
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.entropy_coef = entropy_coef
        self.max_grad_norm = max_grad_norm
        self.n_qubits = n_qubits
        self.vqc_layers = vqc_layers

    def _config(self) -> TrainConfig:
        return TrainConfig(**self.get_params())

    def fit(self, X=None, y=None):
        result = train(self._config())
        self.actor_, self.critic_ = result.actor, result.critic
        self.history_ = result.records
        self.n_features_in_ = self.actor_.obs_dim
        return self

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "actor_")
        X = check_array(X)
        return policy_forward(self.actor_, X)

    def predict(self, X) -> np.ndarray:
        """Greedy actions, ties going to the lowest index."""
        return np.argmax(self.predict_proba(X), axis=1)

    def score(self, X=None, y=None, episodes: int = 10) -> float:
        """Mean greedy return over ``episodes`` fresh episodes."""
        check_is_fitted(self, "actor_")
        return greedy_episodes(self.actor_, make_env(self.env), episodes, self.seed).mean_return
