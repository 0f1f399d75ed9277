import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from qa3c import QA3C


def test_params_round_trip():
    est = QA3C(env="acrobot", variant="classical", total_episodes=3, seed=4)
    params = est.get_params()
    assert params["env"] == "acrobot" and params["total_episodes"] == 3
    assert clone(est).get_params() == params
    est.set_params(gamma=0.5)
    assert est.gamma == 0.5


def test_fit_predict_score():
    est = QA3C(env="cartpole", variant="classical", total_episodes=3, seed=1).fit()
    assert len(est.history_) == 3 and est.n_features_in_ == 4
    X = np.random.default_rng(0).normal(size=(5, 4))
    proba = est.predict_proba(X)
    assert proba.shape == (5, 2) and np.allclose(proba.sum(axis=1), 1)
    assert np.array_equal(est.predict(X), proba.argmax(axis=1))
    assert est.score(episodes=2) > 0


def test_unfitted_and_bad_input():
    est = QA3C()
    with pytest.raises(NotFittedError):
        est.predict(np.zeros((1, 4)))
    fitted = QA3C(variant="classical", total_episodes=1).fit()
    with pytest.raises(ValueError):
        fitted.predict(np.zeros(4))
