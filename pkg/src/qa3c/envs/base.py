from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..exceptions import ConfigurationError, UsageError


class StepResult(NamedTuple):
    obs: np.ndarray
    reward: float
    terminal: bool
    truncated: bool


class Env:
    """Minimal episodic environment interface shared by the three benchmarks."""

    spec = None

    def __init__(self):
        self.step_count = 0
        self._done = True

    def reset(self, rng) -> np.ndarray:
        raise NotImplementedError

    def step(self, action: int) -> StepResult:
        raise NotImplementedError

    def _begin_step(self, action, n_actions):
        if self._done:
            raise UsageError(f"{self.spec.name}: step() called on a finished episode; call reset() first")
        if not isinstance(action, (int, np.integer)) or not 0 <= action < n_actions:
            raise ConfigurationError(f"{self.spec.name}: invalid action {action!r}")
        self.step_count += 1

    def _finish(self, obs, reward, terminal) -> StepResult:
        truncated = self.step_count >= self.spec.max_steps
        self._done = terminal or truncated
        return StepResult(obs, float(reward), bool(terminal), bool(truncated))
