"""Benchmark environments, selectable by name."""

from ..exceptions import ConfigurationError
from .acrobot import Acrobot
from .base import Env, StepResult
from .cartpole import CartPole
from .crossing import SimpleCrossing

ENV_NAMES = ("cartpole", "acrobot", "crossing-s9n1", "crossing-s9n2", "crossing-s9n3")
DEFAULT_MAX_STEPS = {"cartpole": 200, "acrobot": 500, "crossing-s9n1": 324, "crossing-s9n2": 324, "crossing-s9n3": 324}


def make_env(name: str, max_steps: int | None = None, cartpole_angle_limit_deg: float = 12.0) -> Env:
    if name not in ENV_NAMES:
        raise ConfigurationError(f"unknown environment {name!r}; choose from {', '.join(ENV_NAMES)}")
    steps = DEFAULT_MAX_STEPS[name] if max_steps is None else int(max_steps)
    if steps < 1:
        raise ConfigurationError("max_steps must be positive")
    if name == "cartpole":
        return CartPole(steps, cartpole_angle_limit_deg)
    if name == "acrobot":
        return Acrobot(steps)
    return SimpleCrossing(int(name[-1]), 9, steps)


def env_spec(name: str, max_steps: int | None = None):
    return make_env(name, max_steps).spec


__all__ = ["ENV_NAMES", "DEFAULT_MAX_STEPS", "Env", "StepResult", "make_env", "env_spec",
           "CartPole", "Acrobot", "SimpleCrossing"]
