"""Cart-Pole balancing with the usual Euler-integrated physics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..models import EnvSpec
from .base import Env, StepResult

GRAVITY = 9.8
CART_MASS = 1.0
POLE_MASS = 0.1
TOTAL_MASS = CART_MASS + POLE_MASS
HALF_LENGTH = 0.5
POLE_MASS_LENGTH = POLE_MASS * HALF_LENGTH
FORCE_MAG = 10.0
TAU = 0.02
X_LIMIT = 2.4


@dataclass
class CartPoleState:
    x: float
    x_dot: float
    theta: float
    theta_dot: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.x_dot, self.theta, self.theta_dot])


def accelerations(state: CartPoleState, force: float) -> tuple:
    """(x_acc, theta_acc) for the given state and horizontal force on the cart."""
    cos_t, sin_t = math.cos(state.theta), math.sin(state.theta)
    temp = (force + POLE_MASS_LENGTH * state.theta_dot ** 2 * sin_t) / TOTAL_MASS
    theta_acc = (GRAVITY * sin_t - cos_t * temp) / (
        HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos_t ** 2 / TOTAL_MASS)
    )
    x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos_t / TOTAL_MASS
    return x_acc, theta_acc


def euler_step(state: CartPoleState, action: int) -> CartPoleState:
    force = FORCE_MAG if action == 1 else -FORCE_MAG
    x_acc, theta_acc = accelerations(state, force)
    return CartPoleState(
        state.x + TAU * state.x_dot,
        state.x_dot + TAU * x_acc,
        state.theta + TAU * state.theta_dot,
        state.theta_dot + TAU * theta_acc,
    )


class CartPole(Env):
    def __init__(self, max_steps: int = 200, angle_limit_deg: float = 12.0):
        super().__init__()
        self.spec = EnvSpec("cartpole", 4, 2, max_steps, 195.0)
        self.angle_limit = math.radians(angle_limit_deg)
        self.state = CartPoleState(0.0, 0.0, 0.0, 0.0)

    def is_terminal(self, state: CartPoleState | None = None) -> bool:
        s = self.state if state is None else state
        return abs(s.x) > X_LIMIT or abs(s.theta) > self.angle_limit

    def set_state(self, state: CartPoleState) -> None:
        self.state = state
        self.step_count = 0
        self._done = False

    def reset(self, rng) -> np.ndarray:
        self.set_state(CartPoleState(*rng.uniform(-0.05, 0.05, size=4)))
        return self.state.as_array()

    def step(self, action: int) -> StepResult:
        self._begin_step(action, 2)
        self.state = euler_step(self.state, int(action))
        return self._finish(self.state.as_array(), 1.0, self.is_terminal())
