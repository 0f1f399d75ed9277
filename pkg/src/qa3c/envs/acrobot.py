"""Two-link Acrobot swing-up, integrated with one RK4 step per action."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..models import EnvSpec
from .base import Env, StepResult

DT = 0.2
LINK_MASS_1 = LINK_MASS_2 = 1.0
LINK_LENGTH_1 = 1.0
LINK_COM_1 = LINK_COM_2 = 0.5
LINK_MOI = 1.0
GRAVITY = 9.8
MAX_VEL_1 = 4 * math.pi
MAX_VEL_2 = 9 * math.pi
TORQUES = (-1.0, 0.0, 1.0)


@dataclass
class AcrobotState:
    theta1: float
    theta2: float
    theta1_dot: float
    theta2_dot: float

    def observation(self) -> np.ndarray:
        return np.array([
            math.cos(self.theta1), math.sin(self.theta1),
            math.cos(self.theta2), math.sin(self.theta2),
            self.theta1_dot, self.theta2_dot,
        ])


def derivatives(s: tuple, torque: float) -> tuple:
    theta1, theta2, dtheta1, dtheta2 = s
    m1, m2, l1 = LINK_MASS_1, LINK_MASS_2, LINK_LENGTH_1
    lc1, lc2, i1, i2 = LINK_COM_1, LINK_COM_2, LINK_MOI, LINK_MOI
    g = GRAVITY
    d1 = m1 * lc1 ** 2 + m2 * (l1 ** 2 + lc2 ** 2 + 2 * l1 * lc2 * math.cos(theta2)) + i1 + i2
    d2 = m2 * (lc2 ** 2 + l1 * lc2 * math.cos(theta2)) + i2
    phi2 = m2 * lc2 * g * math.cos(theta1 + theta2 - math.pi / 2.0)
    phi1 = (
        -m2 * l1 * lc2 * dtheta2 ** 2 * math.sin(theta2)
        - 2 * m2 * l1 * lc2 * dtheta2 * dtheta1 * math.sin(theta2)
        + (m1 * lc1 + m2 * l1) * g * math.cos(theta1 - math.pi / 2)
        + phi2
    )
    ddtheta2 = (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 ** 2 * math.sin(theta2) - phi2) / (
        m2 * lc2 ** 2 + i2 - d2 ** 2 / d1
    )
    ddtheta1 = -(d2 * ddtheta2 + phi1) / d1
    return dtheta1, dtheta2, ddtheta1, ddtheta2


def rk4_step(s: tuple, torque: float, dt: float = DT) -> tuple:
    def shifted(k, h):
        return tuple(a + h * b for a, b in zip(s, k))

    k1 = derivatives(s, torque)
    k2 = derivatives(shifted(k1, dt / 2), torque)
    k3 = derivatives(shifted(k2, dt / 2), torque)
    k4 = derivatives(shifted(k3, dt), torque)
    return tuple(a + dt / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4) for a, b1, b2, b3, b4 in zip(s, k1, k2, k3, k4))


def wrap(x: float, low: float, high: float) -> float:
    span = high - low
    while x > high:
        x -= span
    while x < low:
        x += span
    return x


def tip_height(theta1: float, theta2: float) -> float:
    return -math.cos(theta1) - math.cos(theta1 + theta2)


class Acrobot(Env):
    def __init__(self, max_steps: int = 500):
        super().__init__()
        self.spec = EnvSpec("acrobot", 6, 3, max_steps, -100.0)
        self.state = AcrobotState(0.0, 0.0, 0.0, 0.0)

    def is_terminal(self, state: AcrobotState | None = None) -> bool:
        s = self.state if state is None else state
        return tip_height(s.theta1, s.theta2) > 1.0

    def set_state(self, state: AcrobotState) -> None:
        self.state = state
        self.step_count = 0
        self._done = False

    def reset(self, rng) -> np.ndarray:
        self.set_state(AcrobotState(*rng.uniform(-0.1, 0.1, size=4)))
        return self.state.observation()

    def step(self, action: int) -> StepResult:
        self._begin_step(action, 3)
        s = self.state
        t1, t2, d1, d2 = rk4_step((s.theta1, s.theta2, s.theta1_dot, s.theta2_dot), TORQUES[int(action)])
        self.state = AcrobotState(
            wrap(t1, -math.pi, math.pi),
            wrap(t2, -math.pi, math.pi),
            min(max(d1, -MAX_VEL_1), MAX_VEL_1),
            min(max(d2, -MAX_VEL_2), MAX_VEL_2),
        )
        terminal = self.is_terminal()
        return self._finish(self.state.observation(), 0.0 if terminal else -1.0, terminal)
