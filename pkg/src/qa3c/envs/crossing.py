"""SimpleCrossing grid world: reach the far corner through gaps in full-span walls.

The agent sees a 7x7 window ahead of it; each cell is encoded as
``(object, color, state)`` with object codes 0 unseen/out of bounds,
1 empty, 2 wall, 3 goal.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ..exceptions import ConfigurationError
from ..models import EnvSpec
from .base import Env, StepResult

UNSEEN, EMPTY, WALL, GOAL = 0, 1, 2, 3
VIEW = 7
# east, south, west, north in (dx, dy) with y growing downward
DIRECTIONS = ((1, 0), (0, 1), (-1, 0), (0, -1))
TURN_LEFT, TURN_RIGHT, FORWARD = 0, 1, 2
N_ACTIONS = 6


@dataclass
class GridState:
    grid: np.ndarray  # indexed [row, col]
    agent_pos: tuple  # (col, row)
    agent_dir: int
    step_count: int
    n_crossings: int


def shortest_path_length(grid: np.ndarray, start: tuple, goal: tuple):
    """Breadth-first search over non-wall cells; ``None`` when unreachable."""
    rows, cols = grid.shape
    dist = {start: 0}
    queue = deque([start])
    while queue:
        x, y = queue.popleft()
        if (x, y) == goal:
            return dist[(x, y)]
        for dx, dy in DIRECTIONS:
            nx, ny = x + dx, y + dy
            if 0 <= nx < cols and 0 <= ny < rows and grid[ny, nx] != WALL and (nx, ny) not in dist:
                dist[(nx, ny)] = dist[(x, y)] + 1
                queue.append((nx, ny))
    return None


def generate_grid(rng, n_crossings: int, size: int = 9, max_attempts: int = 1000) -> np.ndarray:
    """Border walls plus ``n_crossings`` full-span interior walls, one gap each.

    Wall orientation alternates starting from a random one; wall
    coordinates are distinct even values and gaps sit at odd values.  Gap
    positions are redrawn until the goal is reachable.
    """
    evens = list(range(2, size - 2, 2))
    odds = list(range(1, size - 1, 2))
    if not 1 <= n_crossings <= 2 * len(evens):
        raise ConfigurationError(f"cannot place {n_crossings} crossing walls on a {size}x{size} grid")
    first = int(rng.integers(2))
    orientations = [(first + i) % 2 for i in range(n_crossings)]  # 0 vertical, 1 horizontal
    n_vertical = orientations.count(0)
    if max(n_vertical, n_crossings - n_vertical) > len(evens):
        raise ConfigurationError(f"cannot place {n_crossings} crossing walls on a {size}x{size} grid")
    xs = list(rng.choice(evens, size=n_vertical, replace=False))
    ys = list(rng.choice(evens, size=n_crossings - n_vertical, replace=False))
    start, goal = (1, 1), (size - 2, size - 2)
    for _ in range(max_attempts):
        grid = np.full((size, size), EMPTY, dtype=np.int8)
        grid[0, :] = grid[-1, :] = grid[:, 0] = grid[:, -1] = WALL
        walls = []
        for x in xs:
            grid[1:-1, x] = WALL
            walls.append((0, x, int(rng.choice(odds))))
        for y in ys:
            grid[y, 1:-1] = WALL
            walls.append((1, y, int(rng.choice(odds))))
        for orient, coord, gap in walls:
            if orient == 0:
                grid[gap, coord] = EMPTY
            else:
                grid[coord, gap] = EMPTY
        grid[goal[1], goal[0]] = GOAL
        if shortest_path_length(grid, start, goal) is not None:
            return grid
    raise ConfigurationError(f"no solvable layout found in {max_attempts} attempts")


def _view_offsets():
    """World offsets of every view cell, per facing direction: shape (4, 7, 7, 2)."""
    out = np.zeros((4, VIEW, VIEW, 2), dtype=int)
    for d, (dx, dy) in enumerate(DIRECTIONS):
        rx, ry = -dy, dx  # the agent's right-hand side
        for r in range(VIEW):
            for c in range(VIEW):
                ahead, side = VIEW - 1 - r, c - VIEW // 2
                out[d, r, c] = (ahead * dx + side * rx, ahead * dy + side * ry)
    return out


_OFFSETS = _view_offsets()


def observe(state: GridState) -> np.ndarray:
    """Flattened ``(row, col, channel)`` encoding of the 7x7 view, 147 floats."""
    grid = state.grid
    rows, cols = grid.shape
    off = _OFFSETS[state.agent_dir]
    xs = state.agent_pos[0] + off[..., 0]
    ys = state.agent_pos[1] + off[..., 1]
    inside = (xs >= 0) & (xs < cols) & (ys >= 0) & (ys < rows)
    codes = np.zeros((VIEW, VIEW), dtype=float)
    codes[inside] = grid[ys[inside], xs[inside]]
    obs = np.zeros((VIEW, VIEW, 3))
    obs[..., 0] = codes
    return obs.ravel()


class SimpleCrossing(Env):
    def __init__(self, n_crossings: int = 1, size: int = 9, max_steps: int | None = None):
        super().__init__()
        self.size = size
        self.n_crossings = n_crossings
        max_steps = 4 * size * size if max_steps is None else max_steps
        self.spec = EnvSpec(f"crossing-s{size}n{n_crossings}", VIEW * VIEW * 3, N_ACTIONS, max_steps)
        self.state = None

    @property
    def reward_horizon(self) -> int:
        return 4 * self.size * self.size

    def set_state(self, state: GridState) -> None:
        self.state = state
        self.step_count = state.step_count
        self._done = False

    def reset(self, rng) -> np.ndarray:
        grid = generate_grid(rng, self.n_crossings, self.size)
        self.set_state(GridState(grid, (1, 1), 0, 0, self.n_crossings))
        return observe(self.state)

    def step(self, action: int) -> StepResult:
        self._begin_step(action, N_ACTIONS)
        s = self.state
        s.step_count = self.step_count
        reward, terminal = 0.0, False
        if action == TURN_LEFT:
            s.agent_dir = (s.agent_dir - 1) % 4
        elif action == TURN_RIGHT:
            s.agent_dir = (s.agent_dir + 1) % 4
        elif action == FORWARD:
            dx, dy = DIRECTIONS[s.agent_dir]
            nx, ny = s.agent_pos[0] + dx, s.agent_pos[1] + dy
            cell = s.grid[ny, nx]
            if cell != WALL:
                s.agent_pos = (nx, ny)
                if cell == GOAL:
                    terminal = True
                    reward = 1.0 - 0.9 * (s.step_count / self.reward_horizon)
        return self._finish(observe(s), reward, terminal)
