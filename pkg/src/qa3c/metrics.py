"""Per-episode records and the CSV sink that serializes them."""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path

from .exceptions import StorageError

HEADER = ("global_episode", "worker_id", "steps", "return", "ma100", "wall_clock_s")
WINDOW = 100


@dataclass
class EpisodeRecord:
    global_episode: int
    worker_id: int
    steps: int
    episode_return: float
    ma100: float = math.nan
    wall_clock_s: float = 0.0

    def row(self) -> list:
        return [
            str(self.global_episode), str(self.worker_id), str(self.steps),
            repr(float(self.episode_return)), repr(float(self.ma100)), f"{self.wall_clock_s:.6f}",
        ]


class MetricsSink:
    """Fills in the moving average and writes records in emission order.

    Records are kept in memory as well, so a sink with ``path=None`` is a
    plain collector.
    """

    def __init__(self, path=None):
        self.records = []
        self._window = deque(maxlen=WINDOW)
        self._fh = None
        self._writer = None
        if path is not None:
            try:
                self._fh = open(path, "w", newline="")
            except OSError as exc:
                raise StorageError(f"cannot open metrics file {path}: {exc}") from exc
            self._writer = csv.writer(self._fh, lineterminator="\n")
            self._writer.writerow(HEADER)

    def emit(self, record: EpisodeRecord) -> EpisodeRecord:
        self._window.append(record.episode_return)
        record.ma100 = sum(self._window) / len(self._window)
        self.records.append(record)
        if self._writer is not None:
            self._writer.writerow(record.row())
            self._fh.flush()
        return record

    @property
    def last_ma100(self) -> float:
        return self.records[-1].ma100 if self.records else math.nan

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_metrics(path) -> list:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise StorageError(f"cannot read metrics file {path}: {exc}") from exc
    if not rows or tuple(rows[0]) != HEADER:
        raise StorageError(f"{path} does not start with the metrics header")
    return [
        EpisodeRecord(int(r[0]), int(r[1]), int(r[2]), float(r[3]), float(r[4]), float(r[5]))
        for r in rows[1:]
    ]


def moving_average(returns, window: int = WINDOW) -> list:
    out, buf = [], deque(maxlen=window)
    for r in returns:
        buf.append(r)
        out.append(sum(buf) / len(buf))
    return out


def ensure_dir(path) -> Path:
    p = Path(path)
    try:
        p.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StorageError(f"cannot create output directory {p}: {exc}") from exc
    return p
