"""Run orchestration behind the command-line subcommands."""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig, dump_config
from .envs import make_env
from .exceptions import ConfigurationError, StorageError, UsageError
from .metrics import MetricsSink, ensure_dir
from .models import greedy_action, load_checkpoint, policy_forward, save_checkpoint
from .trainer import TrainResult, train

log = logging.getLogger(__name__)

METRICS_FILE = "metrics.csv"
RESOLVED_FILE = "config.resolved"
CHECKPOINT_FILE = "final.ckpt"


def _check_writable(directory: Path) -> None:
    if not os.access(directory, os.W_OK):
        raise StorageError(f"output directory {directory} is not writable")


def load_initial_models(path, config: RunConfig):
    actor, critic, meta = load_checkpoint(path)
    spec = config.make_env().spec
    expected = (config.variant, config.n_qubits, config.vqc_layers, spec.obs_dim, spec.n_actions)
    found = (actor.variant, actor.n_qubits, actor.n_layers, actor.obs_dim, actor.head_dim)
    if found != expected:
        raise ConfigurationError(
            f"checkpoint {path} has (variant, n_qubits, n_layers, obs_dim, n_actions) = {found}, "
            f"the run needs {expected}"
        )
    return actor, critic


def run_train(config: RunConfig, init_checkpoint=None) -> TrainResult:
    """Train and write ``metrics.csv``, ``config.resolved`` and ``final.ckpt`` under ``config.out_dir``."""
    config.validate()
    out = ensure_dir(config.out_dir)
    _check_writable(out)
    actor = critic = None
    if init_checkpoint is not None:
        actor, critic = load_initial_models(init_checkpoint, config)
    try:
        (out / RESOLVED_FILE).write_text(dump_config(config))
    except OSError as exc:
        raise StorageError(f"cannot write {out / RESOLVED_FILE}: {exc}") from exc
    with MetricsSink(out / METRICS_FILE) as sink:
        result = train(config.train_config(), sink, actor, critic)
    save_checkpoint(out / CHECKPOINT_FILE, result.actor, result.critic,
                    {"env": config.env, "seed": config.seed, "episodes": result.episodes})
    log.info("trained %d episodes in %.1f s, final ma100 %.2f", result.episodes, result.wall_time_s,
             result.final_ma100)
    return result


@dataclass
class EvalResult:
    returns: list
    steps: list

    @property
    def mean_return(self) -> float:
        return float(np.mean(self.returns))


def greedy_episodes(actor, env, episodes: int, seed: int) -> EvalResult:
    rng = np.random.default_rng(seed)
    returns, steps = [], []
    for _ in range(episodes):
        obs = env.reset(rng)
        total, n = 0.0, 0
        while True:
            result = env.step(greedy_action(policy_forward(actor, obs)))
            total += result.reward
            n += 1
            obs = result.obs
            if result.terminal or result.truncated:
                break
        returns.append(total)
        steps.append(n)
    return EvalResult(returns, steps)


def run_eval(checkpoint, env_name: str, episodes: int, seed: int, out_path=None) -> EvalResult:
    """Greedy (argmax) evaluation of a checkpoint's actor; writes a per-episode CSV when ``out_path`` is set."""
    if episodes < 1:
        raise UsageError("eval needs at least one episode; the mean return of zero episodes is undefined")
    actor, _, _ = load_checkpoint(checkpoint)
    env = make_env(env_name)
    if actor.obs_dim != env.spec.obs_dim or actor.head_dim != env.spec.n_actions:
        raise ConfigurationError(
            f"checkpoint expects obs_dim={actor.obs_dim}, n_actions={actor.head_dim}; "
            f"{env_name} has obs_dim={env.spec.obs_dim}, n_actions={env.spec.n_actions}"
        )
    result = greedy_episodes(actor, env, episodes, seed)
    if out_path is not None:
        try:
            with open(out_path, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(("episode", "steps", "return"))
                for i, (n, r) in enumerate(zip(result.steps, result.returns), 1):
                    writer.writerow((i, n, repr(float(r))))
        except OSError as exc:
            raise StorageError(f"cannot write {out_path}: {exc}") from exc
    return result
