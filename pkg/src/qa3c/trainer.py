"""Asynchronous advantage actor-critic training over a shared parameter store.

Each worker keeps private copies of the actor and critic, collects up to
``sync_interval`` transitions, turns them into n-step returns, computes
gradients locally and applies them to the global store under an exclusive
lock, using Adam moments that live in the store.  With more than one
worker the workers are forked processes and the store lives in shared
memory.
"""

from __future__ import annotations

import heapq
import logging
import math
import multiprocessing as mp
import os
import queue as queue_mod
import threading
import time
import traceback
import zlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import autodiff as ad
from .envs import ENV_NAMES, make_env
from .exceptions import ConfigurationError, QA3CError, UsageError
from .metrics import EpisodeRecord, MetricsSink
from .models import VARIANTS, build_actor_critic, policy_forward, sample_action, value_forward

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    env: str = "cartpole"
    variant: str = "quantum"
    total_episodes: int = 0
    sync_interval: int = 5
    gamma: float = 0.9
    lr: float = 1e-4
    beta1: float = 0.92
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)
    seed: int = 0
    entropy_coef: float = 0.0
    max_grad_norm: Optional[float] = None
    n_qubits: int = 8
    vqc_layers: int = 2
    max_steps_per_episode: Optional[int] = None
    cartpole_angle_limit_deg: float = 12.0

    def validate(self) -> None:
        if self.env not in ENV_NAMES:
            raise ConfigurationError(f"env: unknown environment {self.env!r}")
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"variant: must be one of {VARIANTS}, got {self.variant!r}")
        checks = {
            "total_episodes": self.total_episodes >= 0,
            "sync_interval": self.sync_interval >= 1,
            "gamma": 0.0 < self.gamma <= 1.0,
            "lr": self.lr > 0,
            "beta1": 0.0 <= self.beta1 < 1.0,
            "beta2": 0.0 <= self.beta2 < 1.0,
            "adam_epsilon": self.adam_epsilon > 0,
            "workers": self.workers >= 1,
            "entropy_coef": self.entropy_coef >= 0,
            "max_grad_norm": self.max_grad_norm is None or self.max_grad_norm > 0,
            "n_qubits": 1 <= self.n_qubits <= 12,
            "vqc_layers": self.vqc_layers >= 1,
            "max_steps_per_episode": self.max_steps_per_episode is None or self.max_steps_per_episode >= 1,
            "cartpole_angle_limit_deg": self.cartpole_angle_limit_deg > 0,
        }
        for key, ok in checks.items():
            if not ok:
                raise ConfigurationError(f"{key}: invalid value {getattr(self, key)!r}")

    def make_env(self):
        return make_env(self.env, self.max_steps_per_episode, self.cartpole_angle_limit_deg)


# ---------------------------------------------------------------------------
# returns and gradients


def compute_returns(rewards, bootstrap: float, gamma: float) -> list:
    """n-step discounted returns, aligned with ``rewards``."""
    out = [0.0] * len(rewards)
    R = float(bootstrap)
    for i in range(len(rewards) - 1, -1, -1):
        R = rewards[i] + gamma * R
        out[i] = R
    return out


@dataclass
class RolloutBuffer:
    observations: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    bootstrap: float = 0.0

    def add(self, obs, action: int, reward: float) -> None:
        self.observations.append(obs)
        self.actions.append(action)
        self.rewards.append(reward)

    def clear(self) -> None:
        self.observations.clear()
        self.actions.clear()
        self.rewards.clear()
        self.bootstrap = 0.0

    def __len__(self):
        return len(self.rewards)


def _complete(bundle, model):
    return {name: np.asarray(bundle.get(name, np.zeros(shape)), dtype=float).reshape(shape)
            for name, shape in model.shapes().items()}


def actor_loss(actor, observations, actions, advantages, entropy_coef: float = 0.0):
    """Scalar node: ``sum_i -log pi(a_i|s_i) * A_i`` (minus an optional entropy bonus)."""
    logits, _ = actor.graph(np.asarray(observations, dtype=float))
    logp = ad.log_softmax_node(logits)
    loss = ad.total(ad.pick(logp, actions) * (-np.asarray(advantages, dtype=float)))
    if entropy_coef:
        neg_entropy = ad.total(ad.softmax_node(logits) * logp)
        loss = loss + neg_entropy * entropy_coef
    return loss


def critic_loss(critic, observations, returns):
    """Scalar node: ``sum_i (R_i - V(s_i))**2``."""
    out, _ = critic.graph(np.asarray(observations, dtype=float))
    return ad.total(ad.square(np.asarray(returns, dtype=float) - ad.column(out, 0)))


def accumulate_gradients(buffer: RolloutBuffer, actor, critic, gamma: float, entropy_coef: float = 0.0):
    """Loss gradients for one rollout: ``(d_actor, d_critic)`` as name -> array bundles.

    The critic's value inside the advantage is a constant for the actor
    gradient.  Both gradients point uphill on a loss, so a minimizing
    optimizer follows the policy-gradient ascent direction.
    """
    if len(buffer) == 0:
        raise UsageError("accumulate_gradients needs a non-empty rollout")
    obs = np.asarray(buffer.observations, dtype=float)
    returns = np.asarray(compute_returns(buffer.rewards, buffer.bootstrap, gamma))
    values = critic.forward(obs)[:, 0]
    d_actor = ad.backward(actor_loss(actor, obs, buffer.actions, returns - values, entropy_coef))
    d_critic = ad.backward(critic_loss(critic, obs, returns))
    return _complete(d_actor, actor), _complete(d_critic, critic)


def clip_by_norm(g: np.ndarray, max_norm: Optional[float]) -> np.ndarray:
    if max_norm is None:
        return g
    norm = float(np.linalg.norm(g))
    return g * (max_norm / norm) if norm > max_norm else g


# ---------------------------------------------------------------------------
# global store


_COUNTERS = ("t_adam", "T", "claimed", "stop", "version")


class GlobalStore:
    """Global actor/critic parameters, shared Adam moments and run counters.

    ``snapshot`` reads all parameters atomically, ``apply`` performs one
    exclusive optimizer step, and the episode counters are changed under
    the same lock.  With ``shared=True`` everything lives in shared memory
    and the lock is a process lock, so the store can be inherited by
    forked workers.
    """

    def __init__(self, theta, theta_v, shared: bool = False, ctx=None):
        theta = np.asarray(theta, dtype=float)
        theta_v = np.asarray(theta_v, dtype=float)
        sizes = {"theta": theta.size, "theta_v": theta_v.size, "m": theta.size, "v": theta.size,
                 "m_v": theta_v.size, "v_v": theta_v.size}
        self.shared = shared
        if shared:
            ctx = ctx or mp.get_context("fork")
            self._lock = ctx.Lock()
            self._buffers = {k: ctx.RawArray("d", n) for k, n in sizes.items()}
            self._buffers["counters"] = ctx.RawArray("q", len(_COUNTERS))
            arrays = {k: np.frombuffer(buf, dtype=np.float64 if k != "counters" else np.int64)
                      for k, buf in self._buffers.items()}
        else:
            self._lock = threading.Lock()
            arrays = {k: np.zeros(n) for k, n in sizes.items()}
            arrays["counters"] = np.zeros(len(_COUNTERS), dtype=np.int64)
        self.theta, self.theta_v = arrays["theta"], arrays["theta_v"]
        self.m, self.v = arrays["m"], arrays["v"]
        self.m_v, self.v_v = arrays["m_v"], arrays["v_v"]
        self._counters = arrays["counters"]
        self.theta[:] = theta
        self.theta_v[:] = theta_v

    def _get(self, name):
        return int(self._counters[_COUNTERS.index(name)])

    def _set(self, name, value):
        self._counters[_COUNTERS.index(name)] = value

    t_adam = property(lambda self: self._get("t_adam"))
    T = property(lambda self: self._get("T"))
    version = property(lambda self: self._get("version"))

    @property
    def stop(self) -> bool:
        return bool(self._get("stop"))

    def request_stop(self) -> None:
        self._set("stop", 1)

    @property
    def lock(self):
        return self._lock

    def snapshot(self):
        """``(theta, theta_v, version)`` copied under the lock."""
        with self._lock:
            return self.theta.copy(), self.theta_v.copy(), self._get("version")

    def apply(self, d_theta, d_theta_v, config: TrainConfig) -> int:
        with self._lock:
            adam_apply(self, d_theta, d_theta_v, config)
            self._set("version", self._get("version") + 1)
            self._after_apply()
            return self._get("version")

    def _after_apply(self):
        pass

    def claim_episode(self, total: int) -> bool:
        with self._lock:
            if self._get("stop") or self._get("claimed") >= total:
                return False
            self._set("claimed", self._get("claimed") + 1)
            return True

    def finish_episode(self) -> int:
        with self._lock:
            t = self._get("T") + 1
            self._set("T", t)
            return t


def adam_apply(store: GlobalStore, d_theta, d_theta_v, config: TrainConfig) -> None:
    """One Adam step on both parameter sets with the store's shared moments.

    The caller must hold ``store.lock`` (``GlobalStore.apply`` does).
    """
    d_theta = np.asarray(d_theta, dtype=float)
    d_theta_v = np.asarray(d_theta_v, dtype=float)
    if d_theta.shape != store.theta.shape or d_theta_v.shape != store.theta_v.shape:
        raise ConfigurationError(
            f"gradient shapes {d_theta.shape}/{d_theta_v.shape} do not match "
            f"parameters {store.theta.shape}/{store.theta_v.shape}"
        )
    t = store._get("t_adam") + 1
    store._set("t_adam", t)
    b1, b2 = config.beta1, config.beta2
    c1, c2 = 1.0 - b1 ** t, 1.0 - b2 ** t
    for p, m, v, g in ((store.theta, store.m, store.v, d_theta), (store.theta_v, store.m_v, store.v_v, d_theta_v)):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= config.lr * (m / c1) / (np.sqrt(v / c2) + config.adam_epsilon)


class InstrumentedStore(GlobalStore):
    """Store that logs a checksum of every published parameter state and of every snapshot taken.

    Used to check that readers only ever see states produced by a whole
    number of completed updates.  Stops the run after ``stop_after``
    updates when given.
    """

    def __init__(self, theta, theta_v, capacity: int, shared: bool = False, stop_after: Optional[int] = None):
        super().__init__(theta, theta_v, shared)
        if shared:
            ctx = mp.get_context("fork")
            self._log_buf = ctx.RawArray("q", capacity + 1)
            self._obs_buf = ctx.RawArray("q", 2 * capacity)
            self._n_obs_buf = ctx.RawArray("q", 1)
            self.published = np.frombuffer(self._log_buf, dtype=np.int64)
            self.observed = np.frombuffer(self._obs_buf, dtype=np.int64).reshape(capacity, 2)
            self._n_obs = np.frombuffer(self._n_obs_buf, dtype=np.int64)
        else:
            self.published = np.zeros(capacity + 1, dtype=np.int64)
            self.observed = np.zeros((capacity, 2), dtype=np.int64)
            self._n_obs = np.zeros(1, dtype=np.int64)
        self.capacity = capacity
        self.stop_after = stop_after
        self.published[0] = self.checksum(self.theta, self.theta_v)

    @staticmethod
    def checksum(theta, theta_v) -> int:
        return zlib.crc32(np.ascontiguousarray(theta).tobytes() + np.ascontiguousarray(theta_v).tobytes())

    def _after_apply(self):
        version = self._get("version")
        if version < len(self.published):
            self.published[version] = self.checksum(self.theta, self.theta_v)
        if self.stop_after is not None and version >= self.stop_after:
            self._set("stop", 1)

    def snapshot(self):
        theta, theta_v, version = super().snapshot()
        digest = self.checksum(theta, theta_v)
        with self._lock:
            i = int(self._n_obs[0])
            if i < self.capacity:
                self.observed[i] = (version, digest)
                self._n_obs[0] = i + 1
        return theta, theta_v, version

    @property
    def observations(self) -> np.ndarray:
        return self.observed[: int(self._n_obs[0])].copy()


# ---------------------------------------------------------------------------
# workers


def _sync(store, actor, critic):
    theta, theta_v, _ = store.snapshot()
    actor.set_flat(theta)
    critic.set_flat(theta_v)


def worker_loop(worker_id: int, store: GlobalStore, config: TrainConfig, env, rng, emit,
                actor, critic, start_time: Optional[float] = None) -> None:
    """Run episodes until the store's episode budget is used up or a stop is requested.

    ``actor`` and ``critic`` are private copies that this loop overwrites
    from the store.  ``emit`` receives one :class:`EpisodeRecord` per
    finished episode.
    """
    start_time = time.perf_counter() if start_time is None else start_time
    buffer = RolloutBuffer()
    while store.claim_episode(config.total_episodes):
        _sync(store, actor, critic)
        obs = env.reset(rng)
        buffer.clear()
        steps, episode_return = 0, 0.0
        while True:
            action = sample_action(policy_forward(actor, obs), rng)
            result = env.step(action)
            buffer.add(obs, action, result.reward)
            steps += 1
            episode_return += result.reward
            obs = result.obs
            done = result.terminal or result.truncated
            if done or len(buffer) >= config.sync_interval:
                buffer.bootstrap = 0.0 if result.terminal else value_forward(critic, obs)
                d_actor, d_critic = accumulate_gradients(buffer, actor, critic, config.gamma, config.entropy_coef)
                store.apply(
                    clip_by_norm(actor.flatten_grads(d_actor), config.max_grad_norm),
                    clip_by_norm(critic.flatten_grads(d_critic), config.max_grad_norm),
                    config,
                )
                _sync(store, actor, critic)
                buffer.clear()
            if done:
                break
        index = store.finish_episode()
        emit(EpisodeRecord(index, worker_id, steps, episode_return, math.nan, time.perf_counter() - start_time))


@dataclass
class TrainResult:
    episodes: int
    final_ma100: float
    wall_time_s: float
    actor: object
    critic: object
    records: list
    updates: int


def _seeds(seed: int, workers: int):
    children = np.random.SeedSequence(seed).spawn(workers + 1)
    return children[0], children[1:]


def init_models(config: TrainConfig):
    init_seq, _ = _seeds(config.seed, config.workers)
    spec = config.make_env().spec
    return build_actor_critic(spec, config.variant, np.random.default_rng(init_seq),
                              config.n_qubits, config.vqc_layers)


def _child(worker_id, store, config, seq, actor, critic, q, start):
    try:
        worker_loop(worker_id, store, config, config.make_env(), np.random.default_rng(seq),
                    lambda rec: q.put(("record", rec)), actor.copy(), critic.copy(), start)
        q.put(("done", worker_id, None))
    except BaseException as exc:  # noqa: BLE001 - reported to the parent
        store.request_stop()
        q.put(("done", worker_id, (type(exc).__name__, str(exc), traceback.format_exc())))


def train(config: TrainConfig, sink: Optional[MetricsSink] = None, actor=None, critic=None,
          store_factory=None, stop_when=None) -> TrainResult:
    """Train with ``config.workers`` workers; returns final models and the episode records.

    ``actor``/``critic`` override the seeded initialization (e.g. from a
    checkpoint).  ``store_factory(theta, theta_v, shared)`` may supply a
    custom store.  ``stop_when(record)`` is called on every emitted record
    (after its ma100 is filled in); returning True ends the run early, with
    episodes already in progress allowed to finish.
    """
    config.validate()
    sink = sink if sink is not None else MetricsSink()
    if actor is None or critic is None:
        actor, critic = init_models(config)
    spec = config.make_env().spec
    if actor.obs_dim != spec.obs_dim or actor.head_dim != spec.n_actions or critic.obs_dim != spec.obs_dim:
        raise ConfigurationError(f"model dimensions do not match environment {spec.name!r}")
    _, worker_seqs = _seeds(config.seed, config.workers)
    shared = config.workers > 1
    make_store = store_factory or (lambda th, thv, sh: GlobalStore(th, thv, shared=sh))
    store = make_store(actor.flat(), critic.flat(), shared)
    start = time.perf_counter()

    def emit(record):
        sink.emit(record)
        if stop_when is not None and stop_when(record):
            store.request_stop()

    if config.total_episodes > 0:
        if not shared:
            worker_loop(0, store, config, config.make_env(), np.random.default_rng(worker_seqs[0]),
                        emit, actor.copy(), critic.copy(), start)
        else:
            _run_processes(config, store, worker_seqs, actor, critic, emit, start)

    actor, critic = actor.copy(), critic.copy()
    theta, theta_v, _ = store.snapshot()
    actor.set_flat(theta)
    critic.set_flat(theta_v)
    return TrainResult(len(sink.records), sink.last_ma100, time.perf_counter() - start,
                       actor, critic, sink.records, store.version)


def _run_processes(config, store, worker_seqs, actor, critic, emit, start):
    ctx = mp.get_context("fork")
    q = ctx.Queue()
    procs = [
        ctx.Process(target=_child, args=(w, store, config, worker_seqs[w], actor, critic, q, start), daemon=True)
        for w in range(config.workers)
    ]
    for p in procs:
        p.start()
    pending, expected, finished, failure = [], 1, set(), None
    try:
        while len(finished) < len(procs):
            try:
                msg = q.get(timeout=1.0)
            except queue_mod.Empty:
                for w, p in enumerate(procs):
                    if w not in finished and p.exitcode not in (None, 0):
                        finished.add(w)
                        store.request_stop()
                        failure = failure or ("WorkerDied", f"worker {w} exited with code {p.exitcode}", "")
                continue
            if msg[0] == "record":
                heapq.heappush(pending, (msg[1].global_episode, msg[1]))
                while pending and pending[0][0] == expected:
                    emit(heapq.heappop(pending)[1])
                    expected += 1
            else:
                finished.add(msg[1])
                if msg[2] is not None and failure is None:
                    failure = msg[2]
    except BaseException:
        store.request_stop()
        raise
    finally:
        for p in procs:
            p.join(timeout=30)
            if p.is_alive():
                p.terminate()
    while pending:
        emit(heapq.heappop(pending)[1])
    if failure is not None:
        name, message, tb = failure
        log.error("worker failure:\n%s", tb)
        err = next((cls for cls in QA3CError.__subclasses__() if cls.__name__ == name), None)
        raise (err or RuntimeError)(f"worker failed: {name}: {message}")
