import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qa3c import trainer as tr
from qa3c.envs import env_spec
from qa3c.envs.base import Env
from qa3c.exceptions import ConfigurationError, NumericError, UsageError
from qa3c.metrics import MetricsSink
from qa3c.models import EnvSpec, build_actor_critic
from qa3c.trainer import (
    GlobalStore,
    InstrumentedStore,
    RolloutBuffer,
    TrainConfig,
    accumulate_gradients,
    adam_apply,
    compute_returns,
    train,
)


def test_defaults():
    c = TrainConfig()
    assert (c.sync_interval, c.gamma, c.lr, c.beta1, c.beta2, c.adam_epsilon) == (5, 0.9, 1e-4, 0.92, 0.999, 1e-8)
    assert c.entropy_coef == 0 and c.max_grad_norm is None


@pytest.mark.parametrize("key,value", [("gamma", 0.0), ("gamma", 1.5), ("sync_interval", 0), ("workers", 0),
                                       ("env", "pong"), ("variant", "hybrid"), ("lr", -1.0)])
def test_invalid_config_names_the_key(key, value):
    c = TrainConfig(total_episodes=1)
    setattr(c, key, value)
    with pytest.raises(ConfigurationError, match=key):
        c.validate()


def test_returns_hand_case():
    assert compute_returns([-1, -1, -1], 0.0, 0.9) == pytest.approx([-2.71, -1.9, -1.0])
    assert compute_returns([1.0], 10.0, 0.5) == [6.0]
    assert compute_returns([], 3.0, 0.9) == []


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=20), st.floats(-10, 10), st.floats(0.01, 1.0))
def test_returns_recursion(rewards, bootstrap, gamma):
    R = compute_returns(rewards, bootstrap, gamma)
    nxt = R[1:] + [bootstrap]
    for r, a, b in zip(rewards, R, nxt):
        assert a == r + gamma * b


def _numeric(loss_of_flat, theta, h=1e-6):
    g = np.zeros_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        g[i] = (loss_of_flat(theta + e) - loss_of_flat(theta - e)) / (2 * h)
    return g


@pytest.mark.parametrize("variant", ["classical", "quantum"])
def test_rollout_gradients_match_finite_differences(rng, variant):
    actor, critic = build_actor_critic(env_spec("cartpole"), variant, 3)
    buf = RolloutBuffer()
    for a in (0, 1, 1):
        buf.add(rng.normal(size=4), a, 1.0)
    buf.bootstrap = 0.7
    d_actor, d_critic = accumulate_gradients(buf, actor, critic, 0.9)
    obs = np.array(buf.observations)
    R = np.array(compute_returns(buf.rewards, buf.bootstrap, 0.9))
    adv = R - critic.forward(obs)[:, 0]

    def actor_loss(theta):
        m = actor.copy()
        m.set_flat(theta)
        z = m.forward(obs)
        logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        return -np.sum(logp[np.arange(3), buf.actions] * adv)

    def critic_loss(theta):
        m = critic.copy()
        m.set_flat(theta)
        return np.sum((R - m.forward(obs)[:, 0]) ** 2)

    assert np.allclose(actor.flatten_grads(d_actor), _numeric(actor_loss, actor.flat()), atol=1e-6)
    assert np.allclose(critic.flatten_grads(d_critic), _numeric(critic_loss, critic.flat()), atol=1e-6)


def test_entropy_bonus_changes_actor_gradient(rng):
    actor, critic = build_actor_critic(env_spec("cartpole"), "classical", 3)
    buf = RolloutBuffer()
    buf.add(rng.normal(size=4), 0, 1.0)
    g0, _ = accumulate_gradients(buf, actor, critic, 0.9)
    g1, _ = accumulate_gradients(buf, actor, critic, 0.9, entropy_coef=0.1)
    assert not np.allclose(actor.flatten_grads(g0), actor.flatten_grads(g1))


def test_empty_rollout_is_a_usage_error():
    actor, critic = build_actor_critic(env_spec("cartpole"), "classical", 0)
    with pytest.raises(UsageError):
        accumulate_gradients(RolloutBuffer(), actor, critic, 0.9)


def test_adam_matches_hand_computation(rng):
    cfg = TrainConfig()
    theta, theta_v = rng.normal(size=3), rng.normal(size=2)
    store = GlobalStore(theta, theta_v)
    m = np.zeros(3)
    v = np.zeros(3)
    p = theta.copy()
    for t in range(1, 4):
        g = rng.normal(size=3)
        store.apply(g, np.zeros(2), cfg)
        m = 0.92 * m + 0.08 * g
        v = 0.999 * v + 0.001 * g * g
        p = p - 1e-4 * (m / (1 - 0.92 ** t)) / (np.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
    assert np.allclose(store.theta, p, rtol=0, atol=1e-15)
    assert store.t_adam == 3 and store.version == 3
    with pytest.raises(ConfigurationError):
        store.apply(np.zeros(2), np.zeros(2), cfg)


def test_first_adam_step_moves_each_parameter_by_lr():
    store = GlobalStore(np.zeros(2), np.zeros(1))
    adam_apply(store, np.array([5.0, -0.01]), np.array([0.0]), TrainConfig())
    assert np.allclose(store.theta, [-1e-4, 1e-4], atol=1e-9)


def test_store_claims_exactly_the_budget():
    store = GlobalStore(np.zeros(1), np.zeros(1))
    assert [store.claim_episode(3) for _ in range(5)] == [True, True, True, False, False]
    store2 = GlobalStore(np.zeros(1), np.zeros(1))
    store2.request_stop()
    assert not store2.claim_episode(3)


def test_clip_by_norm():
    g = np.array([3.0, 4.0])
    assert np.allclose(tr.clip_by_norm(g, 1.0), [0.6, 0.8])
    assert tr.clip_by_norm(g, None) is g
    assert np.array_equal(tr.clip_by_norm(g, 10.0), g)


class _Corridor(Env):
    """Deterministic test env: reward 1 per step, truncated after 3 steps."""

    def __init__(self, terminal_at=None):
        super().__init__()
        self.spec = EnvSpec("corridor", 4, 2, 3)
        self.terminal_at = terminal_at

    def reset(self, rng):
        self.step_count = 0
        self._done = False
        return np.zeros(4)

    def step(self, action):
        self._begin_step(action, 2)
        return self._finish(np.full(4, self.step_count, dtype=float), 1.0, self.step_count == self.terminal_at)


@pytest.mark.parametrize("terminal_at,expect_zero", [(None, False), (3, True)])
def test_truncation_bootstraps_and_termination_does_not(monkeypatch, terminal_at, expect_zero):
    actor, critic = build_actor_critic(EnvSpec("corridor", 4, 2, 3), "classical", 0)
    critic.params["post.bias"][:] = 5.0
    seen = []
    real = tr.accumulate_gradients

    def spy(buffer, *args, **kw):
        seen.append((len(buffer), buffer.bootstrap))
        return real(buffer, *args, **kw)

    monkeypatch.setattr(tr, "accumulate_gradients", spy)
    cfg = TrainConfig(env="cartpole", variant="classical", total_episodes=1, workers=1, sync_interval=2)
    store = GlobalStore(actor.flat(), critic.flat())
    records = []
    tr.worker_loop(0, store, cfg, _Corridor(terminal_at), np.random.default_rng(0), records.append,
                   actor.copy(), critic.copy())
    assert [n for n, _ in seen] == [2, 1]
    assert seen[0][1] != 0.0  # rollout boundary mid-episode bootstraps from V
    assert (seen[1][1] == 0.0) == expect_zero
    assert records[0].steps == 3 and records[0].episode_return == 3.0


def _strip_wall_clock(records):
    return [(r.global_episode, r.worker_id, r.steps, r.episode_return, r.ma100) for r in records]


def test_single_worker_runs_are_reproducible():
    cfg = dict(env="cartpole", variant="quantum", total_episodes=4, workers=1, seed=11)
    a = train(TrainConfig(**cfg))
    b = train(TrainConfig(**cfg))
    assert _strip_wall_clock(a.records) == _strip_wall_clock(b.records)
    assert np.array_equal(a.actor.flat(), b.actor.flat())


def test_multi_worker_run_emits_every_episode_in_order():
    result = train(TrainConfig(env="cartpole", variant="classical", total_episodes=12, workers=3, seed=2))
    assert [r.global_episode for r in result.records] == list(range(1, 13))
    assert {r.worker_id for r in result.records} <= {0, 1, 2}
    assert result.updates >= 12
    returns = [r.episode_return for r in result.records]
    assert result.records[0].ma100 == returns[0]
    assert result.final_ma100 == pytest.approx(np.mean(returns))


def test_zero_episode_budget_returns_initial_models():
    cfg = TrainConfig(env="acrobot", variant="classical", total_episodes=0, workers=1, seed=4)
    actor, critic = tr.init_models(cfg)
    result = train(cfg)
    assert result.episodes == 0 and math.isnan(result.final_ma100)
    assert np.array_equal(result.actor.flat(), actor.flat())


def test_stop_when_ends_the_run_early():
    cfg = TrainConfig(env="cartpole", variant="classical", total_episodes=50, workers=1, seed=0)
    result = train(cfg, stop_when=lambda r: r.global_episode >= 3)
    assert result.episodes == 3


def test_mismatched_models_are_rejected():
    actor, critic = build_actor_critic(env_spec("acrobot"), "classical", 0)
    with pytest.raises(ConfigurationError):
        train(TrainConfig(env="cartpole", variant="classical", total_episodes=1, workers=1), actor=actor, critic=critic)


class _Exploding(Env):
    def __init__(self):
        super().__init__()
        self.spec = EnvSpec("cartpole", 4, 2, 200)

    def reset(self, rng):
        self.step_count = 0
        self._done = False
        return np.zeros(4)

    def step(self, action):
        raise NumericError("simulated blow-up")


def test_worker_failure_propagates(monkeypatch):
    monkeypatch.setattr(TrainConfig, "make_env", lambda self: _Exploding())
    with pytest.raises(NumericError, match="simulated blow-up"):
        train(TrainConfig(env="cartpole", variant="classical", total_episodes=10, workers=2, seed=0))


def test_instrumented_store_sees_only_published_states():
    cfg = TrainConfig(env="cartpole", variant="classical", total_episodes=10_000, workers=3, seed=5)
    holder = {}

    def factory(theta, theta_v, shared):
        holder["store"] = InstrumentedStore(theta, theta_v, capacity=400, shared=shared, stop_after=200)
        return holder["store"]

    train(cfg, MetricsSink(), store_factory=factory)
    store = holder["store"]
    obs = store.observations
    assert len(obs) > 0 and store.version >= 200
    for version, digest in obs:
        assert store.published[version] == digest
