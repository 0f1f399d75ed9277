import json

import numpy as np
import pytest

from qa3c.envs import env_spec
from qa3c.exceptions import ConfigurationError, NumericError
from qa3c.models import (
    HybridModel,
    build_actor_critic,
    count_params,
    greedy_action,
    load_checkpoint,
    policy_forward,
    sample_action,
    save_checkpoint,
    value_forward,
)


@pytest.mark.parametrize("env,variant,expected", [
    ("acrobot", "quantum", (148, 96, 244)),
    ("cartpole", "quantum", (107, 96, 203)),
    ("crossing-s9n1", "quantum", (2431, 96, 2527)),
    ("acrobot", "classical", (292, 0, 292)),
    ("cartpole", "classical", (251, 0, 251)),
    ("crossing-s9n3", "classical", (2575, 0, 2575)),
])
def test_parameter_counts(env, variant, expected):
    assert count_params(*build_actor_critic(env_spec(env), variant, 0)) == expected


def test_initialization_ranges():
    actor, critic = build_actor_critic(env_spec("cartpole"), "quantum", 1)
    for model in (actor, critic):
        assert np.all(model.params["pre.bias"] == 0)
        assert np.all(np.abs(model.params["pre.weight"]) <= 0.5)
        assert np.all(np.abs(model.params["core.weights"]) <= np.pi)
        assert np.all(np.abs(model.params["post.weight"]) <= 1 / np.sqrt(8))
    assert actor.head_dim == 2 and critic.head_dim == 1


def test_seeded_initialization_is_reproducible():
    a1, c1 = build_actor_critic(env_spec("acrobot"), "quantum", 5)
    a2, c2 = build_actor_critic(env_spec("acrobot"), "quantum", 5)
    assert np.array_equal(a1.flat(), a2.flat()) and np.array_equal(c1.flat(), c2.flat())
    assert not np.array_equal(a1.flat()[:48], c1.flat()[:48])


def test_flat_round_trip(rng):
    actor, _ = build_actor_critic(env_spec("cartpole"), "classical", 2)
    v = rng.normal(size=actor.n_params)
    actor.set_flat(v)
    assert np.array_equal(actor.flat(), v)
    with pytest.raises(ConfigurationError):
        actor.set_flat(v[:-1])


@pytest.mark.parametrize("variant", ["quantum", "classical"])
def test_batch_forward_matches_single(rng, variant):
    actor, critic = build_actor_critic(env_spec("acrobot"), variant, 3)
    obs = rng.normal(size=(4, 6))
    assert np.allclose(actor.forward(obs), np.stack([actor.forward(o) for o in obs]))
    assert np.allclose(value_forward(critic, obs), [value_forward(critic, o) for o in obs])
    assert isinstance(value_forward(critic, obs[0]), float)


def test_classical_forward_is_three_affine_maps(rng):
    actor, _ = build_actor_critic(env_spec("cartpole"), "classical", 4)
    p = actor.params
    x = rng.normal(size=4)
    h = p["core.weight"] @ (p["pre.weight"] @ x + p["pre.bias"]) + p["core.bias"]
    assert np.allclose(actor.forward(x), p["post.weight"] @ h + p["post.bias"])


def test_checkpoint_round_trip_is_lossless(tmp_path):
    actor, critic = build_actor_critic(env_spec("cartpole"), "quantum", 6)
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, actor, critic, {"env": "cartpole", "seed": 6})
    a2, c2, meta = load_checkpoint(path)
    assert np.array_equal(a2.flat(), actor.flat()) and np.array_equal(c2.flat(), critic.flat())
    assert meta["env"] == "cartpole" and meta["variant"] == "quantum" and meta["n_layers"] == 2
    doc = json.loads(path.read_text())
    assert "actor.core.weights" in doc and "critic.post.bias" in doc


def test_checkpoint_errors(tmp_path):
    bad = tmp_path / "bad.ckpt"
    bad.write_text("{not json")
    with pytest.raises(ConfigurationError):
        load_checkpoint(bad)
    with pytest.raises(OSError):
        load_checkpoint(tmp_path / "missing.ckpt")


def test_model_rejects_wrong_shapes():
    with pytest.raises(ConfigurationError):
        HybridModel("quantum", 4, 2, params={"pre.weight": np.zeros((8, 4))})
    with pytest.raises(ConfigurationError):
        HybridModel("hybrid", 4, 2)
    with pytest.raises(ConfigurationError):
        HybridModel("classical", 4, 2).forward(np.zeros(5))


def test_sample_action_follows_the_distribution(rng):
    p = np.array([0.2, 0.5, 0.3])
    counts = np.bincount([sample_action(p, rng) for _ in range(20000)], minlength=3) / 20000
    assert np.allclose(counts, p, atol=0.015)


def test_sample_action_rejects_non_distributions(rng):
    for p in ([0.5, 0.6], [np.nan, 1.0], [-0.1, 1.1]):
        with pytest.raises(NumericError):
            sample_action(np.array(p), rng)


def test_greedy_ties_go_to_lowest_index():
    assert greedy_action([0.25, 0.25, 0.25, 0.25]) == 0
    assert greedy_action([0.1, 0.45, 0.45]) == 1


def test_non_finite_parameters_raise_numeric_error():
    actor = HybridModel("classical", 4, 2)
    actor.params["post.bias"][:] = np.nan
    with pytest.raises(NumericError):
        policy_forward(actor, np.zeros(4))
