"""Dressed-VQC actor/critic models, their classical twin, and checkpoints."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .exceptions import ConfigurationError, NumericError, StorageError
from .vqc import VqcLayerSpec, vqc_forward

VARIANTS = ("quantum", "classical")


@dataclass(frozen=True)
class EnvSpec:
    name: str
    obs_dim: int
    n_actions: int
    max_steps: int
    reward_threshold: float | None = None

    def __post_init__(self):
        if self.obs_dim < 1 or self.n_actions < 2:
            raise ConfigurationError(f"invalid environment dimensions for {self.name!r}")


@dataclass
class HybridModel:
    """Linear pre-net -> core (circuit or 8x8 linear) -> linear post-net.

    Parameters live in ``params`` under the names ``pre.weight``,
    ``pre.bias``, ``core.weights`` (quantum) or ``core.weight`` /
    ``core.bias`` (classical), ``post.weight`` and ``post.bias``.
    """

    variant: str
    obs_dim: int
    head_dim: int
    n_qubits: int = 8
    n_layers: int = 2
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        expected = self.shapes()
        if not self.params:
            self.params = {name: np.zeros(shape) for name, shape in expected.items()}
        if set(self.params) != set(expected):
            raise ConfigurationError(f"parameter names {sorted(self.params)} do not match {sorted(expected)}")
        for name, shape in expected.items():
            value = np.asarray(self.params[name], dtype=float)
            if value.shape != shape:
                raise ConfigurationError(f"{name} has shape {value.shape}, expected {shape}")
            self.params[name] = value

    def shapes(self) -> dict:
        h = self.n_qubits
        shapes = {"pre.weight": (h, self.obs_dim), "pre.bias": (h,)}
        if self.variant == "quantum":
            shapes["core.weights"] = (self.n_layers, h, 3)
        else:
            shapes["core.weight"] = (h, h)
            shapes["core.bias"] = (h,)
        shapes["post.weight"] = (self.head_dim, h)
        shapes["post.bias"] = (self.head_dim,)
        return shapes

    @property
    def n_quantum(self) -> int:
        return self.params["core.weights"].size if self.variant == "quantum" else 0

    @property
    def n_classical(self) -> int:
        return sum(v.size for k, v in self.params.items() if k != "core.weights")

    @property
    def n_params(self) -> int:
        return sum(v.size for v in self.params.values())

    def copy(self) -> "HybridModel":
        return HybridModel(
            self.variant, self.obs_dim, self.head_dim, self.n_qubits, self.n_layers,
            {k: v.copy() for k, v in self.params.items()},
        )

    # flat views, used by the shared store
    def flat(self) -> np.ndarray:
        return np.concatenate([self.params[k].ravel() for k in self.shapes()])

    def set_flat(self, vector) -> None:
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (self.n_params,):
            raise ConfigurationError(f"expected {self.n_params} values, got shape {vector.shape}")
        offset = 0
        for name, shape in self.shapes().items():
            size = int(np.prod(shape))
            self.params[name] = vector[offset:offset + size].reshape(shape).copy()
            offset += size

    def flatten_grads(self, bundle) -> np.ndarray:
        return np.concatenate([np.asarray(bundle[k], dtype=float).ravel() for k in self.shapes()])

    def core_spec(self) -> VqcLayerSpec:
        return VqcLayerSpec(self.n_qubits, self.n_layers, self.params["core.weights"])

    def forward(self, obs) -> np.ndarray:
        """Head outputs (logits or value) for one observation or a batch."""
        p = self.params
        h = np.asarray(obs, dtype=float)
        if h.ndim == 0 or h.shape[-1] != self.obs_dim:
            raise ConfigurationError(f"expected observations of length {self.obs_dim}, got shape {h.shape}")
        h = h @ p["pre.weight"].T + p["pre.bias"]
        if self.variant == "quantum":
            h = vqc_forward(self.core_spec(), h)
        else:
            h = h @ p["core.weight"].T + p["core.bias"]
        return h @ p["post.weight"].T + p["post.bias"]

    def graph(self, obs) -> tuple:
        """Build the forward pass as autodiff nodes; returns ``(output, parameter nodes)``."""
        nodes = {k: ad.parameter(k, v) for k, v in self.params.items()}
        h = ad.linear(ad.constant(obs), nodes["pre.weight"], nodes["pre.bias"])
        if self.variant == "quantum":
            h = ad.vqc(h, nodes["core.weights"], self.n_qubits, self.n_layers)
        else:
            h = ad.linear(h, nodes["core.weight"], nodes["core.bias"])
        return ad.linear(h, nodes["post.weight"], nodes["post.bias"]), nodes

    def snapshot(self) -> str:
        return json.dumps({k: v.tolist() for k, v in self.params.items()})


def _uniform_linear(rng, out_dim, in_dim):
    bound = 1.0 / np.sqrt(in_dim)
    return rng.uniform(-bound, bound, size=(out_dim, in_dim)), np.zeros(out_dim)


def init_model(variant, obs_dim, head_dim, rng, n_qubits=8, n_layers=2) -> HybridModel:
    h = n_qubits
    params = {}
    params["pre.weight"], params["pre.bias"] = _uniform_linear(rng, h, obs_dim)
    if variant == "quantum":
        params["core.weights"] = rng.uniform(-np.pi, np.pi, size=(n_layers, h, 3))
    else:
        params["core.weight"], params["core.bias"] = _uniform_linear(rng, h, h)
    params["post.weight"], params["post.bias"] = _uniform_linear(rng, head_dim, h)
    return HybridModel(variant, obs_dim, head_dim, n_qubits, n_layers, params)


def build_actor_critic(env: EnvSpec, variant: str, rng=None, n_qubits: int = 8, n_layers: int = 2):
    """Two independent models: actor with ``n_actions`` logits, critic with one output."""
    if variant not in VARIANTS:
        raise ConfigurationError(f"variant must be one of {VARIANTS}, got {variant!r}")
    rng = np.random.default_rng(rng)
    actor = init_model(variant, env.obs_dim, env.n_actions, rng, n_qubits, n_layers)
    critic = init_model(variant, env.obs_dim, 1, rng, n_qubits, n_layers)
    return actor, critic


def count_params(actor: HybridModel, critic: HybridModel) -> tuple:
    classical = actor.n_classical + critic.n_classical
    quantum = actor.n_quantum + critic.n_quantum
    return classical, quantum, classical + quantum


def _checked(model: HybridModel, out: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(out)):
        raise NumericError(f"non-finite model output; parameters: {model.snapshot()}")
    return out


def policy_forward(actor: HybridModel, obs) -> np.ndarray:
    return _checked(actor, ad.softmax(_checked(actor, actor.forward(obs))))


def value_forward(critic: HybridModel, obs):
    v = _checked(critic, critic.forward(obs))[..., 0]
    return float(v) if v.ndim == 0 else v


def sample_action(probs, rng) -> int:
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or not np.all(np.isfinite(p)) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-6:
        raise NumericError(f"not a probability distribution: {p}")
    cdf = np.cumsum(p)
    a = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(a, len(p) - 1)


def greedy_action(probs) -> int:
    """Argmax with ties broken toward the lowest index."""
    return int(np.argmax(probs))


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(path, actor: HybridModel, critic: HybridModel, meta: dict) -> None:
    doc = {"meta": dict(meta)}
    doc["meta"].update(variant=actor.variant, n_qubits=actor.n_qubits, n_layers=actor.n_layers,
                       obs_dim=actor.obs_dim, n_actions=actor.head_dim)
    for prefix, model in (("actor", actor), ("critic", critic)):
        for name, value in model.params.items():
            doc[f"{prefix}.{name}"] = value.tolist()
    try:
        Path(path).write_text(json.dumps(doc, indent=1))
    except OSError as exc:
        raise StorageError(f"cannot write checkpoint {path}: {exc}") from exc


def load_checkpoint(path) -> tuple:
    """Returns ``(actor, critic, meta)``."""
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise StorageError(f"cannot read checkpoint {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"checkpoint {path} is not valid: {exc}") from exc
    meta = doc.pop("meta")
    models = []
    for prefix, head in (("actor", meta["n_actions"]), ("critic", 1)):
        params = {k[len(prefix) + 1:]: np.array(v, dtype=float) for k, v in doc.items() if k.startswith(prefix + ".")}
        models.append(HybridModel(meta["variant"], meta["obs_dim"], head, meta["n_qubits"], meta["n_layers"], params))
    return models[0], models[1], meta
