"""The variational circuit used inside the dressed actor/critic models.

Forward evaluation, the adjoint vector-Jacobian product used for training,
and the parameter-shift Jacobian kept as an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .exceptions import ConfigurationError
from . import _kernels
from .statevector import (
    CircuitProgram,
    GateOp,
    apply_cnot_inplace,
    final_state,
    lowered,
    z_expectations,
    z_signs,
)

SHIFT = np.pi / 2


@dataclass
class VqcLayerSpec:
    n_qubits: int = 8
    n_layers: int = 2
    weights: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        shape = (self.n_layers, self.n_qubits, 3)
        if self.weights is None:
            self.weights = np.zeros(shape)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != shape:
            raise ConfigurationError(f"VQC weights must have shape {shape}, got {self.weights.shape}")

    @property
    def n_weights(self) -> int:
        return self.n_layers * self.n_qubits * 3


def entangling_pairs(n_qubits: int) -> list:
    """(control, target) pairs of one entangling block: ring at distance 1, then distance 2."""
    pairs = [(q, (q + 1) % n_qubits) for q in range(n_qubits)]
    pairs += [(q, (q + 2) % n_qubits) for q in range(n_qubits)]
    # on 1-2 qubit registers the wrap-around yields q -> q, which is not a gate
    return [(c, t) for c, t in pairs if c != t]


def build_vqc_program(spec: VqcLayerSpec) -> CircuitProgram:
    return _program(spec.n_qubits, spec.n_layers)


@lru_cache(maxsize=None)
def _program(n: int, n_layers: int) -> CircuitProgram:
    gates = []
    for q in range(n):
        gates += [GateOp("H", q), GateOp("RY", q, angles=(0.0,)), GateOp("RZ", q, angles=(0.0,))]
    for _ in range(n_layers):
        gates += [GateOp("CNOT", t, control=c) for c, t in entangling_pairs(n)]
        gates += [GateOp("ROT", q, angles=(0.0, 0.0, 0.0)) for q in range(n)]
    return CircuitProgram(n, gates, tuple(range(2 * n, 2 * n + 3 * n * n_layers)))


def encoding_angles(x: np.ndarray) -> tuple:
    x = np.asarray(x, dtype=float)
    return np.arctan(x), np.arctan(x * x)


def vqc_angle_values(spec: VqcLayerSpec, x) -> np.ndarray:
    """Slot values for :func:`build_vqc_program`; ``x`` may be batched as ``(B, n_qubits)``."""
    x = _check_input(spec, x)
    a, b = encoding_angles(x)
    enc = np.stack([a, b], axis=-1).reshape(x.shape[:-1] + (2 * spec.n_qubits,))
    w = np.broadcast_to(spec.weights.ravel(), x.shape[:-1] + (spec.n_weights,))
    return np.concatenate([enc, w], axis=-1)


def _check_input(spec: VqcLayerSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != spec.n_qubits:
        raise ConfigurationError(f"VQC expects inputs of length {spec.n_qubits}, got shape {x.shape}")
    return x


@lru_cache(maxsize=None)
def _block_permutation(n: int) -> tuple:
    """Index maps ``(perm, inverse)`` with ``new = old[perm]`` for one entangling block."""
    idx = np.arange(1 << n)
    for c, t in entangling_pairs(n):
        apply_cnot_inplace(idx, c, t, n)
    return idx.astype(np.int64), np.argsort(idx).astype(np.int64)


def _encoding_table(spec: VqcLayerSpec, x: np.ndarray) -> np.ndarray:
    a, b = encoding_angles(x)
    return np.ascontiguousarray(np.stack([a, b], axis=-1).reshape(-1, spec.n_qubits, 2))


def vqc_state(spec: VqcLayerSpec, x) -> np.ndarray:
    x = _check_input(spec, x)
    perm, _ = _block_permutation(spec.n_qubits)
    amps = _kernels.layered_simulate(_encoding_table(spec, x), spec.weights, perm)
    return amps.reshape(x.shape[:-1] + (-1,))


def vqc_forward(spec: VqcLayerSpec, x) -> np.ndarray:
    """Pauli-Z expectations of the dressed-circuit core for input(s) ``x``."""
    return z_expectations(vqc_state(spec, x), spec.n_qubits)


# ---------------------------------------------------------------------------
# adjoint differentiation


def adjoint_vjp(program: CircuitProgram, angle_values, upstream) -> np.ndarray:
    """Gradient of ``sum_k upstream[k] * <Z_k>`` with respect to every angle slot.

    One forward pass and one reverse sweep that un-computes each gate on both
    the state and the adjoint vector.  ``angle_values`` and ``upstream`` may
    share leading batch axes; the result has the shape of ``angle_values``.
    """
    values = np.asarray(angle_values, dtype=float)
    n = program.n_qubits
    upstream = np.asarray(upstream, dtype=float)
    if values.ndim == 0 or values.shape[-1] != program.n_slots:
        raise ConfigurationError(f"program has {program.n_slots} angle slots, got shape {values.shape}")
    if upstream.shape != values.shape[:-1] + (n,):
        raise ConfigurationError(f"upstream shape {upstream.shape} does not match the circuit outputs")
    grads = _kernels.adjoint(
        lowered(program),
        1 << n,
        np.ascontiguousarray(values.reshape(int(np.prod(values.shape[:-1])), program.n_slots)),
        z_signs(n),
        np.ascontiguousarray(upstream.reshape(-1, n)),
    )
    return grads.reshape(values.shape)


def _chain_encoding(slot_grads: np.ndarray, x: np.ndarray, n: int) -> np.ndarray:
    """Map gradients of the RY/RZ encoding slots back to the raw inputs."""
    enc = slot_grads[..., : 2 * n].reshape(slot_grads.shape[:-1] + (n, 2))
    return enc[..., 0] / (1.0 + x * x) + enc[..., 1] * 2.0 * x / (1.0 + x ** 4)


def vqc_vjp(spec: VqcLayerSpec, x, upstream):
    """Vector-Jacobian product of :func:`vqc_forward`.

    Returns ``(dx, dweights)``.  For batched ``x`` of shape ``(B, n)``, ``dx``
    is per-sample and ``dweights`` is summed over the batch.
    """
    x = _check_input(spec, x)
    upstream = np.asarray(upstream, dtype=float)
    if upstream.shape != x.shape:
        raise ConfigurationError(f"upstream shape {upstream.shape} does not match input shape {x.shape}")
    n = spec.n_qubits
    perm, inv = _block_permutation(n)
    g_enc, g_w = _kernels.layered_adjoint(
        _encoding_table(spec, x), spec.weights, perm, inv, z_signs(n),
        np.ascontiguousarray(upstream.reshape(-1, n)),
    )
    g_enc = g_enc.reshape(x.shape + (2,))
    dx = g_enc[..., 0] / (1.0 + x * x) + g_enc[..., 1] * 2.0 * x / (1.0 + x ** 4)
    dw = g_w.sum(axis=0)
    return dx, dw


# ---------------------------------------------------------------------------
# parameter-shift oracle


def param_shift_jacobian(program: CircuitProgram, angle_values) -> np.ndarray:
    """Jacobian ``d<Z_k>/d(slot j)``, shape ``(n_qubits, n_slots)``, by the +-pi/2 shift rule."""
    values = np.asarray(angle_values, dtype=float)
    m = program.n_slots
    if values.shape != (m,):
        raise ConfigurationError(f"program has {m} angle slots, got shape {values.shape}")
    shifts = np.eye(m) * SHIFT
    plus = z_expectations(final_state(program, values + shifts), program.n_qubits)
    minus = z_expectations(final_state(program, values - shifts), program.n_qubits)
    return ((plus - minus) / 2.0).T


def param_shift_grad(spec: VqcLayerSpec, x):
    """Jacobians of :func:`vqc_forward` for a single input.

    Returns ``(jac_x, jac_w)`` with shapes ``(n, n)`` and ``(n, n_layers, n, 3)``.
    """
    x = _check_input(spec, x)
    if x.ndim != 1:
        raise ConfigurationError("param_shift_grad takes a single input vector")
    n = spec.n_qubits
    jac = param_shift_jacobian(build_vqc_program(spec), vqc_angle_values(spec, x))
    jac_x = _chain_encoding(jac, x[None, :], n)
    jac_w = jac[:, 2 * n:].reshape((n,) + spec.weights.shape)
    return jac_x, jac_w
