"""Exact statevector simulation for the H / RY / RZ / CNOT / ROT gate family.

Amplitudes are stored big-endian: qubit 0 is the most significant bit of the
amplitude index.  The low-level kernels accept arrays with arbitrary leading
batch axes (shape ``(..., 2**n)``) and update them in place.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .exceptions import ConfigurationError

MAX_QUBITS = 12
ORACLE_MAX_QUBITS = 4

GATE_ANGLES = {"H": 0, "RY": 1, "RZ": 1, "CNOT": 0, "ROT": 3}

_SQRT1_2 = 1.0 / np.sqrt(2.0)
H_MATRIX = np.array([[_SQRT1_2, _SQRT1_2], [_SQRT1_2, -_SQRT1_2]], dtype=complex)


@dataclass(frozen=True)
class GateOp:
    kind: str
    target: int
    control: Optional[int] = None
    angles: tuple = ()

    def __post_init__(self):
        if self.kind not in GATE_ANGLES:
            raise ConfigurationError(f"unknown gate kind {self.kind!r}")
        if len(self.angles) != GATE_ANGLES[self.kind]:
            raise ConfigurationError(
                f"{self.kind} takes {GATE_ANGLES[self.kind]} angles, got {len(self.angles)}"
            )
        if (self.kind == "CNOT") != (self.control is not None):
            raise ConfigurationError("control qubit is required for CNOT and only for CNOT")
        if self.control is not None and self.control == self.target:
            raise ConfigurationError("CNOT control and target must differ")

    @property
    def n_angles(self) -> int:
        return GATE_ANGLES[self.kind]

    def check(self, n_qubits: int) -> None:
        for q in (self.target, self.control):
            if q is not None and not 0 <= q < n_qubits:
                raise ConfigurationError(f"qubit index {q} out of range for {n_qubits} qubits")


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        _check_n_qubits(self.n_qubits)
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ConfigurationError(
                f"expected {1 << self.n_qubits} amplitudes, got shape {self.amplitudes.shape}"
            )

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())


@dataclass
class CircuitProgram:
    """Gate sequence whose angles are bound at run time.

    Angle slots are numbered in gate order (a ROT contributes three
    consecutive slots).  Angles stored on the gates themselves are
    placeholders and are ignored by :func:`run_circuit`.
    """

    n_qubits: int
    gates: list = field(default_factory=list)
    trainable_slots: tuple = ()

    def __post_init__(self):
        _check_n_qubits(self.n_qubits)
        for gate in self.gates:
            gate.check(self.n_qubits)
        n = self.n_slots
        for s in self.trainable_slots:
            if not 0 <= s < n:
                raise ConfigurationError(f"trainable slot {s} does not exist (program has {n})")

    @property
    def n_slots(self) -> int:
        return sum(g.n_angles for g in self.gates)

    @property
    def encoding_slots(self) -> tuple:
        trainable = set(self.trainable_slots)
        return tuple(s for s in range(self.n_slots) if s not in trainable)

    def bind(self, angle_values: Sequence[float]) -> list:
        values = np.asarray(angle_values, dtype=float)
        if values.shape != (self.n_slots,):
            raise ConfigurationError(
                f"program has {self.n_slots} angle slots, got {values.shape[-1] if values.ndim else 0} values"
            )
        bound, k = [], 0
        for g in self.gates:
            m = g.n_angles
            bound.append(GateOp(g.kind, g.target, g.control, tuple(values[k:k + m])))
            k += m
        return bound


def _check_n_qubits(n_qubits: int) -> None:
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(f"n_qubits must be an integer in [1, {MAX_QUBITS}], got {n_qubits!r}")


# ---------------------------------------------------------------------------
# kernels


def _split(amps: np.ndarray, q: int, n: int) -> np.ndarray:
    return amps.reshape(amps.shape[:-1] + (1 << q, 2, 1 << (n - q - 1)))


def _entries(m):
    m = np.asarray(m)
    return [m[..., i, j][..., None, None] for i in (0, 1) for j in (0, 1)]


def apply_1q_inplace(amps: np.ndarray, matrix, q: int, n: int) -> None:
    """Apply a 2x2 matrix (or a batch of them, shape ``(B, 2, 2)``) to qubit ``q``."""
    v = _split(amps, q, n)
    m00, m01, m10, m11 = _entries(matrix)
    a0 = v[..., 0, :]
    a1 = v[..., 1, :]
    new0 = m00 * a0 + m01 * a1
    new1 = m10 * a0 + m11 * a1
    v[..., 0, :] = new0
    v[..., 1, :] = new1


def apply_diag_inplace(amps: np.ndarray, d0, d1, q: int, n: int) -> None:
    v = _split(amps, q, n)
    v[..., 0, :] *= np.asarray(d0)[..., None, None]
    v[..., 1, :] *= np.asarray(d1)[..., None, None]


@lru_cache(maxsize=None)
def cnot_permutation(n: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(1 << n)
    cbit = 1 << (n - 1 - control)
    tbit = 1 << (n - 1 - target)
    return np.where(idx & cbit, idx ^ tbit, idx)


def apply_cnot_inplace(amps: np.ndarray, control: int, target: int, n: int) -> None:
    amps[...] = amps[..., cnot_permutation(n, control, target)]


def ry_matrix(theta) -> np.ndarray:
    c, s = np.cos(np.asarray(theta) / 2), np.sin(np.asarray(theta) / 2)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2).astype(complex)


def rz_phases(theta):
    half = np.asarray(theta) / 2
    return np.exp(-1j * half), np.exp(1j * half)


def rz_matrix(theta) -> np.ndarray:
    p0, p1 = rz_phases(theta)
    z = np.zeros_like(p0)
    return np.stack([np.stack([p0, z], -1), np.stack([z, p1], -1)], -2)


def rot_matrix(alpha, beta, gamma) -> np.ndarray:
    """RZ(alpha) first, then RY(beta), then RZ(gamma): RZ(gamma) @ RY(beta) @ RZ(alpha)."""
    return rz_matrix(gamma) @ ry_matrix(beta) @ rz_matrix(alpha)


def apply_gate_inplace(amps: np.ndarray, gate: GateOp, n: int) -> None:
    q = gate.target
    if gate.kind == "H":
        apply_1q_inplace(amps, H_MATRIX, q, n)
    elif gate.kind == "RY":
        apply_1q_inplace(amps, ry_matrix(gate.angles[0]), q, n)
    elif gate.kind == "RZ":
        apply_diag_inplace(amps, *rz_phases(gate.angles[0]), q, n)
    elif gate.kind == "ROT":
        a, b, c = gate.angles
        apply_diag_inplace(amps, *rz_phases(a), q, n)
        apply_1q_inplace(amps, ry_matrix(b), q, n)
        apply_diag_inplace(amps, *rz_phases(c), q, n)
    else:
        apply_cnot_inplace(amps, gate.control, q, n)


@lru_cache(maxsize=None)
def z_signs(n: int) -> np.ndarray:
    """Table of shape (2**n, n): +1 where qubit q's bit of the index is 0, -1 where it is 1."""
    idx = np.arange(1 << n)[:, None]
    bits = (idx >> (n - 1 - np.arange(n))[None, :]) & 1
    return 1.0 - 2.0 * bits


def z_expectations(amps: np.ndarray, n: int) -> np.ndarray:
    return (np.abs(amps) ** 2) @ z_signs(n)


# ---------------------------------------------------------------------------
# public operations


def new_zero_state(n_qubits: int) -> StateVector:
    _check_n_qubits(n_qubits)
    amps = np.zeros(1 << n_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def apply_gate(state: StateVector, gate: GateOp) -> StateVector:
    gate.check(state.n_qubits)
    out = state.amplitudes.copy()
    apply_gate_inplace(out, gate, state.n_qubits)
    return StateVector(state.n_qubits, out)


def expectation_z(state: StateVector, qubit: int) -> float:
    if not 0 <= qubit < state.n_qubits:
        raise ConfigurationError(f"qubit {qubit} out of range for {state.n_qubits} qubits")
    return float(z_expectations(state.amplitudes, state.n_qubits)[qubit])


def lowered(program: CircuitProgram) -> np.ndarray:
    return _lowered(program.n_qubits, tuple(program.gates))


@lru_cache(maxsize=256)
def _lowered(n: int, gates: tuple) -> np.ndarray:
    return _kernels.lower(CircuitProgram(n, list(gates)))


def final_state(program: CircuitProgram, angle_values) -> np.ndarray:
    """Amplitudes after running ``program``; ``angle_values`` may carry leading batch axes."""
    values = np.asarray(angle_values, dtype=float)
    if values.ndim == 0 or values.shape[-1] != program.n_slots:
        raise ConfigurationError(
            f"program has {program.n_slots} angle slots, got {values.shape[-1] if values.ndim else 0} values"
        )
    flat = np.ascontiguousarray(values.reshape(int(np.prod(values.shape[:-1])), program.n_slots))
    amps = _kernels.simulate(lowered(program), 1 << program.n_qubits, flat)
    return amps.reshape(values.shape[:-1] + (1 << program.n_qubits,))


def run_circuit(program: CircuitProgram, angle_values) -> np.ndarray:
    """Pauli-Z expectation of every qubit after running ``program`` from ``|0...0>``."""
    return z_expectations(final_state(program, angle_values), program.n_qubits)


# ---------------------------------------------------------------------------
# dense oracle (small instances only)

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_P0 = np.diag([1, 0]).astype(complex)
_P1 = np.diag([0, 1]).astype(complex)


def _embed(ops: dict, n: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for q in range(n):
        out = np.kron(out, ops.get(q, _I2))
    return out


def gate_unitary(gate: GateOp, n: int) -> np.ndarray:
    """Full ``2**n x 2**n`` matrix of a bound gate, built from Kronecker products."""
    gate.check(n)
    q = gate.target
    if gate.kind == "CNOT":
        return _embed({gate.control: _P0}, n) + _embed({gate.control: _P1, q: _X}, n)
    if gate.kind == "H":
        m = H_MATRIX
    elif gate.kind == "RY":
        m = ry_matrix(gate.angles[0])
    elif gate.kind == "RZ":
        m = rz_matrix(gate.angles[0])
    else:
        m = rot_matrix(*gate.angles)
    return _embed({q: m}, n)


def dense_unitary_oracle(program: CircuitProgram, angle_values) -> np.ndarray:
    n = program.n_qubits
    if n > ORACLE_MAX_QUBITS:
        raise ConfigurationError(f"dense oracle is limited to {ORACLE_MAX_QUBITS} qubits, got {n}")
    u = np.eye(1 << n, dtype=complex)
    for gate in program.bind(angle_values):
        u = gate_unitary(gate, n) @ u
    return u
