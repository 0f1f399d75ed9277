import numpy as np
import pytest
from hypothesis import given, strategies as st

from qa3c.exceptions import ConfigurationError
from qa3c.statevector import (
    CircuitProgram,
    GateOp,
    StateVector,
    apply_gate,
    dense_unitary_oracle,
    expectation_z,
    final_state,
    gate_unitary,
    new_zero_state,
    rot_matrix,
    run_circuit,
    rz_matrix,
    ry_matrix,
)
from qa3c.vqc import adjoint_vjp, param_shift_jacobian


@st.composite
def programs(draw, max_qubits=4, max_gates=14):
    n = draw(st.integers(1, max_qubits))
    kinds = ["H", "RY", "RZ", "ROT"] + (["CNOT"] if n > 1 else [])
    gates = []
    for _ in range(draw(st.integers(0, max_gates))):
        kind = draw(st.sampled_from(kinds))
        target = draw(st.integers(0, n - 1))
        if kind == "CNOT":
            control = draw(st.integers(0, n - 1).filter(lambda c: c != target))
            gates.append(GateOp("CNOT", target, control=control))
        else:
            k = {"H": 0, "RY": 1, "RZ": 1, "ROT": 3}[kind]
            gates.append(GateOp(kind, target, angles=(0.0,) * k))
    program = CircuitProgram(n, gates)
    seed = draw(st.integers(0, 2**32 - 1))
    values = np.random.default_rng(seed).uniform(-np.pi, np.pi, program.n_slots)
    return program, values


def test_zero_state_reads_plus_one_everywhere():
    state = new_zero_state(3)
    assert [expectation_z(state, q) for q in range(3)] == [1.0, 1.0, 1.0]


def test_qubit_zero_is_most_significant_bit():
    state = apply_gate(new_zero_state(3), GateOp("RY", 0, angles=(np.pi,)))
    assert np.argmax(np.abs(state.amplitudes)) == 4
    assert expectation_z(state, 0) == pytest.approx(-1.0)
    assert expectation_z(state, 2) == pytest.approx(1.0)


def test_cnot_flips_target_when_control_set():
    state = apply_gate(new_zero_state(2), GateOp("RY", 0, angles=(np.pi,)))
    state = apply_gate(state, GateOp("CNOT", 1, control=0))
    assert np.abs(state.amplitudes[3]) == pytest.approx(1.0)


def test_apply_gate_leaves_input_untouched():
    state = new_zero_state(2)
    apply_gate(state, GateOp("H", 0))
    assert state.amplitudes[0] == 1.0


def test_hadamard_then_ry_expectation_has_closed_form():
    # <Z> of RY(a) H |0> is -sin(a)
    for a in np.linspace(-3, 3, 7):
        s = apply_gate(apply_gate(new_zero_state(1), GateOp("H", 0)), GateOp("RY", 0, angles=(a,)))
        assert expectation_z(s, 0) == pytest.approx(-np.sin(a), abs=1e-14)


def test_rot_applies_rz_then_ry_then_rz():
    a, b, c = 0.3, -1.1, 2.0
    assert np.allclose(rot_matrix(a, b, c), rz_matrix(c) @ ry_matrix(b) @ rz_matrix(a))
    seq = CircuitProgram(1, [GateOp("H", 0), GateOp("RZ", 0, angles=(0,)), GateOp("RY", 0, angles=(0,)),
                             GateOp("RZ", 0, angles=(0,))])
    rot = CircuitProgram(1, [GateOp("H", 0), GateOp("ROT", 0, angles=(0, 0, 0))])
    assert np.allclose(final_state(seq, [a, b, c]), final_state(rot, [a, b, c]))


@given(programs())
def test_norm_is_preserved(case):
    program, values = case
    amps = final_state(program, values)
    assert np.linalg.norm(amps) == pytest.approx(1.0, abs=1e-12)


@given(programs())
def test_simulator_matches_dense_oracle(case):
    program, values = case
    u = dense_unitary_oracle(program, values)
    assert np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=1e-10)
    psi = u[:, 0]
    assert np.allclose(final_state(program, values), psi, atol=1e-10)
    signs = 1 - 2 * ((np.arange(len(psi))[:, None] >> (program.n_qubits - 1 - np.arange(program.n_qubits))) & 1)
    assert np.allclose(run_circuit(program, values), np.abs(psi) ** 2 @ signs, atol=1e-10)


@given(programs(max_gates=10))
def test_gate_by_gate_matches_whole_program(case):
    program, values = case
    state = new_zero_state(program.n_qubits)
    for gate in program.bind(values):
        state = apply_gate(state, gate)
    assert np.allclose(state.amplitudes, final_state(program, values), atol=1e-12)


@given(programs(max_gates=10))
def test_adjoint_matches_parameter_shift(case):
    program, values = case
    if program.n_slots == 0:
        return
    jac = param_shift_jacobian(program, values)
    for k in range(program.n_qubits):
        up = np.zeros(program.n_qubits)
        up[k] = 1.0
        assert np.allclose(adjoint_vjp(program, values, up), jac[k], atol=1e-10)


def test_batched_final_state_matches_rows(rng):
    program = CircuitProgram(2, [GateOp("H", 0), GateOp("ROT", 1, angles=(0, 0, 0)), GateOp("CNOT", 1, control=0)])
    values = rng.normal(size=(4, 3))
    batch = final_state(program, values)
    for row, v in zip(batch, values):
        assert np.allclose(row, final_state(program, v))


def test_cnot_unitary_is_a_permutation():
    u = gate_unitary(GateOp("CNOT", 0, control=1), 2)
    assert np.array_equal(u.real, np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]]))


@pytest.mark.parametrize("make", [
    lambda: GateOp("X", 0),
    lambda: GateOp("RY", 0),
    lambda: GateOp("CNOT", 0),
    lambda: GateOp("CNOT", 1, control=1),
    lambda: GateOp("H", 0, control=1),
    lambda: CircuitProgram(2, [GateOp("H", 2)]),
    lambda: CircuitProgram(0, []),
    lambda: CircuitProgram(1, [], trainable_slots=(0,)),
    lambda: StateVector(2, np.zeros(3)),
    lambda: final_state(CircuitProgram(1, [GateOp("RY", 0, angles=(0,))]), [1.0, 2.0]),
    lambda: dense_unitary_oracle(CircuitProgram(5, []), []),
    lambda: expectation_z(new_zero_state(1), 1),
])
def test_invalid_inputs_raise_configuration_error(make):
    with pytest.raises(ConfigurationError):
        make()
