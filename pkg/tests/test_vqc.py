import numpy as np
import pytest
from hypothesis import given, strategies as st

from qa3c.exceptions import ConfigurationError
from qa3c.statevector import final_state, z_expectations
from qa3c.vqc import (
    VqcLayerSpec,
    build_vqc_program,
    entangling_pairs,
    param_shift_grad,
    vqc_angle_values,
    vqc_forward,
    vqc_state,
    vqc_vjp,
)


def _spec(rng, n=8, layers=2):
    return VqcLayerSpec(n, layers, rng.uniform(-np.pi, np.pi, (layers, n, 3)))


def test_default_layout_sizes():
    spec = VqcLayerSpec()
    program = build_vqc_program(spec)
    assert spec.n_weights == 48
    assert program.n_slots == 16 + 48
    assert program.trainable_slots == tuple(range(16, 64))
    assert program.encoding_slots == tuple(range(16))
    assert len(entangling_pairs(8)) == 16


def test_entangling_block_order():
    assert entangling_pairs(4) == [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 3), (2, 0), (3, 1)]
    # distance-2 pairs on two qubits would be self-pairs
    assert entangling_pairs(2) == [(0, 1), (1, 0)]
    assert entangling_pairs(1) == []


def test_zero_input_and_weights_read_zero():
    # H^n|0> is uniform, CNOTs permute it and ROT(0,0,0) is the identity
    assert np.allclose(vqc_forward(VqcLayerSpec(), np.zeros(8)), 0.0, atol=1e-14)


@given(st.floats(-50, 50))
def test_single_qubit_closed_form(x):
    # <Z> of RZ(.) RY(arctan x) H |0> is -sin(arctan x) = -x / sqrt(1 + x^2)
    out = vqc_forward(VqcLayerSpec(1, 1), np.array([x]))
    assert out[0] == pytest.approx(-x / np.sqrt(1 + x * x), abs=1e-12)


@pytest.mark.parametrize("n,layers", [(8, 2), (4, 3), (3, 1), (2, 2), (1, 1)])
def test_fused_forward_matches_gate_by_gate(rng, n, layers):
    spec = _spec(rng, n, layers)
    x = rng.normal(size=(4, n))
    ref = final_state(build_vqc_program(spec), vqc_angle_values(spec, x))
    assert np.allclose(vqc_state(spec, x), ref, atol=1e-12)
    assert np.allclose(vqc_forward(spec, x), z_expectations(ref, n), atol=1e-12)


@pytest.mark.parametrize("n,layers", [(8, 2), (4, 3), (2, 1), (1, 2)])
def test_vjp_matches_parameter_shift(rng, n, layers):
    spec = _spec(rng, n, layers)
    x = rng.normal(size=n)
    u = rng.normal(size=n)
    dx, dw = vqc_vjp(spec, x, u)
    jac_x, jac_w = param_shift_grad(spec, x)
    assert np.allclose(dx, u @ jac_x, atol=1e-10)
    assert np.allclose(dw, np.tensordot(u, jac_w, axes=1), atol=1e-10)


def test_vjp_matches_central_differences(rng):
    spec = _spec(rng, 4, 2)
    x = rng.normal(size=4)
    u = rng.normal(size=4)
    dx, dw = vqc_vjp(spec, x, u)
    h = 1e-5

    def f(xv, w):
        return u @ vqc_forward(VqcLayerSpec(4, 2, w), xv)

    fd_x = np.array([(f(x + h * e, spec.weights) - f(x - h * e, spec.weights)) / (2 * h) for e in np.eye(4)])
    fd_w = np.zeros_like(spec.weights)
    for idx in np.ndindex(*spec.weights.shape):
        e = np.zeros_like(spec.weights)
        e[idx] = h
        fd_w[idx] = (f(x, spec.weights + e) - f(x, spec.weights - e)) / (2 * h)
    assert np.allclose(dx, fd_x, atol=1e-8)
    assert np.allclose(dw, fd_w, atol=1e-8)


def test_batched_vjp_sums_weights_and_keeps_inputs(rng):
    spec = _spec(rng)
    x = rng.normal(size=(5, 8))
    u = rng.normal(size=(5, 8))
    dx, dw = vqc_vjp(spec, x, u)
    singles = [vqc_vjp(spec, xi, ui) for xi, ui in zip(x, u)]
    assert dx.shape == (5, 8)
    assert np.allclose(dx, np.stack([s[0] for s in singles]))
    assert np.allclose(dw, sum(s[1] for s in singles))


def test_outputs_are_bounded(rng):
    out = vqc_forward(_spec(rng), rng.normal(scale=10, size=(20, 8)))
    assert np.all(np.abs(out) <= 1 + 1e-12)


def test_shape_errors():
    with pytest.raises(ConfigurationError):
        VqcLayerSpec(8, 2, np.zeros((2, 8, 2)))
    with pytest.raises(ConfigurationError):
        vqc_forward(VqcLayerSpec(), np.zeros(7))
    with pytest.raises(ConfigurationError):
        vqc_vjp(VqcLayerSpec(), np.zeros(8), np.zeros(3))
