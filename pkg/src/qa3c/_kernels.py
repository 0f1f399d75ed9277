"""Compiled statevector loops used on the training hot path.

Programs are lowered to an int table with one row per elementary gate:
``(kind, target bit mask, control bit mask, angle slot)``.  ROT is lowered to
RZ, RY, RZ on consecutive slots.
"""

import math

import numpy as np
from numba import njit

H, RY, RZ, CNOT = 0, 1, 2, 3
_S = 1.0 / math.sqrt(2.0)


def lower(program) -> np.ndarray:
    n = program.n_qubits
    rows, k = [], 0
    for g in program.gates:
        bit = 1 << (n - 1 - g.target)
        if g.kind == "H":
            rows.append((H, bit, 0, -1))
        elif g.kind == "CNOT":
            rows.append((CNOT, bit, 1 << (n - 1 - g.control), -1))
        elif g.kind == "RY":
            rows.append((RY, bit, 0, k))
        elif g.kind == "RZ":
            rows.append((RZ, bit, 0, k))
        else:
            rows += [(RZ, bit, 0, k), (RY, bit, 0, k + 1), (RZ, bit, 0, k + 2)]
        k += g.n_angles
    return np.array(rows, dtype=np.int64).reshape(-1, 4)


@njit(cache=True)
def _apply(psi, kind, bit, cbit, theta):
    dim = psi.shape[0]
    if kind == H:
        for i in range(dim):
            if i & bit == 0:
                j = i | bit
                a = psi[i]
                b = psi[j]
                psi[i] = _S * (a + b)
                psi[j] = _S * (a - b)
    elif kind == RY:
        c = math.cos(theta / 2)
        s = math.sin(theta / 2)
        for i in range(dim):
            if i & bit == 0:
                j = i | bit
                a = psi[i]
                b = psi[j]
                psi[i] = c * a - s * b
                psi[j] = s * a + c * b
    elif kind == RZ:
        p0 = complex(math.cos(theta / 2), -math.sin(theta / 2))
        p1 = complex(math.cos(theta / 2), math.sin(theta / 2))
        for i in range(dim):
            if i & bit == 0:
                psi[i] *= p0
            else:
                psi[i] *= p1
    else:
        for i in range(dim):
            if i & cbit != 0 and i & bit == 0:
                j = i | bit
                a = psi[i]
                psi[i] = psi[j]
                psi[j] = a


@njit(cache=True)
def _forward(ops, values, psi):
    for g in range(ops.shape[0]):
        slot = ops[g, 3]
        theta = values[slot] if slot >= 0 else 0.0
        _apply(psi, ops[g, 0], ops[g, 1], ops[g, 2], theta)


@njit(cache=True)
def simulate(ops, dim, values):
    """Final amplitudes for every row of ``values`` (shape ``(B, n_slots)``)."""
    out = np.zeros((values.shape[0], dim), dtype=np.complex128)
    for b in range(values.shape[0]):
        out[b, 0] = 1.0
        _forward(ops, values[b], out[b])
    return out


@njit(cache=True)
def adjoint(ops, dim, values, signs, upstream):
    """Gradient of ``sum_k upstream[b, k] <Z_k>`` w.r.t. every slot, per batch row."""
    batch = values.shape[0]
    grads = np.zeros(values.shape)
    phi = np.zeros(dim, dtype=np.complex128)
    lam = np.zeros(dim, dtype=np.complex128)
    for b in range(batch):
        phi[:] = 0.0
        phi[0] = 1.0
        _forward(ops, values[b], phi)
        for i in range(dim):
            m = 0.0
            for k in range(signs.shape[1]):
                m += signs[i, k] * upstream[b, k]
            lam[i] = m * phi[i]
        for g in range(ops.shape[0] - 1, -1, -1):
            kind = ops[g, 0]
            bit = ops[g, 1]
            slot = ops[g, 3]
            theta = 0.0
            if slot >= 0:
                theta = values[b, slot]
                acc = 0.0
                if kind == RZ:
                    for i in range(dim):
                        z = lam[i].conjugate() * phi[i]
                        if i & bit == 0:
                            acc += z.imag
                        else:
                            acc -= z.imag
                else:
                    for i in range(dim):
                        if i & bit == 0:
                            j = i | bit
                            acc += (lam[j].conjugate() * phi[i] - lam[i].conjugate() * phi[j]).real
                grads[b, slot] += acc
            _apply(phi, kind, bit, ops[g, 2], -theta)
            _apply(lam, kind, bit, ops[g, 2], -theta)
    return grads


# ---------------------------------------------------------------------------
# fused kernels for the layered circuit: product-state encoding, one
# permutation per entangling block, one 2x2 matrix per ROT


@njit(cache=True)
def _rot(alpha, beta, gamma):
    c = math.cos(beta / 2)
    s = math.sin(beta / 2)
    pa0 = complex(math.cos(alpha / 2), -math.sin(alpha / 2))
    pg0 = complex(math.cos(gamma / 2), -math.sin(gamma / 2))
    pa1 = pa0.conjugate()
    pg1 = pg0.conjugate()
    u = np.empty((2, 2), dtype=np.complex128)
    u[0, 0] = pg0 * c * pa0
    u[0, 1] = -pg0 * s * pa1
    u[1, 0] = pg1 * s * pa0
    u[1, 1] = pg1 * c * pa1
    return u


@njit(cache=True)
def _apply_2x2(psi, bit, u00, u01, u10, u11):
    dim = psi.shape[0]
    for base in range(0, dim, 2 * bit):
        for i in range(base, base + bit):
            j = i + bit
            a = psi[i]
            b = psi[j]
            psi[i] = u00 * a + u01 * b
            psi[j] = u10 * a + u11 * b


@njit(cache=True)
def _permute(psi, perm, tmp):
    for i in range(psi.shape[0]):
        tmp[i] = psi[perm[i]]
    psi[:] = tmp


@njit(cache=True)
def _layered_forward(enc, weights, perm, psi, tmp):
    n = enc.shape[0]
    dim = psi.shape[0]
    loc = np.empty((n, 2), dtype=np.complex128)
    for q in range(n):
        c = math.cos(enc[q, 0] / 2)
        s = math.sin(enc[q, 0] / 2)
        p0 = complex(math.cos(enc[q, 1] / 2), -math.sin(enc[q, 1] / 2))
        loc[q, 0] = _S * (c - s) * p0
        loc[q, 1] = _S * (c + s) * p0.conjugate()
    for i in range(dim):
        amp = complex(1.0, 0.0)
        for q in range(n):
            amp *= loc[q, (i >> (n - 1 - q)) & 1]
        psi[i] = amp
    for layer in range(weights.shape[0]):
        _permute(psi, perm, tmp)
        for q in range(n):
            u = _rot(weights[layer, q, 0], weights[layer, q, 1], weights[layer, q, 2])
            _apply_2x2(psi, 1 << (n - 1 - q), u[0, 0], u[0, 1], u[1, 0], u[1, 1])


@njit(cache=True)
def layered_simulate(enc, weights, perm):
    """``enc``: (B, n, 2) RY/RZ encoding angles; ``weights``: (L, n, 3) ROT angles."""
    batch, n = enc.shape[0], enc.shape[1]
    dim = 1 << n
    out = np.empty((batch, dim), dtype=np.complex128)
    tmp = np.empty(dim, dtype=np.complex128)
    for b in range(batch):
        _layered_forward(enc[b], weights, perm, out[b], tmp)
    return out


@njit(cache=True)
def _cross(lam, phi, bit):
    """2x2 matrix ``C[a, b] = sum conj(lam[.., a, ..]) phi[.., b, ..]`` over the other qubits."""
    c = np.zeros((2, 2), dtype=np.complex128)
    dim = phi.shape[0]
    for base in range(0, dim, 2 * bit):
        for i in range(base, base + bit):
            j = i + bit
            l0 = lam[i].conjugate()
            l1 = lam[j].conjugate()
            c[0, 0] += l0 * phi[i]
            c[0, 1] += l0 * phi[j]
            c[1, 0] += l1 * phi[i]
            c[1, 1] += l1 * phi[j]
    return c


@njit(cache=True)
def _undo_rz_cross(c, theta):
    # C <- G^T C conj(G) for G = RZ(theta)
    ph = complex(math.cos(theta), -math.sin(theta))
    c[0, 1] *= ph
    c[1, 0] *= ph.conjugate()


@njit(cache=True)
def _undo_ry_cross(c, theta):
    # C <- R^T C R for R = RY(theta)
    co = math.cos(theta / 2)
    s = math.sin(theta / 2)
    a00 = co * c[0, 0] + s * c[1, 0]
    a01 = co * c[0, 1] + s * c[1, 1]
    a10 = -s * c[0, 0] + co * c[1, 0]
    a11 = -s * c[0, 1] + co * c[1, 1]
    c[0, 0] = a00 * co + a01 * s
    c[0, 1] = -a00 * s + a01 * co
    c[1, 0] = a10 * co + a11 * s
    c[1, 1] = -a10 * s + a11 * co


@njit(cache=True)
def layered_adjoint(enc, weights, perm, inv_perm, signs, upstream):
    """Per-sample gradients of ``sum_k upstream[b, k] <Z_k>``.

    Returns ``(g_enc, g_weights)`` shaped like ``enc`` and ``(B,) + weights.shape``.
    """
    batch, n = enc.shape[0], enc.shape[1]
    n_layers = weights.shape[0]
    dim = 1 << n
    g_enc = np.zeros(enc.shape)
    g_w = np.zeros((batch, n_layers, n, 3))
    phi = np.empty(dim, dtype=np.complex128)
    lam = np.empty(dim, dtype=np.complex128)
    tmp = np.empty(dim, dtype=np.complex128)
    for b in range(batch):
        _layered_forward(enc[b], weights, perm, phi, tmp)
        for i in range(dim):
            m = 0.0
            for k in range(n):
                m += signs[i, k] * upstream[b, k]
            lam[i] = m * phi[i]
        for layer in range(n_layers - 1, -1, -1):
            # ROTs within a layer commute, so each qubit's gradients can be read at the layer output
            for q in range(n):
                bit = 1 << (n - 1 - q)
                c = _cross(lam, phi, bit)
                alpha = weights[layer, q, 0]
                beta = weights[layer, q, 1]
                gamma = weights[layer, q, 2]
                g_w[b, layer, q, 2] = (c[0, 0] - c[1, 1]).imag
                _undo_rz_cross(c, gamma)
                g_w[b, layer, q, 1] = (c[1, 0] - c[0, 1]).real
                _undo_ry_cross(c, beta)
                g_w[b, layer, q, 0] = (c[0, 0] - c[1, 1]).imag
            for q in range(n):
                bit = 1 << (n - 1 - q)
                u = _rot(weights[layer, q, 0], weights[layer, q, 1], weights[layer, q, 2])
                # inverse = conjugate transpose
                v00 = u[0, 0].conjugate()
                v01 = u[1, 0].conjugate()
                v10 = u[0, 1].conjugate()
                v11 = u[1, 1].conjugate()
                _apply_2x2(phi, bit, v00, v01, v10, v11)
                _apply_2x2(lam, bit, v00, v01, v10, v11)
            _permute(phi, inv_perm, tmp)
            _permute(lam, inv_perm, tmp)
        for q in range(n):
            c = _cross(lam, phi, 1 << (n - 1 - q))
            g_enc[b, q, 1] = (c[0, 0] - c[1, 1]).imag
            _undo_rz_cross(c, enc[b, q, 1])
            g_enc[b, q, 0] = (c[1, 0] - c[0, 1]).real
    return g_enc, g_w
