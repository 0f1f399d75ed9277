"""Cross-checks model gradients by three independent routes.

* adjoint: the autodiff graph, whose circuit node uses the adjoint VJP;
* shift: a hand-written chain rule through the linear layers around the
  parameter-shift Jacobian of the circuit (quantum models only);
* finite differences: central differences on the flat parameter vector.

The checked scalar is ``u_actor . actor(obs) + u_critic . critic(obs)`` for
a random observation and random upstream vectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import autodiff as ad
from .envs import env_spec
from .models import build_actor_critic
from .vqc import param_shift_grad, vqc_forward

FD_STEP = 1e-4
SHIFT_TOL = 1e-8
FD_REL_TOL = 1e-4
# relative errors are taken against max(|g|, REL_FLOOR) so that vanishing
# gradients are judged on an absolute scale
REL_FLOOR = 1e-3


def adjoint_gradient(model, obs, upstream) -> np.ndarray:
    out, _ = model.graph(obs)
    bundle = ad.backward(ad.total(out * upstream))
    return np.concatenate([np.asarray(bundle.get(k, np.zeros(s)), dtype=float).ravel()
                           for k, s in model.shapes().items()])


def shift_gradient(model, obs, upstream) -> np.ndarray:
    p = model.params
    h = p["pre.weight"] @ obs + p["pre.bias"]
    z = vqc_forward(model.core_spec(), h)
    jac_x, jac_w = param_shift_grad(model.core_spec(), h)
    g_z = p["post.weight"].T @ upstream
    g_h = g_z @ jac_x
    grads = {
        "pre.weight": np.outer(g_h, obs),
        "pre.bias": g_h,
        "core.weights": np.tensordot(g_z, jac_w, axes=1),
        "post.weight": np.outer(upstream, z),
        "post.bias": upstream,
    }
    return np.concatenate([grads[k].ravel() for k in model.shapes()])


def finite_difference_gradient(model, obs, upstream, step: float = FD_STEP) -> np.ndarray:
    theta = model.flat()
    probe = model.copy()
    grad = np.empty_like(theta)
    for i in range(theta.size):
        values = []
        for sign in (1.0, -1.0):
            shifted = theta.copy()
            shifted[i] += sign * step
            probe.set_flat(shifted)
            values.append(float(upstream @ probe.forward(obs)))
        grad[i] = (values[0] - values[1]) / (2.0 * step)
    return grad


def parameter_labels(model, prefix: str) -> list:
    labels = []
    for name, shape in model.shapes().items():
        for idx in np.ndindex(*shape):
            labels.append(f"{prefix}.{name}[{','.join(map(str, idx))}]")
    return labels


def relative_error(a, b) -> np.ndarray:
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), REL_FLOOR)


@dataclass
class GradcheckReport:
    variant: str
    env: str
    seed: int
    n_params: int
    max_abs_adjoint_vs_shift: Optional[float]
    max_rel_adjoint_vs_fd: float
    max_rel_shift_vs_fd: Optional[float]
    worst_parameter: str
    failures: list

    @property
    def passed(self) -> bool:
        return not self.failures

    def lines(self) -> list:
        def fmt(v):
            return "n/a" if v is None else f"{v:.3e}"
        out = [
            f"gradcheck {self.variant} {self.env} seed={self.seed}: {self.n_params} parameters checked",
            f"  max |adjoint - shift|          {fmt(self.max_abs_adjoint_vs_shift)} (tol {SHIFT_TOL:g})",
            f"  max rel |adjoint - fd|         {fmt(self.max_rel_adjoint_vs_fd)} (tol {FD_REL_TOL:g})",
            f"  max rel |shift - fd|           {fmt(self.max_rel_shift_vs_fd)} (tol {FD_REL_TOL:g})",
            f"  worst parameter                {self.worst_parameter}",
        ]
        out += [f"  FAIL {msg}" for msg in self.failures]
        out.append("PASS" if self.passed else "FAIL")
        return out


def run_gradcheck(variant: str, env: str, seed: int, adjoint: Callable = adjoint_gradient) -> GradcheckReport:
    """Compare gradient routes for a freshly initialized actor and critic.

    ``adjoint`` can be swapped out, e.g. to check that a corrupted
    gradient is caught.
    """
    spec = env_spec(env)
    rng = np.random.default_rng(seed)
    actor, critic = build_actor_critic(spec, variant, rng)
    obs = rng.normal(size=spec.obs_dim)
    quantum = variant == "quantum"
    adj, shift, fd, labels = [], [], [], []
    for prefix, model in (("actor", actor), ("critic", critic)):
        upstream = rng.normal(size=model.head_dim)
        adj.append(adjoint(model, obs, upstream))
        fd.append(finite_difference_gradient(model, obs, upstream))
        if quantum:
            shift.append(shift_gradient(model, obs, upstream))
        labels += parameter_labels(model, prefix)
    adj, fd = np.concatenate(adj), np.concatenate(fd)

    failures = []
    rel_adj = relative_error(adj, fd)
    score = rel_adj / FD_REL_TOL
    abs_shift = rel_shift = None
    if quantum:
        shift = np.concatenate(shift)
        diff = np.abs(adj - shift)
        rel_sf = relative_error(shift, fd)
        abs_shift, rel_shift = float(diff.max()), float(rel_sf.max())
        score = np.maximum(score, np.maximum(diff / SHIFT_TOL, rel_sf / FD_REL_TOL))
        if abs_shift >= SHIFT_TOL:
            failures.append(f"adjoint vs shift at {labels[int(diff.argmax())]}: {abs_shift:.3e}")
        if rel_shift >= FD_REL_TOL:
            failures.append(f"shift vs finite differences at {labels[int(rel_sf.argmax())]}: {rel_shift:.3e}")
    if rel_adj.max() >= FD_REL_TOL:
        failures.append(f"adjoint vs finite differences at {labels[int(rel_adj.argmax())]}: {rel_adj.max():.3e}")
    return GradcheckReport(variant, env, seed, adj.size, abs_shift, float(rel_adj.max()), rel_shift,
                           labels[int(score.argmax())], failures)
