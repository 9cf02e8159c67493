"""Seeded random soliton jets for property testing.

A jet is built from a random algebraic curvature operator ``R`` and a random
gradient ``∇f``.  The soliton equation then fixes ``Hess f = λg - Rc`` and
``∇S = 2 Rc(∇f)``.  First derivatives are random elements of the affine
spaces cut out by the linear constraints the identities rely on:

* ``∇Rc`` is symmetric in its last two slots, its antisymmetrization is
  ``R_jikp f_p``, its trace is ``∇S`` and its divergence is ``∇S/2``;
* ``∇R`` satisfies both Bianchi identities and contracts to ``∇Rc``.

Nothing here claims the jet extends to an actual soliton metric.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.linalg import null_space

from . import curvature as cv
from .framework import PointGeometry
from .lambda2 import BASIS_PAIRS

_SYM_JK = [(j, k) for j in range(4) for k in range(j, 4)]
_SYM_AB = [(a, b) for a in range(6) for b in range(a, 6)]


def _grad_rc_from_vars(x):
    x = np.asarray(x)
    out = np.zeros(x.shape[:-1] + (4, 4, 4))
    xi = x.reshape(x.shape[:-1] + (4, 10))
    for m, (j, k) in enumerate(_SYM_JK):
        out[..., :, j, k] = xi[..., :, m]
        out[..., :, k, j] = xi[..., :, m]
    return out


def _grad_R_from_vars(y):
    y = np.asarray(y)
    out = np.zeros(y.shape[:-1] + (4, 6, 6))
    yi = y.reshape(y.shape[:-1] + (4, 21))
    for m, (a, b) in enumerate(_SYM_AB):
        out[..., :, a, b] = yi[..., :, m]
        out[..., :, b, a] = yi[..., :, m]
    return out


def _rc_constraints(grad_rc):
    """Left-hand sides of the ∇Rc constraints (antisymmetrization, div, trace)."""
    g = grad_rc
    anti = g - np.swapaxes(g, -3, -2)
    rows = [anti[..., i, j, :] for i, j in BASIS_PAIRS]
    div = np.einsum("...jji->...i", g)
    tr = np.einsum("...ijj->...i", g)
    return np.concatenate([np.stack(rows, axis=-2).reshape(g.shape[:-3] + (24,)), div, tr], axis=-1)


def _riem_constraints(grad_R):
    """Bianchi I, Bianchi II and the Ricci contraction of ``∇R``."""
    t = cv.tensor_from_operator(grad_R)  # (..., p, i, j, k, l)
    b1 = cv.bianchi_residual(grad_R)  # (..., p)
    b2 = []
    for p, i, j in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)):
        s = t[..., p, i, j, :, :] + t[..., i, j, p, :, :] + t[..., j, p, i, :, :]
        b2.append(np.stack([s[..., k, l] for k, l in BASIS_PAIRS], axis=-1))
    b2 = np.concatenate(b2, axis=-1)
    contr = np.einsum("...pijil->...pjl", t)
    contr = np.stack([contr[..., :, j, k] for j, k in _SYM_JK], axis=-1).reshape(t.shape[:-5] + (40,))
    return np.concatenate([b1, b2], axis=-1), contr


@lru_cache(maxsize=None)
def _rc_system():
    a = np.stack([_rc_constraints(_grad_rc_from_vars(e)) for e in np.eye(40)], axis=1)
    return a, np.linalg.pinv(a), null_space(a)


@lru_cache(maxsize=None)
def _riem_system():
    cols_h, cols_c = [], []
    for e in np.eye(84):
        h, c = _riem_constraints(_grad_R_from_vars(e))
        cols_h.append(h)
        cols_c.append(c)
    a = np.concatenate([np.stack(cols_h, axis=1), np.stack(cols_c, axis=1)], axis=0)
    n_hom = len(cols_h[0])
    return a, np.linalg.pinv(a), null_space(a), n_hom


def random_grad_rc(R, gradf, rng, scale: float = 1.0):
    """Random ``∇Rc`` compatible with a soliton jet (batched over leading axes)."""
    R = np.asarray(R, dtype=float)
    f = np.asarray(gradf, dtype=float)
    rc = cv.ricci(R)
    gs = 2 * np.einsum("...ij,...j->...i", rc, f)
    p = np.einsum("...jikp,...p->...ijk", cv.tensor_from_operator(R), f)
    rhs = np.concatenate(
        [np.stack([p[..., i, j, :] for i, j in BASIS_PAIRS], axis=-2).reshape(f.shape[:-1] + (24,)), 0.5 * gs, gs],
        axis=-1,
    )
    _, pinv, ns = _rc_system()
    z = rng.normal(scale=scale, size=f.shape[:-1] + (ns.shape[1],))
    x = rhs @ pinv.T + z @ ns.T
    return _grad_rc_from_vars(x), gs


def random_grad_R(grad_rc, rng, scale: float = 1.0):
    """Random ``∇R`` satisfying both Bianchi identities and contracting to ``grad_rc``."""
    grad_rc = np.asarray(grad_rc, dtype=float)
    _, pinv, ns, n_hom = _riem_system()
    contr = np.stack([grad_rc[..., :, j, k] for j, k in _SYM_JK], axis=-1)
    contr = contr.reshape(grad_rc.shape[:-3] + (40,))
    rhs = np.concatenate([np.zeros(grad_rc.shape[:-3] + (n_hom,)), contr], axis=-1)
    z = rng.normal(scale=scale, size=grad_rc.shape[:-3] + (ns.shape[1],))
    return _grad_R_from_vars(rhs @ pinv.T + z @ ns.T)


def constraint_residuals(R, gradf, grad_rc, grad_R=None):
    """Max violation of each linear constraint (for self-checks)."""
    rc = cv.ricci(R)
    gs = 2 * np.einsum("...ij,...j->...i", rc, gradf)
    p = np.einsum("...jikp,...p->...ijk", cv.tensor_from_operator(R), gradf)
    target = np.concatenate(
        [np.stack([p[..., i, j, :] for i, j in BASIS_PAIRS], axis=-2).reshape(np.shape(gradf)[:-1] + (24,)), 0.5 * gs, gs],
        axis=-1,
    )
    out = {"grad_rc": float(np.max(np.abs(_rc_constraints(grad_rc) - target)))}
    if grad_R is not None:
        h, c = _riem_constraints(grad_R)
        want = np.stack([grad_rc[..., :, j, k] for j, k in _SYM_JK], axis=-1).reshape(c.shape)
        out["bianchi"] = float(np.max(np.abs(h)))
        out["contraction"] = float(np.max(np.abs(c - want)))
    return out


def soliton_jets(count: int, seed: int = 0, jets: bool = True, riemann_jets: bool = True, scale: float = 1.0):
    """Deterministic batch of random soliton jets, as one batched PointGeometry."""
    rng = np.random.default_rng(seed)
    R = cv.project_bianchi(rng.normal(scale=scale, size=(count, 6, 6)))
    gradf = rng.normal(size=(count, 4))
    lam = rng.normal(scale=scale, size=count)
    grad_rc = grad_s = grad_R = None
    if jets:
        grad_rc, grad_s = random_grad_rc(R, gradf, rng, scale)
        if riemann_jets:
            grad_R = random_grad_R(grad_rc, rng, scale)
    extra = {}
    if grad_rc is not None:
        extra = {"grad_rc": grad_rc, "grad_s": grad_s, "grad_hessf": -grad_rc, "grad_R": grad_R}
    return PointGeometry.from_curvature(R, gradf, lam, **extra)
