"""Algebraic curvature operators in dimension four.

A curvature operator is stored as a symmetric 6x6 array ``M`` over the
bivector basis of :mod:`weylsoliton.lambda2`, with ``M[p, q] = R_{ijkl}``
for ``p = (i, j)`` and ``q = (k, l)``.  The sign convention makes the round
sphere positive: ``R_{1212} = K`` and ``Rc_{jl} = sum_i R_{ijil}``.

Inner products of (4,0) tensors sum over ``i<j, k<l`` only, which for
operators is the Frobenius product of the 6x6 arrays.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .lambda2 import BASIS_PAIRS, HODGE_BASIS, STAR, lift_rotation_pair, induced_rotation

_PI = np.array([p[0] for p in BASIS_PAIRS])
_PJ = np.array([p[1] for p in BASIS_PAIRS])


class CurvatureError(ValueError):
    pass


# ---------------------------------------------------------------- conversions

def operator_from_tensor(r):
    """6x6 operator of a 4-tensor ``R_{ijkl}`` (leading batch axes allowed)."""
    r = np.asarray(r, dtype=float)
    return r[..., _PI[:, None], _PJ[:, None], _PI[None, :], _PJ[None, :]]


# pair index and orientation sign of every (i, j); diagonal entries get sign 0
_PAIR_IDX = np.zeros((4, 4), dtype=int)
_PAIR_SIGN = np.zeros((4, 4))
for _p, (_i, _j) in enumerate(BASIS_PAIRS):
    _PAIR_IDX[_i, _j] = _PAIR_IDX[_j, _i] = _p
    _PAIR_SIGN[_i, _j], _PAIR_SIGN[_j, _i] = 1.0, -1.0
_SIGN4 = _PAIR_SIGN[:, :, None, None] * _PAIR_SIGN[None, None, :, :]


def tensor_from_operator(m):
    """Full 4-tensor with the antisymmetries of a curvature operator."""
    m = np.asarray(m, dtype=float)
    return m[..., _PAIR_IDX[:, :, None, None], _PAIR_IDX[None, None, :, :]] * _SIGN4


def to_hodge(m):
    """Operator in the self-dual / anti-self-dual basis: ``[[A+, C], [C^T, A-]]``."""
    return HODGE_BASIS @ np.asarray(m, dtype=float) @ HODGE_BASIS.T


def from_hodge(h):
    return HODGE_BASIS.T @ np.asarray(h, dtype=float) @ HODGE_BASIS


def blocks(m):
    """Return ``(A+, A-, C)`` of an operator."""
    h = to_hodge(m)
    return h[..., :3, :3], h[..., 3:, 3:], h[..., :3, 3:]


# ---------------------------------------------------------------- products

def kulkarni_nomizu(a, b):
    """Kulkarni-Nomizu product of two symmetric 4x4 arrays, as an operator."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    t = (
        np.einsum("...ik,...jl->...ijkl", a, b)
        + np.einsum("...jl,...ik->...ijkl", a, b)
        - np.einsum("...il,...jk->...ijkl", a, b)
        - np.einsum("...jk,...il->...ijkl", a, b)
    )
    return operator_from_tensor(t)


GG = kulkarni_nomizu(np.eye(4), np.eye(4))


def inner(a, b):
    """``<A, B>`` summed over ``i<j, k<l``."""
    return np.einsum("...pq,...pq->...", np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def norm_sq(a):
    return inner(a, a)


def ricci(m):
    """``Rc_{jl} = sum_i R_{ijil}``."""
    return np.einsum("...ijil->...jl", tensor_from_operator(m))


# ---------------------------------------------------------------- validation

@dataclass(frozen=True)
class CurvatureDiagnostics:
    symmetry_residual: float
    bianchi_residual: float

    def ok(self, tol: float = 1e-10) -> bool:
        return abs(self.symmetry_residual) <= tol and abs(self.bianchi_residual) <= tol


def bianchi_residual(m):
    """``tr A+ - tr A-``, which equals ``2(R_1234 + R_1342 + R_1423)``."""
    m = np.asarray(m, dtype=float)
    return 2.0 * (m[..., 0, 3] + m[..., 1, 4] + m[..., 2, 5])


def validate_curvature(m) -> CurvatureDiagnostics:
    m = np.asarray(m, dtype=float)
    if m.shape != (6, 6):
        raise CurvatureError(f"expected a 6x6 operator, got shape {m.shape}")
    sym = float(np.max(np.abs(m - m.T)))
    return CurvatureDiagnostics(sym, float(bianchi_residual(m)))


def project_bianchi(m):
    """Symmetrize and remove the first-Bianchi violation (a multiple of the star)."""
    m = np.asarray(m, dtype=float)
    m = 0.5 * (m + np.swapaxes(m, -1, -2))
    res = bianchi_residual(m)
    return m - (res / 6.0)[..., None, None] * STAR


# ---------------------------------------------------------------- decomposition

@dataclass(frozen=True)
class CurvatureDecomposition:
    """``R = W + U + V`` with ``U = (S/24) g∘g`` and ``V = E∘g / 2``."""

    W: np.ndarray
    U: np.ndarray
    V: np.ndarray
    Rc: np.ndarray
    S: float
    E: np.ndarray

    @property
    def R(self):
        return self.W + self.U + self.V

    def weyl_pm(self, sign: int):
        return weyl_pm(self.W, sign)


def decompose(m, tol: float = 1e-9) -> CurvatureDecomposition:
    """Split ``R`` into Weyl, scalar and traceless-Ricci parts (batched over leading axes)."""
    m = np.asarray(m, dtype=float)
    if m.shape[-2:] != (6, 6):
        raise CurvatureError(f"expected 6x6 operators, got shape {m.shape}")
    sym = np.max(np.abs(m - np.swapaxes(m, -1, -2)), axis=(-1, -2))
    bia = np.abs(bianchi_residual(m))
    scale = np.maximum(1.0, np.max(np.abs(m), axis=(-1, -2)))
    if np.any(sym > tol * scale) or np.any(bia > tol * scale):
        raise CurvatureError(
            f"not an algebraic curvature operator: symmetry residual {np.max(sym):.3g}, "
            f"Bianchi residual {np.max(bia):.3g}"
        )
    rc = ricci(m)
    s = np.trace(rc, axis1=-2, axis2=-1)
    e = rc - 0.25 * s[..., None, None] * np.eye(4)
    u = (s / 24.0)[..., None, None] * GG
    v = 0.5 * kulkarni_nomizu(e, np.eye(4))
    return CurvatureDecomposition(W=m - u - v, U=u, V=v, Rc=rc, S=s if s.ndim else float(s), E=e)


def weyl_pm(w, sign: int, tol: float = 1e-8):
    """3x3 restriction of a Weyl operator to the (anti-)self-dual bivectors."""
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")
    ap, am, c = blocks(w)
    scale = np.maximum(1.0, np.max(np.abs(w), axis=(-1, -2)))
    if np.any(np.max(np.abs(c), axis=(-1, -2)) > tol * scale):
        warnings.warn(
            f"operator has a nonzero mixed block (max {np.max(np.abs(c)):.3g}); not a Weyl operator",
            RuntimeWarning,
            stacklevel=2,
        )
    return ap if sign == 1 else am


def det_wpm(w, sign: int):
    return float(np.linalg.det(weyl_pm(w, sign)))


def weyl_pm_operator(w, sign: int):
    """The 6x6 operator ``W+`` (or ``W-``): ``W`` composed with the projection."""
    h = to_hodge(w)
    mask = np.zeros((6, 6))
    if sign == 1:
        mask[:3, :3] = 1.0
    else:
        mask[3:, 3:] = 1.0
    return from_hodge(h * mask)


# ---------------------------------------------------------------- normal form

@dataclass(frozen=True)
class NormalForm:
    frame: np.ndarray  # columns are the new orthonormal frame vectors
    a: np.ndarray
    b: np.ndarray

    def operator(self):
        """``[[A, B], [B, A]]`` in the frame's bivector basis."""
        return np.block([[np.diag(self.a), np.diag(self.b)], [np.diag(self.b), np.diag(self.a)]])


def _oriented_eigh(block):
    vals, vecs = np.linalg.eigh(block)
    for k in range(3):
        col = vecs[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            vecs[:, k] = -col
    if np.linalg.det(vecs) < 0:
        vecs[:, 2] = -vecs[:, 2]
    return vals, vecs


def rotate_operator(m, frame):
    """Components of ``m`` in the bivector basis built from ``frame`` columns."""
    t = induced_rotation(frame)
    return t.T @ np.asarray(m, dtype=float) @ t


def berger_normal_form(w, tol: float = 1e-8) -> NormalForm:
    """Berger normal form of an operator with vanishing mixed block.

    Eigenvalues come in ascending order in both blocks, so for a Weyl
    operator ``a + b`` and ``a - b`` are the sorted spectra of ``W+`` and
    ``W-``.  The frame is the SO(4) lift of the two eigenbases.
    """
    w = np.asarray(w, dtype=float)
    ap, am, c = blocks(w)
    scale = max(1.0, float(np.max(np.abs(w))))
    if np.max(np.abs(c)) > tol * scale:
        raise CurvatureError(f"mixed block is nonzero (max {np.max(np.abs(c)):.3g}); no normal form")
    lp, vp = _oriented_eigh(ap)
    lm, vm = _oriented_eigh(am)
    frame = lift_rotation_pair(vp, vm)
    return NormalForm(frame=frame, a=0.5 * (lp + lm), b=0.5 * (lp - lm))


# ---------------------------------------------------------------- integrands

def gauss_bonnet_integrand(m):
    """``|W|^2 - |E|^2/2 + S^2/24``; integrates to ``8 pi^2 chi``."""
    d = decompose(m)
    return float(norm_sq(d.W) - 0.5 * np.sum(d.E * d.E) + d.S**2 / 24.0)


def signature_integrand(m):
    """``|W+|^2 - |W-|^2``; integrates to ``12 pi^2 tau``."""
    d = decompose(m)
    return float(np.sum(weyl_pm(d.W, 1) ** 2) - np.sum(weyl_pm(d.W, -1) ** 2))


def hitchin_thorpe_check(m, tol: float = 1e-9) -> bool:
    """Pointwise form of ``|tau| <= 2 chi / 3`` for Einstein curvature.

    With the normalizations ``8 pi^2 chi`` and ``12 pi^2 tau`` the inequality
    becomes ``|sig| <= GB`` at each point.
    """
    d = decompose(m)
    scale = max(1.0, abs(d.S))
    if np.max(np.abs(d.E)) > tol * scale:
        raise CurvatureError("Hitchin-Thorpe check needs Einstein data (traceless Ricci is nonzero)")
    return abs(signature_integrand(m)) <= gauss_bonnet_integrand(m) + tol * scale**2


# ---------------------------------------------------------------- random data

def random_curvature(rng, scale: float = 1.0):
    """Random algebraic curvature operator."""
    a = rng.normal(scale=scale, size=(6, 6))
    return project_bianchi(a)


def random_weyl(rng, scale: float = 1.0, sign: int | None = None):
    """Random Weyl operator; ``sign`` restricts it to ``W+`` or ``W-`` only."""
    h = np.zeros((6, 6))
    for blk, s in ((slice(0, 3), 1), (slice(3, 6), -1)):
        if sign is not None and s != sign:
            continue
        x = rng.normal(scale=scale, size=(3, 3))
        x = 0.5 * (x + x.T)
        h[blk, blk] = x - np.trace(x) / 3.0 * np.eye(3)
    return from_hodge(h)
