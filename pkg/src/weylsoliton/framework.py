"""Pointwise soliton data and the tensors built from it.

A framework tensor ``T`` is a 6x4 array with ``T[p, k] = T(e_i ^ e_j, e_k)``
for the bivector ``p = (i, j)``.  Pairings sum over this grid, i.e. over
``i < j`` and all ``k``.

Index conventions (frame components, zero based):

* ``P_ijk = grad_i Rc_jk - grad_j Rc_ik``; on a soliton this equals
  ``R_jikp f_p``, which is how :func:`framework_tensors` builds it.
* ``Q_ijk = d_ki grad_j S - d_kj grad_i S``
* ``M_ijk = Rc_kj f_i - Rc_ki f_j``
* ``N_ijk = d_kj f_i - d_ki f_j``
* interior Weyl ``W_ijkp f_p`` and divergence ``(dW)_ijk = grad_p W_ijkp``.

Every function accepts a :class:`PointGeometry` whose arrays may carry
leading batch axes; residuals then hold one value per jet.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import curvature as cv
from .lambda2 import _EMBED, BASIS_PAIRS, HODGE_BASIS, SELF_DUAL, act, wedge

_PI = np.array([p[0] for p in BASIS_PAIRS])
_PJ = np.array([p[1] for p in BASIS_PAIRS])
_I4 = np.eye(4)


class JetError(ValueError):
    pass


def _bdot(a, v):
    return np.einsum("...ij,...j->...i", a, v)


def _vdot(u, v):
    return np.einsum("...i,...i->...", u, v)


# ---------------------------------------------------------------- point data

@dataclass(frozen=True)
class PointGeometry:
    """Soliton jet at a point, in an oriented orthonormal frame.

    ``grad_rc[..., i, j, k] = grad_i Rc_jk``; ``grad_R[..., p, :, :]`` is the
    covariant derivative of the curvature operator along ``e_p``, and
    ``grad_hessf`` has the layout of ``grad_rc``.
    """

    R: np.ndarray
    Rc: np.ndarray
    S: np.ndarray | float
    gradf: np.ndarray
    hessf: np.ndarray
    lam: np.ndarray | float
    grad_rc: np.ndarray | None = None
    grad_s: np.ndarray | None = None
    grad_R: np.ndarray | None = None
    grad_hessf: np.ndarray | None = None
    n: int = 4
    meta: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_curvature(cls, R, gradf, lam, **jets):
        """Build the algebraic part from ``R``, ``∇f`` and the soliton equation."""
        R = np.asarray(R, dtype=float)
        rc = cv.ricci(R)
        lam_a = np.asarray(lam, dtype=float)
        s = np.trace(rc, axis1=-2, axis2=-1)
        return cls(
            R=R,
            Rc=rc,
            S=s if s.ndim else float(s),
            gradf=np.asarray(gradf, dtype=float),
            hessf=lam_a[..., None, None] * _I4 - rc,
            lam=lam_a if lam_a.ndim else float(lam_a),
            **jets,
        )

    @property
    def batch_shape(self):
        return np.shape(self.gradf)[:-1]

    @property
    def has_jets(self) -> bool:
        return self.grad_rc is not None and self.grad_s is not None

    @property
    def E(self):
        return self.Rc - np.asarray(self.S)[..., None, None] / self.n * _I4

    def decomposition(self) -> cv.CurvatureDecomposition:
        return cv.decompose(self.R)

    def scale(self):
        """Per-jet magnitude used to make residuals relative."""
        c = np.maximum(np.max(np.abs(self.R), axis=(-1, -2)), np.abs(np.asarray(self.lam)))
        f = np.linalg.norm(self.gradf, axis=-1)
        return np.maximum(c, 1e-300) * np.maximum(f, 1.0) + f

    def soliton_residuals(self) -> dict[str, float]:
        lam = np.asarray(self.lam)[..., None, None]
        out = {
            "ricci_contraction": float(np.max(np.abs(cv.ricci(self.R) - self.Rc))),
            "scalar_trace": float(np.max(np.abs(np.trace(self.Rc, axis1=-2, axis2=-1) - self.S))),
            "soliton_equation": float(np.max(np.abs(self.Rc + self.hessf - lam * _I4))),
            "trace_identity": float(
                np.max(np.abs(self.S + np.trace(self.hessf, axis1=-2, axis2=-1) - self.n * np.asarray(self.lam)))
            ),
        }
        if self.grad_s is not None:
            out["rc_gradf"] = float(np.max(np.abs(_bdot(self.Rc, self.gradf) - 0.5 * self.grad_s)))
        if self.has_jets:
            div = np.einsum("...jji->...i", self.grad_rc)
            tr = np.einsum("...ijj->...i", self.grad_rc)
            out["contracted_bianchi"] = float(np.max(np.abs(div - 0.5 * self.grad_s)))
            out["trace_of_grad_rc"] = float(np.max(np.abs(tr - self.grad_s)))
        return out

    def index(self, i) -> "PointGeometry":
        """Single jet ``i`` of a batch."""
        def pick(x):
            return None if x is None else np.asarray(x)[i]

        return PointGeometry(
            R=self.R[i], Rc=self.Rc[i], S=float(np.asarray(self.S)[i]), gradf=self.gradf[i],
            hessf=self.hessf[i], lam=float(np.asarray(self.lam)[i]), grad_rc=pick(self.grad_rc),
            grad_s=pick(self.grad_s), grad_R=pick(self.grad_R), grad_hessf=pick(self.grad_hessf), n=self.n,
        )


def _require_soliton(pg: PointGeometry, tol: float):
    lam = np.asarray(pg.lam)[..., None, None]
    err = np.max(np.abs(pg.Rc + pg.hessf - lam * _I4), axis=(-1, -2))
    if np.any(err > tol * np.maximum(1.0, pg.scale())):
        raise JetError(f"soliton residual {np.max(err):.3g} exceeds tolerance; algebraic P is not valid")


# ---------------------------------------------------------------- helpers

def to_grid(t3):
    """Restrict ``t[..., i, j, k]`` to the 6x4 bivector grid."""
    return np.asarray(t3)[..., _PI, _PJ, :]


def from_grid(t):
    """Antisymmetric-in-(i, j) 4x4x4 array from a 6x4 grid."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape[:-2] + (4, 4, 4))
    out[..., _PI, _PJ, :] = t
    out[..., _PJ, _PI, :] = -t
    return out


def pairing(t1, t2):
    """``<T, T'>`` summed over ``i < j`` and ``k``."""
    return np.einsum("...pk,...pk->...", np.asarray(t1, dtype=float), np.asarray(t2, dtype=float))


def project_tensor(t, sign: int):
    """Self-dual (``+1``) or anti-self-dual (``-1``) part in Hodge coordinates (3x4)."""
    h = np.einsum("ap,...pk->...ak", HODGE_BASIS, np.asarray(t, dtype=float))
    return h[..., :3, :] if sign == 1 else h[..., 3:, :]


def contract_last(op, v):
    """``T_ijk = X_ijkp v_p`` for a curvature-type operator ``X``, as a grid."""
    return to_grid(np.einsum("...ijkp,...p->...ijk", cv.tensor_from_operator(op), v))


def contract_vector_slot(t, v):
    """``T(·, v)``: contraction of the vector slot of a framework tensor."""
    return np.einsum("...pk,...k->...p", t, v)


def divergence_last(grad_op):
    """``T_ijk = sum_p grad_p X_ijkp`` from ``grad_op[..., p, :, :]``, as a grid."""
    t = cv.tensor_from_operator(grad_op)
    return to_grid(np.einsum("...pijkp->...ijk", t))


def rc_circ_rc(pg: PointGeometry):
    return cv.kulkarni_nomizu(pg.Rc, pg.Rc)


def h_tensor(pg: PointGeometry):
    """``H = Hess f ∘ g``."""
    return cv.kulkarni_nomizu(pg.hessf, _I4)


# ---------------------------------------------------------------- P, Q, M, N, C, D

def p_algebraic(R, gradf):
    """``P_ijk = R_jikp f_p``."""
    return to_grid(np.einsum("...jikp,...p->...ijk", cv.tensor_from_operator(R), gradf))


def p_from_jets(grad_rc):
    """``P_ijk = grad_i Rc_jk - grad_j Rc_ik``."""
    g = np.asarray(grad_rc, dtype=float)
    return to_grid(g - np.swapaxes(g, -3, -2))


def q_tensor(grad_s):
    v = np.asarray(grad_s, dtype=float)
    return to_grid(np.einsum("ki,...j->...ijk", _I4, v) - np.einsum("kj,...i->...ijk", _I4, v))


def m_tensor(rc, gradf):
    return to_grid(np.einsum("...kj,...i->...ijk", rc, gradf) - np.einsum("...ki,...j->...ijk", rc, gradf))


def n_tensor(gradf):
    v = np.asarray(gradf, dtype=float)
    return to_grid(np.einsum("kj,...i->...ijk", _I4, v) - np.einsum("ki,...j->...ijk", _I4, v))


def coefficients(n: int) -> dict[str, float]:
    """Dimension-dependent coefficients of ``C``, ``D`` and the Weyl divergence."""
    return {
        "C_Q": 1.0 / (2 * (n - 1)),
        "D_Q": -1.0 / (2 * (n - 1) * (n - 2)),
        "D_M": 1.0 / (n - 2),
        "D_N": -1.0 / ((n - 1) * (n - 2)),
        "dW": -(n - 3) / (n - 2),
    }


@dataclass(frozen=True)
class FrameworkTensors:
    P: np.ndarray
    Q: np.ndarray
    M: np.ndarray
    N: np.ndarray
    C: np.ndarray
    D: np.ndarray
    P_jet: np.ndarray | None = None

    def as_dict(self):
        return {k: getattr(self, k) for k in ("P", "Q", "M", "N", "C", "D")}


def framework_tensors(pg: PointGeometry, tol: float = 1e-9) -> FrameworkTensors:
    """``P, Q, M, N, C, D`` from the algebraic soliton jet (``P`` via ``i_∇f R``)."""
    _require_soliton(pg, tol)
    c = coefficients(pg.n)
    grad_s = 2.0 * _bdot(pg.Rc, pg.gradf)
    p = p_algebraic(pg.R, pg.gradf)
    q = q_tensor(grad_s)
    m = m_tensor(pg.Rc, pg.gradf)
    nn = n_tensor(pg.gradf)
    s = np.asarray(pg.S)[..., None, None]
    return FrameworkTensors(
        P=p,
        Q=q,
        M=m,
        N=nn,
        C=p + c["C_Q"] * q,
        D=c["D_Q"] * q + c["D_M"] * m + c["D_N"] * s * nn,
        P_jet=p_from_jets(pg.grad_rc) if pg.grad_rc is not None else None,
    )


# ---------------------------------------------------------------- residual records

@dataclass(frozen=True)
class Residual:
    """One identity ``lhs = rhs`` evaluated on one jet or a batch of jets."""

    name: str
    lhs: np.ndarray
    rhs: np.ndarray
    scale: np.ndarray

    @property
    def errors(self):
        return np.abs(np.asarray(self.lhs, dtype=float) - np.asarray(self.rhs, dtype=float))

    @property
    def rel_errors(self):
        sc = np.asarray(self.scale, dtype=float)
        return np.where(sc > 0, self.errors / np.where(sc > 0, sc, 1.0), self.errors)

    @property
    def abs(self) -> float:
        return float(np.max(self.errors, initial=0.0))

    @property
    def rel(self) -> float:
        return float(np.max(self.rel_errors, initial=0.0))


def _tres(name, lhs, rhs, scale, tensor_ndim: int):
    """Residual of a tensor identity, reduced to a max-norm per jet."""
    diff = np.asarray(lhs, dtype=float) - np.asarray(rhs, dtype=float)
    axes = tuple(range(diff.ndim - tensor_ndim, diff.ndim))
    err = np.max(np.abs(diff), axis=axes) if axes else np.abs(diff)
    return Residual(name, err, np.zeros_like(err), np.asarray(scale, dtype=float))


def interior_weyl(pg: PointGeometry, tol: float = 1e-9):
    """``W_ijkp f_p`` and the residuals of the interior-product identities."""
    ft = framework_tensors(pg, tol)
    n = pg.n
    d = pg.decomposition()
    s = np.asarray(pg.S)[..., None, None]
    lam = np.asarray(pg.lam)[..., None, None]
    iw = contract_last(d.W, pg.gradf)
    rhs_w = -ft.P - ft.Q / (2 * (n - 2)) + ft.M / (n - 2) - s * ft.N / ((n - 1) * (n - 2))
    sc = pg.scale() ** 2
    res = [
        _tres("iR = -P", contract_last(pg.R, pg.gradf), -ft.P, sc, 2),
        _tres("i(g∘g) = -2N", contract_last(cv.GG, pg.gradf), -2 * ft.N, sc, 2),
        _tres("i(Rc∘g) = Q/2 - M", contract_last(cv.kulkarni_nomizu(pg.Rc, _I4), pg.gradf), 0.5 * ft.Q - ft.M, sc, 2),
        _tres("iH = M - Q/2 - 2λN", contract_last(h_tensor(pg), pg.gradf), ft.M - 0.5 * ft.Q - 2 * lam * ft.N, sc, 2),
        _tres("iW = -P - Q/2(n-2) + M/(n-2) - SN/(n-1)(n-2)", iw, rhs_w, sc, 2),
        _tres("D = C + iW", ft.D, ft.C + iw, sc, 2),
    ]
    if ft.P_jet is not None:
        res.append(_tres("P (jets) = P (i_∇f R)", ft.P_jet, ft.P, sc, 2))
    return iw, res


def weyl_divergence_from_jets(pg: PointGeometry):
    """``grad_p W_ijkp`` computed from ``grad_R``, ``grad_rc``, ``grad_s``."""
    if pg.grad_R is None or not pg.has_jets:
        raise JetError("the Weyl divergence needs grad_R, grad_rc and grad_s jets")
    n = pg.n
    grad_e = pg.grad_rc - np.einsum("...p,jk->...pjk", pg.grad_s, _I4) / n
    grad_w = (
        pg.grad_R
        - cv.kulkarni_nomizu(grad_e, _I4) / (n - 2)
        - np.einsum("...p,ab->...pab", pg.grad_s, cv.GG) / (2 * n * (n - 1))
    )
    return divergence_last(grad_w)


def divergence_representation_residuals(pg: PointGeometry):
    """Residuals of the divergence identities, built from jets only (no algebraic P)."""
    if pg.grad_R is None or not pg.has_jets:
        raise JetError("divergence identities need grad_R, grad_rc and grad_s")
    n = pg.n
    c = coefficients(n)
    p = p_from_jets(pg.grad_rc)
    q = q_tensor(pg.grad_s)
    d_r = divergence_last(pg.grad_R)
    d_sgg = divergence_last(np.einsum("...p,ab->...pab", pg.grad_s, cv.GG))
    d_rcg = divergence_last(cv.kulkarni_nomizu(pg.grad_rc, _I4))
    d_w = weyl_divergence_from_jets(pg)
    sc = np.maximum(
        1.0, np.maximum(np.max(np.abs(pg.grad_R), axis=(-1, -2, -3)), np.max(np.abs(pg.grad_rc), axis=(-1, -2, -3)))
    )
    res = [
        _tres("δR = -P", d_r, -p, sc, 2),
        _tres("δ(S g∘g) = 2Q", d_sgg, 2 * q, sc, 2),
        _tres("δ(Rc∘g) = -P + Q/2", d_rcg, -p + 0.5 * q, sc, 2),
        _tres("δW = -(n-3)/(n-2) C", d_w, c["dW"] * (p + c["C_Q"] * q), sc, 2),
    ]
    if pg.grad_hessf is not None:
        d_h = divergence_last(cv.kulkarni_nomizu(pg.grad_hessf, _I4))
        res.append(_tres("-δH = -P + Q/2", -d_h, -p + 0.5 * q, sc, 2))
        d_f = d_w + (n - 3) / (n - 2) * d_h + n * (n - 3) / (4 * (n - 1) * (n - 2)) * d_sgg
        res.append(_tres("δF = 0", d_f, 0.0, sc, 2))
    return res


def pairing_table_residuals(pg: PointGeometry, tol: float = 1e-9):
    """The eight pointwise pairing identities, each written with the factor 2."""
    n = pg.n
    f = pg.gradf
    if pg.has_jets:
        p, gs = p_from_jets(pg.grad_rc), pg.grad_s
    else:
        _require_soliton(pg, tol)
        gs = 2 * _bdot(pg.Rc, f)
        p = p_algebraic(pg.R, f)
    q = q_tensor(gs)
    m = m_tensor(pg.Rc, f)
    nn = n_tensor(f)
    s2 = _vdot(gs, gs)
    fs = _vdot(f, gs)
    f2 = _vdot(f, f)
    rc2 = np.sum(pg.Rc**2, axis=(-1, -2))
    S = np.asarray(pg.S)
    rows = [
        ("2<P,Q> = -|∇S|²", 2 * pairing(p, q), -s2),
        ("2<P,N> = <∇f,∇S>", 2 * pairing(p, nn), fs),
        ("2<Q,Q> = 2(n-1)|∇S|²", 2 * pairing(q, q), 2 * (n - 1) * s2),
        ("2<M,M> = 2|Rc|²|∇f|² - |∇S|²/2", 2 * pairing(m, m), 2 * rc2 * f2 - 0.5 * s2),
        ("2<N,N> = 2(n-1)|∇f|²", 2 * pairing(nn, nn), 2 * (n - 1) * f2),
        ("2<Q,M> = |∇S|² - 2S<∇f,∇S>", 2 * pairing(q, m), s2 - 2 * S * fs),
        ("2<Q,N> = -2(n-1)<∇f,∇S>", 2 * pairing(q, nn), -2 * (n - 1) * fs),
        ("2<M,N> = 2S|∇f|² - <∇f,∇S>", 2 * pairing(m, nn), 2 * S * f2 - fs),
    ]
    sc = pg.scale() ** 2
    if pg.grad_rc is not None:
        sc = np.maximum(sc, np.sum(pg.grad_rc**2, axis=(-1, -2, -3)))
    return [Residual(name, l, r, sc) for name, l, r in rows]


def orthogonality_residuals(pg: PointGeometry, tol: float = 1e-9):
    """Orthogonality of ``Q, N`` against ``i_∇f W`` and ``δW`` (full and ± parts)."""
    ft = framework_tensors(pg, tol)
    iw, _ = interior_weyl(pg, tol)
    c = coefficients(pg.n)
    if pg.grad_R is not None and pg.has_jets:
        dw = weyl_divergence_from_jets(pg)
        p = p_from_jets(pg.grad_rc)
        gs = pg.grad_s
    else:
        dw = c["dW"] * ft.C
        p = ft.P
        gs = 2 * _bdot(pg.Rc, pg.gradf)
    q = q_tensor(gs)
    nn = ft.N
    sc = pg.scale() ** 3
    out = []
    for a_name, a in (("Q", q), ("N", nn)):
        for b_name, b in (("i_∇fW", iw), ("δW", dw)):
            out.append(Residual(f"<{a_name},{b_name}> = 0", pairing(a, b), 0.0, sc))
            for sign, tag in ((1, "+"), (-1, "-")):
                val = pairing(project_tensor(a, sign), project_tensor(b, sign))
                out.append(Residual(f"<{a_name}{tag},{b_name}{tag}> = 0", val, 0.0, sc))
    s2 = _vdot(gs, gs)
    pp, qp = project_tensor(p, 1), project_tensor(q, 1)
    out.append(Residual("<P+,Q+> = -|∇S|²/4", pairing(pp, qp), -0.25 * s2, sc))
    out.append(Residual("<Q+,Q+> = 3|∇S|²/2", pairing(qp, qp), 1.5 * s2, sc))
    lhs = 2 * pairing(dw, dw)
    rhs = c["dW"] ** 2 * 2 * pairing(p + c["C_Q"] * q, p)
    out.append(Residual("2|δW|² = ((n-3)/(n-2))² 2<P + Q/2(n-1), P>", lhs, rhs, sc))
    return out


# ---------------------------------------------------------------- Bochner formula

def weyl_plus_data(pg: PointGeometry):
    d = pg.decomposition()
    wp = cv.weyl_pm(d.W, 1)
    return d, wp, np.sum(wp * wp, axis=(-1, -2)), np.linalg.det(wp)


def bochner_rhs(pg: PointGeometry, gradW_norm_sq=0.0):
    """Both forms of the right-hand side of the drift-Laplacian formula for ``|W+|^2``:
    with ``<Rc∘Rc, W+>`` and with ``<Hess f∘Hess f, W+>``."""
    d, _, n2, det = weyl_plus_data(pg)
    wp_op = cv.weyl_pm_operator(d.W, 1)
    base = 2 * np.asarray(gradW_norm_sq) + 4 * np.asarray(pg.lam) * n2 - 36 * det
    rc_form = base - cv.inner(rc_circ_rc(pg), wp_op)
    hess_form = base - cv.inner(cv.kulkarni_nomizu(pg.hessf, pg.hessf), wp_op)
    return rc_form, hess_form


def einstein_bochner_rhs(pg: PointGeometry, gradW_norm_sq=0.0):
    """``2|∇W+|² + S|W+|² - 36 det W+``, the harmonic-Weyl specialization."""
    _, _, n2, det = weyl_plus_data(pg)
    return 2 * np.asarray(gradW_norm_sq) + np.asarray(pg.S) * n2 - 36 * det


def delta_f_weyl_rhs_tensor(W4, Rc, lam, n: int = 4):
    """Right-hand side of the drift-Laplacian formula for ``W`` as a full 4-tensor.

    ``C_ijkl = W_pijr W_rlkp`` in an orthonormal frame; the products of two
    Ricci tensors without a contraction are read as ``Rc_ik Rc_jl``.
    """
    g = _I4
    S = np.trace(Rc, axis1=-2, axis2=-1)[..., None, None, None, None]
    rc2 = np.sum(Rc * Rc, axis=(-1, -2))[..., None, None, None, None]
    lam = np.asarray(lam)[..., None, None, None, None]
    c = np.einsum("...pijr,...rlkp->...ijkl", W4, W4)
    quad = c - np.einsum("...ijlk->...ijkl", c) + np.einsum("...ikjl->...ijkl", c) - np.einsum("...iljk->...ijkl", c)
    rr = Rc @ Rc

    def kn_like(a, b):
        return (
            np.einsum("...ik,...jl->...ijkl", a, b)
            - np.einsum("...il,...jk->...ijkl", a, b)
            + np.einsum("...jl,...ik->...ijkl", a, b)
            - np.einsum("...jk,...il->...ijkl", a, b)
        )

    t_r2 = np.einsum("...ik,...jl->...ijkl", Rc, Rc) - np.einsum("...jk,...il->...ijkl", Rc, Rc)
    t_gg = np.einsum("ik,jl->ijkl", g, g) - np.einsum("il,jk->ijkl", g, g)
    return (
        2 * lam * W4
        - 2 * quad
        - 2 / (n - 2) ** 2 * kn_like(rr, g)
        + 2 * S / (n - 2) ** 2 * kn_like(Rc, g)
        - 2 / (n - 2) * t_r2
        - 2 * (S**2 - rc2) / ((n - 1) * (n - 2) ** 2) * t_gg
    )


def delta_f_weyl_rhs(pg: PointGeometry):
    """Right-hand side of the drift-Laplacian formula for ``W`` as a 6x6 operator."""
    d = pg.decomposition()
    t = delta_f_weyl_rhs_tensor(cv.tensor_from_operator(d.W), pg.Rc, pg.lam, pg.n)
    return cv.operator_from_tensor(t)


def delta_f_weyl_plus_pairing(pg: PointGeometry):
    """``<W+, RHS>`` from the full formula, and the closed form
    ``2λ|W+|² - 18 det W+ - <Rc∘Rc, W+>/2``."""
    d, _, n2, det = weyl_plus_data(pg)
    wp_op = cv.weyl_pm_operator(d.W, 1)
    lhs = cv.inner(wp_op, delta_f_weyl_rhs(pg))
    rhs = 2 * np.asarray(pg.lam) * n2 - 18 * det - 0.5 * cv.inner(rc_circ_rc(pg), wp_op)
    return lhs, rhs


# ---------------------------------------------------------------- H and R-bar

def calculate_h_blocks(hessf):
    """Listed block form of ``Hess f ∘ g``: diagonal blocks ``A = Δf/2 Id`` and mixed block ``B``."""
    f = np.asarray(hessf, dtype=float)
    lap = np.trace(f, axis1=-2, axis2=-1)
    F = lambda i, j: f[..., i, j]  # noqa: E731
    b = np.stack(
        [
            np.stack([(F(0, 0) + F(1, 1) - F(2, 2) - F(3, 3)) / 2, F(1, 2) - F(0, 3), F(1, 3) + F(0, 2)], -1),
            np.stack([F(1, 2) + F(0, 3), (F(0, 0) + F(2, 2) - F(1, 1) - F(3, 3)) / 2, F(2, 3) - F(0, 1)], -1),
            np.stack([F(1, 3) - F(0, 2), F(2, 3) + F(0, 1), (F(0, 0) + F(3, 3) - F(1, 1) - F(2, 2)) / 2], -1),
        ],
        -2,
    )
    return 0.5 * lap[..., None, None] * np.eye(3), b


@dataclass(frozen=True)
class RBar:
    Rbar: np.ndarray
    normal_form: cv.NormalForm | None
    Kmin: np.ndarray
    Kmax: np.ndarray
    residuals: list


def rbar_and_sectional(pg: PointGeometry, tol: float = 1e-9) -> RBar:
    """``R̄ = R + H/2``, its block structure, extreme sectional curvatures and normal form."""
    d = pg.decomposition()
    h = h_tensor(pg)
    rbar = pg.R + 0.5 * h
    lam = np.asarray(pg.lam)
    S = np.asarray(pg.S)
    closed = d.W + (lam / 2 - S / 12)[..., None, None] * cv.GG
    ap, am, c = cv.blocks(rbar)
    hp, hm, hc = cv.blocks(h)
    a_ref, b_ref = calculate_h_blocks(pg.hessf)
    shift = (lam - S / 6)[..., None, None] * np.eye(3)
    sc = pg.scale()
    res = [
        _tres("R̄ = W + (λ/2 - S/12) g∘g", rbar, closed, sc, 2),
        _tres("R̄ mixed block = 0", c, 0.0, sc, 2),
        _tres("Ā+ = W+ + (λ - S/6) Id", ap, cv.weyl_pm(d.W, 1) + shift, sc, 2),
        _tres("Ā- = W- + (λ - S/6) Id", am, cv.weyl_pm(d.W, -1) + shift, sc, 2),
        _tres("H diagonal blocks = Δf/2 Id", np.stack([hp, hm], -3), np.stack([a_ref, a_ref], -3), sc, 3),
        _tres("H mixed block = B (as listed)", hc, b_ref, sc, 2),
        Residual("<H, W> = 0", cv.inner(h, d.W), 0.0, sc**2),
    ]
    lp = np.linalg.eigvalsh(ap)
    lm = np.linalg.eigvalsh(am)
    kmin = 0.5 * (lp[..., 0] + lm[..., 0])
    kmax = 0.5 * (lp[..., -1] + lm[..., -1])
    nf = cv.berger_normal_form(rbar, tol=max(tol, 1e-8)) if rbar.ndim == 2 else None
    return RBar(rbar, nf, kmin, kmax, res)


def sectional_curvature(op, x, y):
    """``K(x, y) = R(x^y, x^y)`` for orthonormal ``x, y``."""
    s = wedge(x, y)
    return float(s @ np.asarray(op) @ s)


@dataclass(frozen=True)
class SectionalBoundReport:
    eps: float
    inequalities: dict
    equality_case: bool
    int_rc_combination: float
    lap_s_residual: float | None

    @property
    def ok(self) -> bool:
        return all(v[0] for v in self.inequalities.values())


def sectional_bound_report(pg: PointGeometry, eps: float, tol: float = 1e-9, lap_s: float | None = None):
    """Consequences of ``K̄ >= eps λ`` at a single point (requires ``eps < 1/3``).

    ``lap_s`` is ``ΔS`` for the pointwise scalar identity; when omitted it is
    taken to be 0, which is exact on homogeneous examples.
    """
    if eps >= 1.0 / 3.0:
        raise ValueError(f"eps must be < 1/3, got {eps}")
    rb = rbar_and_sectional(pg, tol)
    lam, S = float(pg.lam), float(pg.S)
    t = tol * max(1.0, abs(lam), abs(S))
    if rb.Kmin < eps * lam - t:
        raise ValueError(f"hypothesis fails: min K̄ = {float(rb.Kmin):.6g} < eps λ = {eps * lam:.6g}")
    lap_f = float(np.trace(pg.hessf))
    d = pg.decomposition()
    wp = np.linalg.eigvalsh(cv.weyl_pm(d.W, 1))
    wm = np.linalg.eigvalsh(cv.weyl_pm(d.W, -1))
    nw = float(np.linalg.norm(wp) + np.linalg.norm(wm))
    bound = 2 * (1 - eps) * lam - S / 3
    ineq = {
        "S + 3Δf >= 12ελ": (S + 3 * lap_f >= 12 * eps * lam - t, S + 3 * lap_f - 12 * eps * lam),
        "S <= 6(1-ε)λ": (S <= 6 * (1 - eps) * lam + t, 6 * (1 - eps) * lam - S),
        "Δf >= 2(3ε-1)λ": (lap_f >= 2 * (3 * eps - 1) * lam - t, lap_f - 2 * (3 * eps - 1) * lam),
        "(|W+|+|W-|)/√6 <= 2(1-ε)λ - S/3": (nw / np.sqrt(6) <= bound + t, bound - nw / np.sqrt(6)),
    }

    def pattern(ev):
        # a diag(-1, -1, 2) with a >= 0
        return abs(ev[0] - ev[1]) <= t and ev[2] >= -t

    equality = abs(ineq["(|W+|+|W-|)/√6 <= 2(1-ε)λ - S/3"][1]) <= t and pattern(wp) and pattern(wm)
    rc2 = float(np.sum(pg.Rc**2))
    lap_res = None
    if pg.grad_s is not None:
        ls = 0.0 if lap_s is None else lap_s
        lap_res = ls + 2 * rc2 - float(pg.gradf @ pg.grad_s) - 2 * lam * S
    return SectionalBoundReport(eps, ineq, bool(equality), rc2 - S**2 / 2 + 4 * lam**2, lap_res)


def isotropic_u(pg: PointGeometry):
    """Smallest eigenvalue of ``S/3 - 2W±`` over both orientations."""
    d = pg.decomposition()
    s3 = (np.asarray(pg.S) / 3)[..., None, None] * np.eye(3)
    vals = [np.linalg.eigvalsh(s3 - 2 * cv.weyl_pm(d.W, s))[..., 0] for s in (1, -1)]
    out = np.minimum(*vals)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------- rigidity algebra

def rc_pattern_13(rc, tol: float = 1e-9) -> bool:
    """Ricci has one eigenvalue of multiplicity one and another of multiplicity three."""
    ev = np.linalg.eigvalsh(rc)
    sc = max(1.0, float(np.max(np.abs(ev))))
    return bool(np.ptp(ev[:3]) <= tol * sc or np.ptp(ev[1:]) <= tol * sc)


def w_rc_rc(pg: PointGeometry):
    return cv.inner(pg.decomposition().W, rc_circ_rc(pg))


def gradient_eigen_items(pg: PointGeometry, tol: float = 1e-9):
    """Norms of the items in the gradient-eigenvector equivalence at a point."""
    f = pg.gradf
    f2 = float(f @ f)
    ft = framework_tensors(pg, tol)
    rcf = pg.Rc @ f
    mu = float(rcf @ f) / f2 if f2 > 0 else 0.0
    items = {
        "Rc(∇f) - μ∇f": float(np.linalg.norm(rcf - mu * f)),
        "Q(·,·,∇f)": float(np.linalg.norm(ft.Q @ f)),
        "M(·,·,∇f)": float(np.linalg.norm(ft.M @ f)),
        "δW(∇f,·,·)": float(np.linalg.norm(ft.C @ f)),
        "δH(∇f,·,·)": float(np.linalg.norm((-ft.P + 0.5 * ft.Q) @ f)),
    }
    if pg.grad_R is not None and pg.has_jets:
        items["δW(∇f,·,·) from jets"] = float(np.linalg.norm(weyl_divergence_from_jets(pg) @ f))
    return items


def vector_form_tensor(vecs):
    """Framework tensor ``T(α, e_k) = <α e_k, V_k>``, ``V_k`` the columns of ``vecs``."""
    return np.einsum("pik,...ik->...pk", _EMBED, np.asarray(vecs, dtype=float))


def t_combination_vectors(pg: PointGeometry, a: float, b: float, c: float):
    """Columns ``V_k`` with ``aQ + bM + cN = <α e_k, V_k>`` in a Ricci eigenframe.

    Returns ``(frame, V)``: ``frame`` holds the Ricci eigenvectors, ``V`` is
    expressed in that frame.
    """
    ev, frame = np.linalg.eigh(pg.Rc)
    f = frame.T @ pg.gradf
    rcf = ev * f
    vecs = np.stack([-2 * a * rcf + (b * ev[k] + c) * f for k in range(4)], axis=1)
    return frame, vecs


def plus_kernel(vecs_shape=(4, 4)):
    """Orthonormal basis of the ``V`` with ``T+ = 0`` for ``T = <α e_k, V_k>``."""
    basis = np.eye(16).reshape(16, 4, 4)
    cols = np.stack([project_tensor(vector_form_tensor(b), 1).ravel() for b in basis], axis=1)
    _, s, vt = np.linalg.svd(cols)
    rank = int(np.sum(s > 1e-12 * s[0]))
    return vt[rank:]


def gradient_weyl_contraction(pg: PointGeometry):
    """``sum_i f_i W+_ijkl W+_ajkl`` and ``f_a |W+|^2`` (full index sums)."""
    d = pg.decomposition()
    t = cv.tensor_from_operator(cv.weyl_pm_operator(d.W, 1))
    lhs = np.einsum("...i,...ijkl,...ajkl->...a", pg.gradf, t, t)
    n2 = np.sum(cv.weyl_pm(d.W, 1) ** 2, axis=(-1, -2))
    return lhs, n2[..., None] * pg.gradf


def wplus_cc_pair(R):
    """``<W+, C C^T>`` and ``<W+, Rc∘Rc>/4``, ``C`` the mixed block of ``R``."""
    d = cv.decompose(R)
    _, _, c = cv.blocks(R)
    wp = cv.weyl_pm(d.W, 1)
    lhs = np.sum(wp * (c @ np.swapaxes(c, -1, -2)), axis=(-1, -2))
    rhs = 0.25 * cv.inner(cv.kulkarni_nomizu(d.Rc, d.Rc), cv.weyl_pm_operator(d.W, 1))
    return lhs, rhs


def hess_pairing_conversion(W, hessf):
    """``<W, Hess∘Hess>`` (half-index sums) and ``sum W_ijkl f_ik f_jl`` (full sums)."""
    lhs = cv.inner(W, cv.kulkarni_nomizu(hessf, hessf))
    rhs = np.einsum("...ijkl,...ik,...jl->...", cv.tensor_from_operator(W), hessf, hessf)
    return lhs, rhs


def eigen_jet(rng, scale: float = 1.0) -> PointGeometry:
    """Random jet whose ``∇f`` is a Ricci eigenvector with the other three eigenvalues equal."""
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
    zeta, eta = rng.normal(scale=scale, size=2)
    rc = q @ np.diag([zeta, eta, eta, eta]) @ q.T
    w = cv.random_weyl(rng, scale)
    s = zeta + 3 * eta
    R = w + s / 24 * cv.GG + 0.5 * cv.kulkarni_nomizu(rc - s / 4 * _I4, _I4)
    gradf = rng.normal(scale=scale) * q[:, 0]
    return PointGeometry.from_curvature(R, gradf, rng.normal(scale=scale))


@dataclass(frozen=True)
class RigidityReport:
    rc_pattern: bool
    w_rc_rc: float
    eigen_items: dict
    eigen_items_consistent: bool
    eigen_d_applies: bool
    d_norm: float
    contraction_residual: float
    cc_residual: float
    plus_extension: dict | None = None


def rigidity_predicates(pg: PointGeometry, abc: tuple[float, float, float] | None = None, tol: float = 1e-9):
    """Algebraic rigidity facts at a single point."""
    sc = float(pg.scale())
    items = gradient_eigen_items(pg, tol)
    flags = [v <= tol * sc**2 for v in items.values()]
    ft = framework_tensors(pg, tol)
    f = pg.gradf
    f2 = float(f @ f)
    if f2 == 0:
        dq_applies = True
    else:
        e1 = f / np.sqrt(f2)
        zeta = float(e1 @ pg.Rc @ e1)
        proj = _I4 - np.outer(e1, e1)
        eta = (float(pg.S) - zeta) / (pg.n - 1)
        dq_applies = bool(
            np.linalg.norm(pg.Rc @ e1 - zeta * e1) <= tol * sc
            and np.max(np.abs(proj @ pg.Rc @ proj - eta * proj)) <= tol * sc
        )
    lhs, rhs = gradient_weyl_contraction(pg)
    wl, wr = wplus_cc_pair(pg.R)
    gv = None
    if abc is not None:
        t = abc[0] * ft.Q + abc[1] * ft.M + abc[2] * ft.N
        gv = {"|T|": float(np.linalg.norm(t)), "|T+|": float(np.linalg.norm(project_tensor(t, 1)))}
    return RigidityReport(
        rc_pattern=rc_pattern_13(pg.Rc, tol),
        w_rc_rc=float(w_rc_rc(pg)),
        eigen_items=items,
        eigen_items_consistent=bool(all(flags) or not any(flags)),
        eigen_d_applies=dq_applies,
        d_norm=float(np.linalg.norm(ft.D)),
        contraction_residual=float(np.max(np.abs(lhs - rhs))),
        cc_residual=float(abs(wl - wr)),
        plus_extension=gv,
    )


def decom_basis(x, alphas=None):
    """``{X, α1 X, α2 X, α3 X}`` for the √2-scaled self-dual triple (or a given one)."""
    alphas = np.sqrt(2.0) * SELF_DUAL if alphas is None else alphas
    return np.stack([np.asarray(x, dtype=float)] + [act(a, x) for a in alphas], axis=-1)
