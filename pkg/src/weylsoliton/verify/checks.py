"""Registry of verification checks.

Algebraic checks run vectorized over a batch of synthetic soliton jets and
return one relative residual per jet.  Chart checks evaluate one point of one
zoo entry at a time.  Every residual is ``|lhs - rhs| / max(1, scale)`` with
the scale chosen per identity (see :class:`weylsoliton.framework.Residual`).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.spatial.transform import Rotation

from .. import chart as ch
from .. import curvature as cv
from .. import framework as fw
from ..lambda2 import SELF_DUAL, induced_rotation, lift_rotation_pair, quaternion_triple_check
from ..zoo import ZooEntry, default_conformal_factor

SUITES = ("algebraic", "differential", "conformal", "flow")


@dataclass(frozen=True)
class Check:
    check_id: str
    suite: str
    reference: str
    tolerance: float
    batch: Callable | None = None  # (jets, rng) -> (residuals, worst_row_names)
    point: Callable | None = None  # (entry, x) -> (residual, detail)
    applies: Callable[[ZooEntry], bool] = lambda e: True
    differential: bool = False
    order: float | None = None  # declared convergence order; None means the FD order


def _worst(residuals: list[fw.Residual]):
    """Per-jet maximum relative error over a family, and the name of the worst row."""
    errs = np.stack([np.broadcast_to(r.rel_errors, np.shape(residuals[0].rel_errors)) for r in residuals])
    idx = np.argmax(errs, axis=0)
    names = np.array([r.name for r in residuals])
    return errs.max(axis=0), names[idx]


def _single(name, values):
    values = np.asarray(values, dtype=float)
    return values, np.full(values.shape, name, dtype=object)


# ---------------------------------------------------------------- random algebraic instances

def random_weyl_batch(rng, count: int, sign: int | None = None, scale: float = 1.0):
    h = np.zeros((count, 6, 6))
    for blk, s in ((slice(0, 3), 1), (slice(3, 6), -1)):
        if sign is not None and s != sign:
            continue
        x = rng.normal(scale=scale, size=(count, 3, 3))
        x = 0.5 * (x + np.swapaxes(x, -1, -2))
        h[:, blk, blk] = x - np.trace(x, axis1=-2, axis2=-1)[:, None, None] / 3 * np.eye(3)
    return cv.from_hodge(h)


def _rotations(rng, count):
    q, r = np.linalg.qr(rng.normal(size=(count, 4, 4)))
    q = q * np.sign(np.diagonal(r, axis1=-2, axis2=-1))[:, None, :]
    flip = np.linalg.det(q) < 0
    q[flip, :, 0] *= -1
    return q


def ricci13_batch(rng, count):
    """Curvature with Ricci eigenvalues of multiplicities (1, 3) and ``∇f`` along the simple one."""
    q = _rotations(rng, count)
    zeta, eta = rng.normal(size=(2, count))
    diag = np.zeros((count, 4, 4))
    diag[:, 0, 0] = zeta
    for k in range(1, 4):
        diag[:, k, k] = eta
    rc = q @ diag @ np.swapaxes(q, -1, -2)
    s = zeta + 3 * eta
    e = rc - s[:, None, None] / 4 * np.eye(4)
    R = random_weyl_batch(rng, count) + (s / 24)[:, None, None] * cv.GG + 0.5 * cv.kulkarni_nomizu(e, np.eye(4))
    gradf = rng.normal(size=count)[:, None] * q[:, :, 0]
    return fw.PointGeometry.from_curvature(R, gradf, rng.normal(size=count))


# ---------------------------------------------------------------- algebraic checks

def _interior(jets, rng):
    return _worst(fw.interior_weyl(jets)[1])


def _divergence(jets, rng):
    return _worst(fw.divergence_representation_residuals(jets))


def _pairings(jets, rng):
    return _worst(fw.pairing_table_residuals(jets))


def _orthogonality(jets, rng):
    return _worst(fw.orthogonality_residuals(jets))


def _rbar(jets, rng):
    return _worst(fw.rbar_and_sectional(jets).residuals)


def _drift_pairing(jets, rng):
    lhs, rhs = fw.delta_f_weyl_plus_pairing(jets)
    sc = np.maximum(1.0, jets.scale()) ** 3
    return _single("<W+, Δ_f W RHS> closed form", np.abs(lhs - rhs) / sc)


def _bochner_forms(jets, rng):
    a, b = fw.bochner_rhs(jets)
    sc = np.maximum(1.0, jets.scale()) ** 3
    return _single("Rc∘Rc form = Hess f∘Hess f form", np.abs(a - b) / sc)


def _wplus_cc(jets, rng):
    lhs, rhs = fw.wplus_cc_pair(jets.R)
    sc = np.maximum(1.0, np.max(np.abs(jets.R), axis=(-1, -2))) ** 3
    return _single("<W+, CCᵀ> = <W+, Rc∘Rc>/4", np.abs(lhs - rhs) / sc)


def _grad_contraction(jets, rng):
    lhs, rhs = fw.gradient_weyl_contraction(jets)
    sc = np.maximum(1.0, jets.scale()) ** 3
    return _single("f_i W+_ijkl W+_ajkl = f_a|W+|²", np.max(np.abs(lhs - rhs), axis=-1) / sc)


def _ricci13(jets, rng):
    pg = ricci13_batch(rng, len(jets.gradf))
    val = fw.w_rc_rc(pg)
    sc = np.maximum(1.0, np.max(np.abs(pg.R), axis=(-1, -2))) ** 3
    return _single("<W, Rc∘Rc> = 0 for Ricci multiplicities (1,3)", np.abs(val) / sc)


def _eigen_d(jets, rng):
    pg = ricci13_batch(rng, len(jets.gradf))
    ft = fw.framework_tensors(pg)
    sc = np.maximum(1.0, pg.scale()) ** 2
    return _single("D = 0 when ∇f is a Ricci eigenvector and the rest coincide", np.max(np.abs(ft.D), axis=(-1, -2)) / sc)


_KER = None


def _plus_extension(jets, rng):
    """``T = aQ + bM + cN`` in vector form, and ``T+ = 0 ⇒ T = 0`` for vector-form tensors."""
    global _KER
    if _KER is None:
        _KER = fw.plus_kernel()
    count = len(jets.gradf)
    abc = rng.normal(size=(count, 3))
    ft = fw.framework_tensors(jets)
    t = abc[:, 0, None, None] * ft.Q + abc[:, 1, None, None] * ft.M + abc[:, 2, None, None] * ft.N
    ev, frame = np.linalg.eigh(jets.Rc)
    f = np.einsum("nij,ni->nj", frame, jets.gradf)
    rcf = ev * f
    vecs = (-2 * abc[:, 0, None, None] * rcf[:, :, None]
            + (abc[:, 1, None, None] * ev[:, None, :] + abc[:, 2, None, None]) * f[:, :, None])
    rot = induced_rotation(frame)  # bivector basis change into the eigenframe
    t_eig = np.einsum("nqp,nqk,nkl->npl", rot, t, frame)
    err_form = np.max(np.abs(t_eig - fw.vector_form_tensor(vecs)), axis=(-1, -2))
    v = rng.normal(size=(count, 16))
    proj = (v @ _KER.T @ _KER).reshape(count, 4, 4)
    err_ext = np.max(np.abs(fw.vector_form_tensor(proj)), axis=(-1, -2))
    sc = np.maximum(1.0, jets.scale()) ** 2
    res = np.stack([err_form / sc, err_ext])
    names = np.array(["aQ + bM + cN = <α e_k, V_k>", "T+ = 0 implies T = 0"])
    return res.max(axis=0), names[np.argmax(res, axis=0)]


def _contractions(jets, rng):
    count = len(jets.gradf)
    worst = np.zeros(count)
    names = np.full(count, "", dtype=object)
    for sign, tag in ((1, "+"), (-1, "-")):
        w = random_weyl_batch(rng, count, sign)
        t = cv.tensor_from_operator(w)
        n2 = np.sum(cv.weyl_pm(w, sign) ** 2, axis=(-1, -2))
        eye = n2[:, None, None] * np.eye(4)
        a = np.max(np.abs(np.einsum("nikpq,njkpq->nij", t, t) - eye), axis=(-1, -2))
        b = np.max(np.abs(np.einsum("nikpq,nkpqj->nij", t, t) - 0.5 * eye), axis=(-1, -2))
        sc = np.maximum(1.0, n2)
        for val, label in ((a / sc, f"W{tag}_ikpq W{tag}_jkpq = |W{tag}|² δ"), (b / sc, f"W{tag}_ikpq W{tag}_kpqj = |W{tag}|² δ/2")):
            upd = val > worst
            worst = np.where(upd, val, worst)
            names = np.where(upd, label, names)
    return worst, names


def _det_bound(jets, rng):
    count = len(jets.gradf)
    ev = rng.normal(size=(count, 3))
    ev -= ev.mean(axis=1, keepdims=True)
    norm = np.sqrt(np.sum(ev**2, axis=1))
    viol = np.maximum(0.0, -18 * np.prod(ev, axis=1) - np.sqrt(6) * norm**3) / np.maximum(norm**3, 1e-300)
    return _single("-18 det W+ <= √6 |W+|³", viol)


def _bivectors(jets, rng):
    """Quaternion relations of the self-dual triple and the SO(4) lift of rotation pairs."""
    ok, _ = quaternion_triple_check(np.sqrt(2.0) * SELF_DUAL)
    count = len(jets.gradf)
    out = np.zeros(count)
    seeds = rng.integers(0, 2**31, size=2)
    rps = Rotation.random(count, random_state=int(seeds[0])).as_matrix()
    rms = Rotation.random(count, random_state=int(seeds[1])).as_matrix()
    for n in range(count):
        h = cv.to_hodge(induced_rotation(lift_rotation_pair(rps[n], rms[n])))
        out[n] = max(np.max(np.abs(h[:3, :3] - rps[n])), np.max(np.abs(h[3:, 3:] - rms[n])), np.max(np.abs(h[:3, 3:])))
    return _single("induced rotation of the lift = (R+, R-)", out + (0.0 if ok else 1.0))


def _normal_form(jets, rng):
    count = len(jets.gradf)
    w = random_weyl_batch(rng, count)
    out = np.zeros(count)
    for n in range(count):
        nf = cv.berger_normal_form(w[n])
        out[n] = np.max(np.abs(cv.rotate_operator(w[n], nf.frame) - nf.operator())) / max(1.0, np.max(np.abs(w[n])))
    return _single("Weyl operator = [[A, B], [B, A]] in the normal frame", out)


# ---------------------------------------------------------------- chart checks

def _max_rel(rs):
    rs = list(rs)
    worst = max(rs, key=lambda r: r.rel)
    return worst.rel, worst.name


def _soliton(entry, x):
    r = ch.soliton_residuals(entry.chart, x)
    k = max(r, key=r.get)
    return r[k] / max(1.0, abs(entry.chart.lam)), k


def _div_chart(entry, x):
    return _max_rel(ch.divergence_residuals_at(entry.chart, x))


def _bochner(entry, x):
    return _max_rel(ch.bochner_check_at(entry.chart, x).values())


def _drift_weyl(entry, x):
    r = ch.drift_weyl_residual_at(entry.chart, x)
    return r.rel, r.name


def _kato(entry, x):
    ok, lhs, rhs = ch.kato_check_at(entry.chart, x)
    return max(0.0, rhs - lhs) / max(1.0, lhs), "|∇W+|² >= |∇|W+||²"


def _integrands(entry, x):
    it = entry.integrals(x)
    gb = abs(it["gb_integral"] - it["gb_expected"]) / it["gb_expected"]
    sig = abs(it["sig_integral"] - it["sig_expected"]) / max(1.0, it["sig_expected"])
    return (gb, "8π²χ") if gb >= sig else (sig, "12π²τ")


_U = {}


def conformal_factor(entry):
    return _U.setdefault(entry.name, default_conformal_factor())


def _conf(key):
    def run(entry, x):
        r = ch.conformal_residuals(entry.chart, conformal_factor(entry), x)[key]
        return r.rel, r.name

    return run


def _conf_bochner(key):
    def run(entry, x):
        r = ch.conformal_bochner_residual(entry.chart, conformal_factor(entry), x)[key]
        return r.rel, r.name

    return run


def _flow(key):
    def run(entry, x, tau=None, t_order=4):
        kw = {} if tau is None else {"tau": tau}
        r = ch.flow_variation_weyl_at(entry.chart, x, t_order=t_order, **kw)[key]
        return r.rel, r.name

    return run


def _is_soliton(e):
    return e.chart.soliton


def _is_closed(e):
    return e.closed


def _build():
    A = "algebraic"
    checks = [
        Check("alg.interior", A, "interior products with ∇f and D = C + i_∇f W", 1e-10, batch=_interior),
        Check("alg.divergence", A, "divergence representations of R, S g∘g, Rc∘g, W, H and F", 1e-10, batch=_divergence),
        Check("alg.pairings", A, "pointwise pairing table of P, Q, M, N", 1e-10, batch=_pairings),
        Check("alg.orthogonality", A, "orthogonality of Q, N against i_∇f W and δW, with the ± parts", 1e-10, batch=_orthogonality),
        Check("alg.rbar", A, "R + H/2 and the block form of Hess f ∘ g", 1e-10, batch=_rbar),
        Check("alg.drift_pairing", A, "W+ paired with the drift-Laplacian formula for W", 1e-10, batch=_drift_pairing),
        Check("alg.bochner_forms", A, "Rc∘Rc and Hess f∘Hess f forms of the Bochner right-hand side", 1e-10, batch=_bochner_forms),
        Check("alg.wplus_cc", A, "<W+, CCᵀ> = <W+, Rc∘Rc>/4", 1e-10, batch=_wplus_cc),
        Check("alg.grad_contraction", A, "contraction recovering f_a |W+|²", 1e-12, batch=_grad_contraction),
        Check("alg.ricci13", A, "<W, Rc∘Rc> = 0 for Ricci multiplicities (1,3)", 1e-12, batch=_ricci13),
        Check("alg.eigen_d", A, "eigenvector condition on ∇f implies D = 0", 1e-10, batch=_eigen_d),
        Check("alg.plus_extension", A, "vector form of aQ + bM + cN and its self-dual extension", 1e-12, batch=_plus_extension),
        Check("alg.contractions", A, "quadratic contractions of W+ and W-", 1e-12, batch=_contractions),
        Check("alg.det_bound", A, "-18 det W+ <= √6 |W+|³", 1e-12, batch=_det_bound),
        Check("alg.bivectors", A, "quaternion triple and SO(4) lift of bivector rotations", 1e-12, batch=_bivectors),
        Check("alg.normal_form", A, "normal form of Weyl operators", 1e-12, batch=_normal_form),
        Check("diff.soliton", "differential", "soliton equation, trace, ∇S = 2Rc(∇f), constancy, ΔS formula", 1e-7,
              point=_soliton, applies=_is_soliton, differential=True),
        Check("diff.divergence", "differential", "chart δW against the divergence representation", 1e-5,
              point=_div_chart, differential=True),
        Check("diff.bochner", "differential", "drift-Laplacian formula for |W+|² (and its Einstein form)", 1e-6,
              point=_bochner, applies=_is_soliton, differential=True),
        Check("diff.drift_weyl", "differential", "drift-Laplacian formula for W", 1e-6,
              point=_drift_weyl, applies=_is_soliton, differential=True),
        Check("diff.kato", "differential", "Kato inequality for W+", 1e-8, point=_kato, differential=True),
        Check("diff.integrands", "differential", "Gauss-Bonnet and signature integrands times volume", 1e-3,
              point=_integrands, applies=_is_closed),
        Check("conf.weyl", "conformal", "W~ = u² W", 1e-5, point=_conf("W~ frame = u^-2 W frame"), differential=True),
        Check("conf.scalar", "conformal", "S~ = u^-3(-6Δu + Su)", 1e-5, point=_conf("S~ = u^-3(-6Δ + S)u"), differential=True),
        Check("conf.ricci", "conformal", "Rc~ in terms of Rc and log u", 1e-5, point=_conf("Rc~ formula"), differential=True),
        Check("conf.divw", "conformal", "δ~W~ = δW + (n-3) W(∇u/u, ·,·,·)", 1e-5, point=_conf("conf_divergence"), differential=True),
        Check("conf.covnorm", "conformal", "|∇~W~|² with the displayed coefficients", 1e-5, point=_conf("covnorm"), differential=True),
        Check("conf.covnorm_derived", "conformal", "|∇~W~|² with recomputed coefficients", 1e-5,
              point=_conf("covnorm_derived"), differential=True),
        Check("conf.bochner", "conformal", "conformal change of h with the displayed coefficients", 1e-5,
              point=_conf_bochner("conf_bochner"), differential=True),
        Check("conf.bochner_derived", "conformal", "conformal change of h with recomputed coefficients", 1e-5,
              point=_conf_bochner("conf_bochner_derived"), differential=True),
        Check("flow.wplus_variation", "flow", "first variation of W+ under Ricci flow", 1e-3, point=_flow("wplus_variation"),
              differential=True, order=2.0),
        Check("flow.wplus_norm_variation", "flow", "first variation of |W+|² under Ricci flow", 1e-3, point=_flow("wplus_norm_variation"),
              differential=True, order=2.0),
    ]
    return {c.check_id: c for c in checks}


CHECKS = _build()
