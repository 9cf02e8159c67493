"""Differential geometry of closed-form metrics on coordinate charts.

Metrics and potentials are JAX functions of a point ``x`` in R^4.  Christoffel
symbols and curvature at a point always come from automatic differentiation
of the metric; covariant derivatives of curvature fields follow the chart's
:class:`DerivativePolicy` (automatic differentiation, or central differences
of order 2, 4 or 6).  Results are reported in the orthonormal frame obtained
by Gram-Schmidt from the coordinate frame, with Christoffel corrections
applied in coordinates before the change of frame.

Tensor conventions match :mod:`weylsoliton.curvature`:
``R_abcd = <R(d_a, d_b) d_d, d_c>`` so that round spheres are positive,
``Rc_bd = g^ac R_abcd`` and the divergence contracts the last slot.

Importing this module switches JAX to 64-bit floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import jax
import jax.numpy as jnp
import numpy as np

from . import curvature as cv
from . import framework as fw
from .lambda2 import BASIS_PAIRS, HODGE_BASIS

jax.config.update("jax_enable_x64", True)

_PI = np.array([p[0] for p in BASIS_PAIRS])
_PJ = np.array([p[1] for p in BASIS_PAIRS])


class ChartError(ValueError):
    pass


# ---------------------------------------------------------------- derivative policy

@dataclass(frozen=True)
class DerivativePolicy:
    """``mode`` is ``"analytic"`` (autodiff) or ``"fd"`` (central differences)."""

    mode: str = "fd"
    order: int = 4
    step: float = 1e-3

    def __post_init__(self):
        if self.mode not in ("analytic", "fd"):
            raise ChartError(f"unknown derivative mode {self.mode!r}")
        if self.mode == "fd":
            if self.order not in (2, 4, 6):
                raise ChartError(f"finite-difference order must be 2, 4 or 6, got {self.order}")
            if not (math.isfinite(self.step) and self.step > 0):
                raise ChartError(f"finite-difference step must be positive, got {self.step}")

    @property
    def reach(self) -> float:
        """Distance a single derivative level looks away from the point."""
        return 0.0 if self.mode == "analytic" else (self.order // 2) * self.step

    def describe(self) -> str:
        return "analytic" if self.mode == "analytic" else f"fd{self.order}(h={self.step:g})"


_ANALYTIC = DerivativePolicy("analytic")


@lru_cache(maxsize=None)
def fd_weights(order: int):
    """Offsets and weights of the central first-derivative stencil of the given order."""
    m = order // 2
    offs = np.arange(-m, m + 1, dtype=float)
    vander = np.vander(offs, increasing=True).T
    rhs = np.zeros(len(offs))
    rhs[1] = 1.0
    w = np.linalg.solve(vander, rhs)
    keep = np.abs(w) > 1e-14
    return offs[keep], w[keep]


def derivative(fn: Callable, policy: DerivativePolicy) -> Callable:
    """``x -> d fn(x)`` with the derivative index first."""
    if policy.mode == "analytic":
        jf = jax.jacfwd(fn)
        return lambda x: jnp.moveaxis(jf(x), -1, 0)
    offs, w = fd_weights(policy.order)
    h = policy.step
    shifts = jnp.asarray((offs[:, None, None] * h * np.eye(4)[None]).reshape(-1, 4))
    w = jnp.asarray(w)
    k = len(offs)

    def d(x):
        vals = jax.vmap(fn)(x + shifts)
        vals = vals.reshape((k, 4) + vals.shape[1:])
        return jnp.tensordot(w, vals, axes=1) / h

    return d


# ---------------------------------------------------------------- chart

@dataclass(frozen=True, eq=False)
class ChartGeometry:
    """Closed-form metric (and optional soliton potential) on a coordinate box."""

    name: str
    metric: Callable
    potential: Callable | None = None
    lam: float | None = None
    box: tuple = ((-1.0,) * 4, (1.0,) * 4)
    policy: DerivativePolicy = DerivativePolicy()
    soliton: bool = False
    params: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def with_policy(self, policy: DerivativePolicy) -> "ChartGeometry":
        # compiled evaluators are keyed by mode and order, so the cache is shared
        return replace(self, policy=policy, _cache=self._cache)

    def with_lambda(self, lam: float) -> "ChartGeometry":
        return replace(self, lam=lam, _cache=self._cache)

    def potential_fn(self) -> Callable:
        return self.potential if self.potential is not None else (lambda x: jnp.zeros(()))

    def sample(self, count: int, seed: int = 0, margin: float = 0.1) -> np.ndarray:
        """Random interior points, kept ``margin`` (fraction of the box) from its faces."""
        lo, hi = np.asarray(self.box[0], float), np.asarray(self.box[1], float)
        pad = margin * (hi - lo)
        rng = np.random.default_rng(seed)
        return rng.uniform(lo + pad, hi - pad, size=(count, 4))

    def _fn(self, key, build):
        """Compiled evaluator; ``build(stencil)`` returns the function of the point.

        The finite-difference step is passed as a traced argument so step
        refinement does not recompile.
        """
        mode, order = self.policy.mode, self.policy.order
        full = (key, mode, order, self.lam)
        if full not in self._cache:
            def traced(*args):
                return build(_Stencil(mode, order, args[-1]))(*args[:-1])

            self._cache[full] = jax.jit(traced)
        jitted = self._cache[full]
        step = self.policy.step
        return lambda *args: jitted(*args, step)


@dataclass(frozen=True)
class _Stencil:
    mode: str
    order: int
    step: object


def _check_point(chart: ChartGeometry, x, levels: int):
    x = np.asarray(x, dtype=float)
    if x.shape != (4,):
        raise ChartError(f"expected a point in R^4, got shape {x.shape}")
    lo, hi = np.asarray(chart.box[0], float), np.asarray(chart.box[1], float)
    reach = levels * chart.policy.reach
    if np.any(x - reach < lo) or np.any(x + reach > hi):
        if np.all(x >= lo) and np.all(x <= hi):
            raise ChartError(f"finite-difference stencil at {x} leaves the domain box of {chart.name}")
        raise ChartError(f"point {x} is outside the domain box of {chart.name}")
    g = np.asarray(chart.metric(jnp.asarray(x)))
    if not np.all(np.isfinite(g)) or np.any(np.linalg.eigvalsh(0.5 * (g + g.T)) <= 0):
        raise ChartError(f"metric of {chart.name} is not positive definite at {x}")
    return jnp.asarray(x)


# ---------------------------------------------------------------- pointwise geometry (jnp)

def christoffel(gfn):
    """``x -> Γ^e_ab``."""
    dg = jax.jacfwd(gfn)

    def gam(x):
        g = gfn(x)
        d = dg(x)  # d[a, b, c] = d_c g_ab
        t = jnp.einsum("bda->abd", d) + jnp.einsum("adb->abd", d) - d
        return 0.5 * jnp.einsum("ed,abd->eab", jnp.linalg.inv(g), t)

    return gam


def riemann(gfn):
    """``x -> R_abcd = <R(d_a, d_b) d_d, d_c>``."""
    gam = christoffel(gfn)
    dgam = jax.jacfwd(gam)

    def rm(x):
        G = gam(x)
        dG = dgam(x)  # dG[e, a, b, c] = d_c Γ^e_ab
        up = (
            jnp.einsum("ebda->eabd", dG)
            - jnp.einsum("eadb->eabd", dG)
            + jnp.einsum("eaf,fbd->eabd", G, G)
            - jnp.einsum("ebf,fad->eabd", G, G)
        )
        return jnp.einsum("ce,eabd->abcd", gfn(x), up)

    return rm


def kn(a, b):
    return (
        jnp.einsum("ac,bd->abcd", a, b)
        + jnp.einsum("bd,ac->abcd", a, b)
        - jnp.einsum("ad,bc->abcd", a, b)
        - jnp.einsum("bc,ad->abcd", a, b)
    )


def ricci(gfn):
    rm = riemann(gfn)
    return lambda x: jnp.einsum("ac,abcd->bd", jnp.linalg.inv(gfn(x)), rm(x))


def scalar(gfn):
    rc = ricci(gfn)
    return lambda x: jnp.einsum("bd,bd->", jnp.linalg.inv(gfn(x)), rc(x))


def weyl(gfn):
    rm = riemann(gfn)

    def w(x):
        g = gfn(x)
        R = rm(x)
        rc = jnp.einsum("ac,abcd->bd", jnp.linalg.inv(g), R)
        s = jnp.einsum("bd,bd->", jnp.linalg.inv(g), rc)
        e = rc - s / 4 * g
        return R - 0.5 * kn(e, g) - s / 24 * kn(g, g)

    return w


def frame(gfn):
    """Columns ``e_i`` of the Gram-Schmidt frame of the coordinate basis."""
    return lambda x: jnp.linalg.inv(jnp.linalg.cholesky(gfn(x))).T


def to_frame(t, E):
    for _ in range(t.ndim):
        t = jnp.tensordot(t, E, axes=([0], [0]))
    return t


def operator(t):
    """6x6 operator of a frame 4-tensor (leading axes allowed)."""
    return t[..., _PI[:, None], _PJ[:, None], _PI[None, :], _PJ[None, :]]


def plus_block(op):
    h = jnp.asarray(HODGE_BASIS)
    return (h @ op @ h.T)[..., :3, :3]


def cov(fn, gfn, policy):
    """Covariant derivative of a covariant coordinate tensor field (derivative slot first)."""
    d = derivative(fn, policy)
    gam = christoffel(gfn)

    def out(x):
        t = fn(x)
        res = d(x)
        G = gam(x)
        for s in range(t.ndim):
            corr = jnp.tensordot(G, t, axes=([0], [s]))
            res = res - jnp.moveaxis(corr, 1, s + 1)
        return res

    return out


def wplus_norm_sq(gfn):
    """``x -> |W+|^2`` (operator norm of the self-dual block)."""
    w, fr = weyl(gfn), frame(gfn)
    return lambda x: jnp.sum(plus_block(operator(to_frame(w(x), fr(x)))) ** 2)


def scalar_laplacian(phi, gfn, policy):
    """``x -> (Δφ, ∇φ in coordinates)`` with both derivative levels following the policy."""
    d = derivative(phi, policy)
    hess = cov(d, gfn, policy)

    def lap(x):
        gi = jnp.linalg.inv(gfn(x))
        return jnp.einsum("ab,ab->", gi, hess(x)), d(x)

    return lap


# ---------------------------------------------------------------- jitted evaluators

def _basic(chart: ChartGeometry):
    def build(pol):
        gfn, f = chart.metric, chart.potential_fn()
        rm, fr, gam = riemann(gfn), frame(gfn), christoffel(gfn)
        df = jax.grad(f)
        hf = jax.hessian(f)

        def run(x):
            g, E = gfn(x), fr(x)
            R = rm(x)
            gi = jnp.linalg.inv(g)
            rc = jnp.einsum("ac,abcd->bd", gi, R)
            hess = hf(x) - jnp.einsum("eab,e->ab", gam(x), df(x))
            return {
                "g": g,
                "E": E,
                "R": operator(to_frame(R, E)),
                "Rc": to_frame(rc, E),
                "S": jnp.einsum("bd,bd->", gi, rc),
                "f": f(x),
                "gradf": E.T @ df(x),
                "hessf": to_frame(hess, E),
            }

        return run

    return chart._fn("basic", build)


def _jets(chart: ChartGeometry):
    def build(pol):
        gfn, f = chart.metric, chart.potential_fn()
        fr, gam = frame(gfn), christoffel(gfn)
        df = jax.grad(f)
        hf = jax.hessian(f)
        d_rm = cov(riemann(gfn), gfn, pol)
        d_rc = cov(ricci(gfn), gfn, pol)
        d_s = derivative(scalar(gfn), pol)
        d_h = cov(lambda y: hf(y) - jnp.einsum("eab,e->ab", gam(y), df(y)), gfn, pol)

        def run(x):
            E = fr(x)
            return {
                "grad_R": operator(to_frame(d_rm(x), E)),
                "grad_rc": to_frame(d_rc(x), E),
                "grad_s": E.T @ d_s(x),
                "grad_hessf": to_frame(d_h(x), E),
            }

        return run

    return chart._fn("jets", build)


def _second(chart: ChartGeometry):
    def build(pol):
        gfn = chart.metric
        f = chart.potential_fn()
        fr = frame(gfn)
        lam = 0.0 if chart.lam is None else float(chart.lam)
        d_w = cov(weyl(gfn), gfn, pol)
        dd_w = cov(d_w, gfn, pol)
        lap_wp = scalar_laplacian(wplus_norm_sq(gfn), gfn, pol)
        lap_s = scalar_laplacian(scalar(gfn), gfn, pol)

        def const_field(y):
            gi = jnp.linalg.inv(gfn(y))
            dfy = jax.grad(f)(y)
            return scalar(gfn)(y) + dfy @ gi @ dfy - 2 * lam * f(y)

        d_const = derivative(const_field, pol)

        def run(x):
            E = fr(x)
            dw = to_frame(d_w(x), E)
            ddw = to_frame(dd_w(x), E)
            lwp, dwp = lap_wp(x)
            ls, _ = lap_s(x)
            return {
                "grad_W": dw,
                "lap_W": jnp.einsum("ppijkl->ijkl", ddw),
                "lap_wplus_sq": lwp,
                "grad_wplus_sq": E.T @ dwp,
                "lap_S": ls,
                "grad_const": E.T @ d_const(x),
            }

        return run

    return chart._fn("second", build)


def _np(d):
    return {k: np.asarray(v) for k, v in d.items()}


# ---------------------------------------------------------------- point geometry

def point_geometry_at(chart: ChartGeometry, x, jets: bool = True) -> fw.PointGeometry:
    """Orthonormal-frame soliton jet of ``chart`` at ``x``."""
    xj = _check_point(chart, x, 1 if jets else 0)
    b = _np(_basic(chart)(xj))
    extra = {}
    if jets:
        j = _np(_jets(chart)(xj))
        extra = {k: j[k] for k in ("grad_R", "grad_rc", "grad_s", "grad_hessf")}
    return fw.PointGeometry(
        R=b["R"],
        Rc=b["Rc"],
        S=float(b["S"]),
        gradf=b["gradf"],
        hessf=b["hessf"],
        lam=float(chart.lam) if chart.lam is not None else 0.0,
        n=4,
        meta={"chart": chart.name, "x": np.asarray(x, float).tolist(), "policy": chart.policy.describe()},
        **extra,
    )


def _second_at(chart, x):
    xj = _check_point(chart, x, 2)
    return _np(_second(chart)(xj))


def soliton_residuals(chart: ChartGeometry, x) -> dict[str, float]:
    """Max-norm residuals of the soliton equation and its standard consequences."""
    if chart.lam is None:
        raise ChartError(f"{chart.name} carries no soliton constant")
    pg = point_geometry_at(chart, x)
    sec = _second_at(chart, x)
    lam, S = float(chart.lam), pg.S
    f, gs = pg.gradf, pg.grad_s
    return {
        "Rc + Hess f - λg": float(np.max(np.abs(pg.Rc + pg.hessf - lam * np.eye(4)))),
        "S + Δf - nλ": abs(S + float(np.trace(pg.hessf)) - 4 * lam),
        "∇S/2 - Rc(∇f)": float(np.max(np.abs(0.5 * gs - pg.Rc @ f))),
        "∇(S + |∇f|² - 2λf)": float(np.max(np.abs(sec["grad_const"]))),
        "ΔS + 2|Rc|² - <∇f,∇S> - 2λS": abs(
            float(sec["lap_S"]) + 2 * float(np.sum(pg.Rc**2)) - float(f @ gs) - 2 * lam * S
        ),
    }


def soliton_tensor_residual(chart: ChartGeometry, x):
    """``Rc + Hess f - λg`` in the orthonormal frame (a 4x4 array)."""
    lam = 0.0 if chart.lam is None else float(chart.lam)
    pg = point_geometry_at(chart, x, jets=False)
    return pg.Rc + pg.hessf - lam * np.eye(4)


# ---------------------------------------------------------------- divergence and Laplacians

def divergence_weyl_at(chart: ChartGeometry, x):
    """``(δW)_ijk = ∇_p W_ijkp`` as a 6x4 framework tensor."""
    sec = _second_at(chart, x)
    return fw.to_grid(np.einsum("pijkp->ijk", sec["grad_W"]))


def laplacian_weyl_at(chart: ChartGeometry, x):
    """Rough Laplacian of the Weyl tensor as a 6x6 frame operator."""
    return np.asarray(operator(jnp.asarray(_second_at(chart, x)["lap_W"])))


def drift_laplacian_scalar_at(chart: ChartGeometry, x, phi: Callable):
    """``Δ_f φ = Δφ - <∇f, ∇φ>`` for a scalar JAX function ``phi``."""
    key = ("drift", phi)

    def build(pol):
        gfn, f = chart.metric, chart.potential_fn()
        lap = scalar_laplacian(phi, gfn, pol)

        def run(y):
            l, d = lap(y)
            return l - d @ jnp.linalg.inv(gfn(y)) @ jax.grad(f)(y)

        return run

    xj = _check_point(chart, x, 2)
    return float(chart._fn(key, build)(xj))


@dataclass(frozen=True)
class WeylJets:
    """First and second derivative data of ``W+`` at a point."""

    pg: fw.PointGeometry
    grad_W: np.ndarray  # (p, i, j, k, l) frame components
    lap_W: np.ndarray  # 6x6
    drift_lap_W: np.ndarray  # 6x6
    grad_wplus_norm_sq: float
    lap_wplus_sq: float
    drift_lap_wplus_sq: float
    grad_abs_wplus_sq: float  # |∇|W+||^2


def weyl_jets_at(chart: ChartGeometry, x) -> WeylJets:
    pg = point_geometry_at(chart, x)
    sec = _second_at(chart, x)
    dw_ops = cv.operator_from_tensor(sec["grad_W"])
    dwp = cv.weyl_pm(dw_ops, 1, tol=np.inf)
    grad_norm = float(np.sum(dwp**2))
    lap_w = cv.operator_from_tensor(sec["lap_W"])
    drift = lap_w - np.einsum("p,pab->ab", pg.gradf, dw_ops)
    d_sq = sec["grad_wplus_sq"]
    wp2 = float(np.sum(cv.weyl_pm(pg.decomposition().W, 1) ** 2))
    grad_abs = float(d_sq @ d_sq) / (4 * wp2) if wp2 > 0 else 0.0
    lap_sq = float(sec["lap_wplus_sq"])
    return WeylJets(pg, sec["grad_W"], lap_w, drift, grad_norm, lap_sq, lap_sq - float(pg.gradf @ d_sq), grad_abs)


def kato_check_at(chart: ChartGeometry, x, tol: float = 1e-8):
    """``(holds, |∇W+|², |∇|W+||²)`` for the Kato inequality."""
    wj = weyl_jets_at(chart, x)
    scale = max(1.0, wj.grad_wplus_norm_sq)
    return wj.grad_wplus_norm_sq + tol * scale >= wj.grad_abs_wplus_sq, wj.grad_wplus_norm_sq, wj.grad_abs_wplus_sq


def bochner_check_at(chart: ChartGeometry, x) -> dict[str, fw.Residual]:
    """Drift-Laplacian formula for ``|W+|^2`` and, on Einstein charts with constant
    potential, its harmonic-Weyl specialization."""
    wj = weyl_jets_at(chart, x)
    pg = wj.pg
    rc_form, hess_form = fw.bochner_rhs(pg, wj.grad_wplus_norm_sq)
    scale = max(1.0, abs(wj.lap_wplus_sq), 2 * wj.grad_wplus_norm_sq)
    out = {
        "bochner": fw.Residual("Δ_f|W+|² = RHS (Rc∘Rc form)", wj.drift_lap_wplus_sq, float(rc_form), scale),
        "bochner_hess": fw.Residual("Δ_f|W+|² = RHS (Hess f∘Hess f form)", wj.drift_lap_wplus_sq, float(hess_form), scale),
    }
    einstein = np.max(np.abs(pg.E)) <= 1e-8 * max(1.0, abs(pg.S)) and np.max(np.abs(pg.gradf)) <= 1e-12
    if einstein:
        rhs = fw.einstein_bochner_rhs(pg, wj.grad_wplus_norm_sq)
        out["einstein_bochner"] = fw.Residual("Δ|W+|² = 2|∇W+|² + S|W+|² - 36 det W+", wj.lap_wplus_sq, float(rhs), scale)
    return out


def drift_weyl_residual_at(chart: ChartGeometry, x) -> fw.Residual:
    """Drift Laplacian of ``W`` from the chart against the closed-form right-hand side."""
    wj = weyl_jets_at(chart, x)
    rhs = fw.delta_f_weyl_rhs(wj.pg)
    sc = max(1.0, float(np.max(np.abs(wj.pg.R))) ** 2)
    return fw._tres("Δ_f W = RHS", wj.drift_lap_W, rhs, sc, 2)


def divergence_residuals_at(chart: ChartGeometry, x) -> list[fw.Residual]:
    """Chart δW against the jet identities; algebraic rows only on soliton charts."""
    pg = point_geometry_at(chart, x)
    dw = divergence_weyl_at(chart, x)
    c = fw.coefficients(4)
    p_jet = fw.p_from_jets(pg.grad_rc)
    q = fw.q_tensor(pg.grad_s)
    sc = max(1.0, float(np.max(np.abs(pg.grad_R))))
    res = [
        fw._tres("δW (chart) = -(n-3)/(n-2)(P + Q/2(n-1)) (jets)", dw, c["dW"] * (p_jet + c["C_Q"] * q), sc, 2),
        fw._tres("δW (chart) = δW (from ∇R, ∇Rc, ∇S)", dw, fw.weyl_divergence_from_jets(pg), sc, 2),
        fw.Residual("2<P,Q> = -|∇S|²", 2 * fw.pairing(p_jet, q), -float(pg.grad_s @ pg.grad_s), sc**2),
    ]
    res += [r for r in fw.divergence_representation_residuals(pg) if chart.soliton or "H" not in r.name and "F" not in r.name]
    if chart.soliton:
        ft = fw.framework_tensors(pg, tol=1e-6)
        res.append(fw._tres("δW (chart) = -(n-3)/(n-2) C (algebraic P)", dw, c["dW"] * ft.C, sc, 2))
        res.append(fw._tres("P (jets) = P (i_∇f R)", p_jet, ft.P, sc, 2))
    return res


# ---------------------------------------------------------------- conformal change

def conformal_transform(chart: ChartGeometry, u: Callable, name: str | None = None) -> ChartGeometry:
    """Chart of ``u^2 g`` (no soliton structure is assumed)."""
    gfn = chart.metric

    def metric(x):
        return u(x) ** 2 * gfn(x)

    return ChartGeometry(
        name=name or f"{chart.name}~u",
        metric=metric,
        potential=None,
        lam=None,
        box=chart.box,
        policy=chart.policy,
        soliton=False,
        params={"base": chart.name},
    )


def _conf_fields(chart: ChartGeometry, u: Callable):
    """Coordinate data of ``g`` needed on the right-hand sides of the conformal formulas."""
    key = ("conf", u)

    def build(pol):
        gfn = chart.metric
        lap_u = scalar_laplacian(u, gfn, pol)
        logu = lambda y: jnp.log(u(y))  # noqa: E731
        hess_logu = cov(jax.grad(logu), gfn, _ANALYTIC)
        d_w = cov(weyl(gfn), gfn, pol)

        def run(x):
            g = gfn(x)
            gi = jnp.linalg.inv(g)
            lu, du = lap_u(x)
            df = jax.grad(logu)(x)
            return {
                "g": g,
                "gi": gi,
                "u": u(x),
                "du": du,
                "lap_u": lu,
                "dlogu": df,
                "hess_logu": hess_logu(x),
                "lap_logu": jnp.einsum("ab,ab->", gi, hess_logu(x)),
                "W": weyl(gfn)(x),
                "grad_W": d_w(x),
                "Rc": ricci(gfn)(x),
                "S": scalar(gfn)(x),
            }

        return run

    return chart._fn(key, build)


def _divergence_first(grad_t, gi):
    """``(δT)_bcd = g^{ia} ∇_i T_abcd``."""
    return jnp.einsum("ia,iabcd->bcd", gi, grad_t)


def _conf_targets(chart, u):
    key = ("conf_t", u)

    def build(pol):
        gfn = chart.metric
        gt = conformal_transform(chart, u).metric
        d_wt = cov(weyl(gt), gt, pol)
        fr_t = frame(gt)

        def run(x):
            return {
                "W": weyl(gt)(x),
                "grad_W": d_wt(x),
                "Rc": ricci(gt)(x),
                "S": scalar(gt)(x),
                "E": fr_t(x),
            }

        return run

    return chart._fn(key, build)


def conformal_residuals(chart: ChartGeometry, u: Callable, x) -> dict[str, fw.Residual]:
    """Residuals of the conformal-change formulas for ``g~ = u^2 g`` at ``x``.

    Pointwise norms use full index sums in coordinates raised by the relevant
    metric; ``|W+|^2`` and ``det W+`` in the Bochner quantity use the 3x3
    self-dual block.
    """
    xj = _check_point(chart, x, 2)
    if float(u(xj)) <= 0:
        raise ChartError("conformal factor must be positive")
    a = _np(_conf_fields(chart, u)(xj))
    t = _np(_conf_targets(chart, u)(xj))
    g, gi, uu = a["g"], a["gi"], float(a["u"])
    du, lap_u = a["du"], float(a["lap_u"])
    df = a["dlogu"]
    E = np.linalg.inv(np.linalg.cholesky(g)).T
    wf = np.einsum("abcd,ai,bj,ck,dl->ijkl", a["W"], E, E, E, E)
    wtf = np.einsum("abcd,ai,bj,ck,dl->ijkl", t["W"], t["E"], t["E"], t["E"], t["E"])
    sc_w = max(1.0, float(np.max(np.abs(wf))))
    out = {}
    out["W~ frame = u^-2 W frame"] = fw._tres("W~ frame = u^-2 W frame", wtf, wf / uu**2, sc_w, 4)
    s_rhs = uu**-3 * (-6 * lap_u + float(a["S"]) * uu)
    out["S~ = u^-3(-6Δ + S)u"] = fw.Residual("S~ = u^-3(-6Δ + S)u", float(t["S"]), s_rhs, max(1.0, abs(s_rhs)))
    grad2 = float(df @ gi @ df)
    amat = a["hess_logu"] - np.outer(df, df) + 0.5 * grad2 * g
    rc_rhs = a["Rc"] - 2 * amat - (float(a["lap_logu"]) + grad2) * g
    out["Rc~ formula"] = fw._tres("Rc~ = Rc - 2a - (Δf + |∇f|²)g", t["Rc"], rc_rhs, max(1.0, float(np.max(np.abs(a["Rc"])))), 2)
    # divergence
    gti = gi / uu**2
    dw = np.einsum("ia,iabcd->bcd", gi, a["grad_W"])
    dwt = np.einsum("ia,iabcd->bcd", gti, t["grad_W"])
    grad_u_up = gi @ du
    iw = np.einsum("p,pbcd->bcd", grad_u_up / uu, a["W"])
    sc_d = max(1.0, float(np.max(np.abs(a["grad_W"]))))
    out["conf_divergence"] = fw._tres("δ~W~ = δW + (n-3)W(∇u/u, ·,·,·)", dwt, dw + iw, sc_d, 3)
    # norms
    def full_norm(t5, ginv):
        return float(np.einsum("iabcd,jefgh,ij,ae,bf,cg,dh->", t5, t5, ginv, ginv, ginv, ginv, ginv))

    def full_norm4(t4, ginv):
        return float(np.einsum("abcd,efgh,ae,bf,cg,dh->", t4, t4, ginv, ginv, ginv, ginv))

    nw2 = full_norm4(a["W"], gi)
    grad_nw2 = 2 * np.einsum("iabcd,efgh,ae,bf,cg,dh->i", a["grad_W"], a["W"], gi, gi, gi, gi)
    du2 = float(du @ gi @ du)
    dw_iw = float(np.einsum("bcd,efg,be,cf,dg->", dw, np.einsum("p,pbcd->bcd", grad_u_up, a["W"]), gi, gi, gi))
    lhs = full_norm(t["grad_W"], gti)
    terms = np.array([uu**-8 * du2 * nw2, uu**-7 * float(grad_u_up @ grad_nw2), uu**-7 * dw_iw])
    base = uu**-6 * full_norm(a["grad_W"], gi)
    sc = max(1.0, abs(lhs), base)
    for key, coef in (("covnorm", COVNORM_DISPLAYED), ("covnorm_derived", COVNORM_DERIVED)):
        out[key] = fw.Residual(f"|∇~W~|² conformal formula, coefficients {coef}", lhs, base + terms @ coef, sc)
    return out


#: Coefficients of ``u^-8|∇u|²|W|²``, ``u^-7<∇u,∇|W|²>``, ``u^-7<δW, i_∇u W>``
#: (full index sums, divergence in the first slot).
COVNORM_DISPLAYED = np.array([18.0, -10.0, 16.0])
COVNORM_DERIVED = np.array([10.0, -4.0, 16.0])

#: Coefficients of ``u^-2|∇u|²|W+|²``, ``u^-1|W+|²Δu``, ``u^-1<∇u,∇|W+|²>`` and
#: ``u^-1<δW+, i_∇u W+>`` in ``u^6 h~ - h`` (operator norms; the pairing
#: summed over i<j with the divergence in the last slot).
CONF_BOCHNER_DISPLAYED = np.array([-20.0, 2.0, 10.0, -32.0])
CONF_BOCHNER_DERIVED = np.array([-8.0, 2.0, 2.0, -16.0])


def conformal_bochner_residual(chart: ChartGeometry, u: Callable, x) -> dict[str, fw.Residual]:
    """Transformation rule of ``h = Δ|W+|² - 2|∇W+|² - S|W+|² + 36 det W+`` under ``g~ = u²g``."""
    xj = _check_point(chart, x, 2)
    base = weyl_jets_at(chart, x)
    tilde = weyl_jets_at(_conformal_chart(chart, u), x)

    def h_of(wj):
        wp = cv.weyl_pm(wj.pg.decomposition().W, 1)
        return wj.lap_wplus_sq - 2 * wj.grad_wplus_norm_sq - wj.pg.S * float(np.sum(wp**2)) + 36 * float(np.linalg.det(wp))

    a = _np(_conf_fields(chart, u)(xj))
    uu, lap_u = float(a["u"]), float(a["lap_u"])
    E = np.linalg.inv(np.linalg.cholesky(a["g"])).T
    grad_u = E.T @ a["du"]
    W = base.pg.decomposition().W
    wp_op = cv.weyl_pm_operator(W, 1)
    wp2 = float(np.sum(cv.weyl_pm(W, 1) ** 2))
    sec = _second_at(chart, x)
    d_wp = cv.weyl_pm_operator(cv.operator_from_tensor(sec["grad_W"]), 1)
    pair = float(fw.pairing(fw.divergence_last(d_wp), fw.contract_last(wp_op, grad_u)))
    terms = np.array([
        uu**-2 * float(grad_u @ grad_u) * wp2,
        uu**-1 * wp2 * lap_u,
        uu**-1 * float(grad_u @ sec["grad_wplus_sq"]),
        uu**-1 * pair,
    ])
    h = h_of(base)
    lhs = uu**6 * h_of(tilde)
    sc = max(1.0, abs(h), abs(lhs), float(np.max(np.abs(terms))))
    return {
        key: fw.Residual(f"u^6 h~ = h + terms, coefficients {coef}", lhs, h + terms @ coef, sc)
        for key, coef in (("conf_bochner", CONF_BOCHNER_DISPLAYED), ("conf_bochner_derived", CONF_BOCHNER_DERIVED))
    }


def _conformal_chart(chart, u):
    key = ("conf_chart", u)
    if key not in chart._cache:
        chart._cache[key] = conformal_transform(chart, u)
    return chart._cache[key].with_policy(chart.policy)


# ---------------------------------------------------------------- Ricci flow variation

def sharp(a):
    """Cofactor matrix of a symmetric 3x3 block (the Λ² adjugate)."""
    return np.linalg.det(a) * np.linalg.inv(a) if abs(np.linalg.det(a)) > 1e-300 else _cofactor(a)


def _cofactor(a):
    c = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            m = np.delete(np.delete(a, i, 0), j, 1)
            c[i, j] = (-1) ** (i + j) * (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
    return c


def _flow_wplus(chart: ChartGeometry):
    """``(x, t) -> W+`` of ``g - 2t Rc_g`` in the Uhlenbeck frame."""

    def build(pol):
        gfn = chart.metric
        rc0 = ricci(gfn)
        fr = frame(gfn)

        def run(x, t):
            gt = lambda y: gfn(y) - 2 * t * rc0(y)  # noqa: E731
            E0 = fr(x)
            m = E0.T @ gt(x) @ E0
            ev, vec = jnp.linalg.eigh(m)
            Et = E0 @ (vec @ jnp.diag(ev**-0.5) @ vec.T)
            w = weyl(gt)(x)
            return plus_block(operator(to_frame(w, Et)))

        return run

    return chart._fn("flow", build)


def flow_variation_weyl_at(chart: ChartGeometry, x, tau: float = 2.5e-4, t_order: int = 4) -> dict[str, fw.Residual]:
    """First-order Ricci-flow variation of ``W+`` and ``|W+|^2`` at ``x``.

    Time derivatives use the centered stencil of order ``t_order`` with step ``tau``.
    """
    xj = _check_point(chart, x, 2)
    fn = _flow_wplus(chart)
    offs, wts = fd_weights(t_order)
    vals = [np.asarray(fn(xj, float(k * tau))) for k in offs]
    dt_w = sum(w * v for w, v in zip(wts, vals)) / tau
    dt_n = sum(w * float(np.sum(v**2)) for w, v in zip(wts, vals)) / tau
    wj = weyl_jets_at(chart, x)
    pg = wj.pg
    R = pg.R
    wp = cv.weyl_pm(pg.decomposition().W, 1)
    _, _, c = cv.blocks(R)
    lap_wp = cv.weyl_pm(wj.lap_W, 1, tol=np.inf)
    rhs_w = lap_wp + 2 * wp @ wp + 4 * _cofactor(wp) + 2 * (c @ c.T - np.sum(c * c) / 3 * np.eye(3))
    rhs_n = (
        wj.lap_wplus_sq
        - 2 * wj.grad_wplus_norm_sq
        + 36 * float(np.linalg.det(wp))
        + float(cv.inner(fw.rc_circ_rc(pg), cv.weyl_pm_operator(pg.decomposition().W, 1)))
    )
    sc = max(1.0, float(np.max(np.abs(R))) ** 2)
    return {
        "wplus_variation": fw._tres("∂W+ = ΔW+ + 2W+² + 4W+♯ + 2(CCᵀ - |C|²/3)", dt_w, rhs_w, sc, 2),
        "wplus_norm_variation": fw.Residual("(∂ - Δ)|W+|² = -2|∇W+|² + 36 det W+ + <Rc∘Rc,W+>", float(dt_n), rhs_n, sc),
    }
