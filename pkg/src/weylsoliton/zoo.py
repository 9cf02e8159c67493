"""Closed-form example geometries with known curvature.

Every entry carries its expected scalar curvature, Ricci and Weyl spectra,
soliton constant and (for closed manifolds) volume, Euler characteristic and
signature.  :meth:`ZooEntry.validate` compares these against chart
evaluation at random interior points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import jax.numpy as jnp
import numpy as np

from . import curvature as cv
from .chart import ChartError, ChartGeometry, DerivativePolicy, conformal_transform, point_geometry_at

ANALYTIC = DerivativePolicy("analytic")


class ZooError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ZooEntry:
    name: str
    chart: ChartGeometry
    kind: str  # shrinking, steady, expanding, einstein, none
    S: float | None = None
    rc_spectrum: tuple | None = None
    wplus_spectrum: tuple | None = None
    wminus_spectrum: tuple | None = None
    lam: float | None = None
    volume: float | None = None
    chi: int | None = None
    tau: int | None = None
    note: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def closed(self) -> bool:
        return self.volume is not None

    def validate(self, points: int = 10, seed: int = 0, tol: float = 1e-8) -> dict[str, float]:
        """Worst deviation of each expectation over ``points`` random interior points.

        Raises :class:`ZooError` if any deviation exceeds ``tol`` (relative to
        the curvature scale).
        """
        worst: dict[str, float] = {}

        def note(key, val):
            worst[key] = max(worst.get(key, 0.0), float(val))

        scale = 1.0
        for x in self.chart.sample(points, seed):
            pg = point_geometry_at(self.chart, x, jets=False)
            d = pg.decomposition()
            scale = max(1.0, float(np.max(np.abs(pg.R))))
            note("curvature symmetries", abs(cv.bianchi_residual(pg.R)) + np.max(np.abs(pg.R - pg.R.T)))
            if self.S is not None:
                note("S", abs(pg.S - self.S))
            if self.rc_spectrum is not None:
                note("Rc spectrum", np.max(np.abs(np.linalg.eigvalsh(pg.Rc) - np.sort(self.rc_spectrum))))
            for key, sign, spec in (("W+", 1, self.wplus_spectrum), ("W-", -1, self.wminus_spectrum)):
                if spec is not None:
                    ev = np.linalg.eigvalsh(cv.weyl_pm(d.W, sign))
                    note(f"{key} spectrum", np.max(np.abs(ev - np.sort(spec))))
            if self.lam is not None:
                note("soliton equation", np.max(np.abs(pg.Rc + pg.hessf - self.lam * np.eye(4))))
        bad = {k: v for k, v in worst.items() if v > tol * scale}
        if bad:
            raise ZooError(f"{self.name}: expectation mismatch {bad}")
        return worst

    def integrals(self, x=None) -> dict[str, float]:
        """Constant integrands times the closed-form volume, against ``8π²χ`` and ``12π²τ``."""
        if not self.closed:
            raise ZooError(f"{self.name} is not a closed manifold")
        x = self.chart.sample(1, 0)[0] if x is None else x
        pg = point_geometry_at(self.chart, x, jets=False)
        gb = cv.gauss_bonnet_integrand(pg.R)
        sig = cv.signature_integrand(pg.R)
        return {
            "gauss_bonnet": gb,
            "signature": sig,
            "gb_integral": gb * self.volume,
            "sig_integral": sig * self.volume,
            "gb_expected": 8 * math.pi**2 * self.chi,
            "sig_expected": 12 * math.pi**2 * self.tau,
        }


# ---------------------------------------------------------------- metrics

def _round(y, r):
    """Conformal factor of the stereographic round metric of radius ``r``."""
    return 4 * r**2 / (1 + jnp.sum(y**2)) ** 2


def gaussian(lam: float = 0.5, policy: DerivativePolicy = ANALYTIC) -> ZooEntry:
    chart = ChartGeometry(
        name="gaussian",
        metric=lambda x: jnp.eye(4) + 0.0 * x[0],
        potential=lambda x: lam * jnp.sum(x**2) / 2,
        lam=lam,
        box=((-2.0,) * 4, (2.0,) * 4),
        policy=policy,
        soliton=True,
        params={"lam": lam},
    )
    kind = "shrinking" if lam > 0 else "steady" if lam == 0 else "expanding"
    z3 = (0.0, 0.0, 0.0)
    return ZooEntry("gaussian", chart, kind, S=0.0, rc_spectrum=(0.0,) * 4, wplus_spectrum=z3,
                    wminus_spectrum=z3, lam=lam, note="flat space with f = λ|x|²/2")


def sphere4(r: float = 1.0, policy: DerivativePolicy = ANALYTIC) -> ZooEntry:
    chart = ChartGeometry(
        name="sphere4",
        metric=lambda x: _round(x, r) * jnp.eye(4),
        potential=None,
        lam=3 / r**2,
        box=((-1.0,) * 4, (1.0,) * 4),
        policy=policy,
        soliton=True,
        params={"r": r},
    )
    z3 = (0.0, 0.0, 0.0)
    return ZooEntry("sphere4", chart, "einstein", S=12 / r**2, rc_spectrum=(3 / r**2,) * 4,
                    wplus_spectrum=z3, wminus_spectrum=z3, lam=3 / r**2,
                    volume=8 * math.pi**2 * r**4 / 3, chi=2, tau=0, note="stereographic chart of the round sphere")


def cylinder_s3xr(r: float = 1.0, policy: DerivativePolicy = ANALYTIC) -> ZooEntry:
    lam = 2 / r**2

    def metric(x):
        c = _round(x[:3], r)
        return jnp.diag(jnp.array([c, c, c, 1.0]))

    chart = ChartGeometry(
        name="cylinder_s3xr",
        metric=metric,
        potential=lambda x: lam * x[3] ** 2 / 2,
        lam=lam,
        box=((-1.0,) * 4, (1.0,) * 4),
        policy=policy,
        soliton=True,
        params={"r": r},
    )
    z3 = (0.0, 0.0, 0.0)
    return ZooEntry("cylinder_s3xr", chart, "shrinking", S=6 / r**2, rc_spectrum=(0.0, lam, lam, lam),
                    wplus_spectrum=z3, wminus_spectrum=z3, lam=lam, note="round S³ times a Gaussian line")


def s2xr2(r: float = 1.0, policy: DerivativePolicy = ANALYTIC) -> ZooEntry:
    lam = 1 / r**2

    def metric(x):
        c = _round(x[:2], r)
        return jnp.diag(jnp.array([c, c, 1.0, 1.0]))

    chart = ChartGeometry(
        name="s2xr2",
        metric=metric,
        potential=lambda x: (x[2] ** 2 + x[3] ** 2) / (2 * r**2),
        lam=lam,
        box=((-1.0,) * 4, (1.0,) * 4),
        policy=policy,
        soliton=True,
        params={"r": r},
    )
    w = (1 / 3 / r**2, -1 / 6 / r**2, -1 / 6 / r**2)
    return ZooEntry("s2xr2", chart, "shrinking", S=2 / r**2, rc_spectrum=(0.0, 0.0, lam, lam),
                    wplus_spectrum=w, wminus_spectrum=w, lam=lam, note="round S² times a Gaussian plane")


def s2xs2(r: float = 1.0, policy: DerivativePolicy = ANALYTIC) -> ZooEntry:
    k = 1 / r**2

    def metric(x):
        a, b = _round(x[:2], r), _round(x[2:], r)
        return jnp.diag(jnp.array([a, a, b, b]))

    chart = ChartGeometry(
        name="s2xs2",
        metric=metric,
        potential=None,
        lam=k,
        box=((-1.0,) * 4, (1.0,) * 4),
        policy=policy,
        soliton=True,
        params={"r": r},
    )
    w = (2 * k / 3, -k / 3, -k / 3)
    return ZooEntry("s2xs2", chart, "einstein", S=4 * k, rc_spectrum=(k,) * 4, wplus_spectrum=w,
                    wminus_spectrum=w, lam=k, volume=16 * math.pi**2 * r**4, chi=4, tau=0,
                    note="product of two round spheres of equal radius")


def _fs_metric(x):
    z = jnp.array([x[0] + 1j * x[1], x[2] + 1j * x[3]])
    s = 1 + jnp.sum(jnp.abs(z) ** 2)
    h = (s * jnp.eye(2) - jnp.outer(jnp.conj(z), z)) / s**2  # h[a, b] = d_a d_bbar log s
    v = jnp.array([[1, 0], [1j, 0], [0, 1], [0, 1j]])
    return jnp.real(v @ h @ jnp.conj(v).T)


def cp2_fubini_study(policy: DerivativePolicy = ANALYTIC) -> ZooEntry:
    chart = ChartGeometry(
        name="cp2",
        metric=_fs_metric,
        potential=None,
        lam=6.0,
        box=((-1.0,) * 4, (1.0,) * 4),
        policy=policy,
        soliton=True,
    )
    return ZooEntry("cp2", chart, "einstein", S=24.0, rc_spectrum=(6.0,) * 4, wplus_spectrum=(4.0, -2.0, -2.0),
                    wminus_spectrum=(0.0, 0.0, 0.0), lam=6.0, volume=math.pi**2 / 2, chi=3, tau=1,
                    note="Fubini-Study metric in affine coordinates, complex orientation")


def random_polynomial(seed: int = 0, amplitude: float = 0.1,
                      policy: DerivativePolicy = DerivativePolicy("fd", 4, 1e-3)) -> ZooEntry:
    """Generic metric ``δ + amplitude * (quadratic polynomial + trigonometric terms)``."""
    rng = np.random.default_rng(seed)

    def sym(a):
        return 0.5 * (a + np.swapaxes(a, 0, 1))

    c1 = jnp.asarray(sym(rng.normal(size=(4, 4, 4))))
    c2 = jnp.asarray(sym(rng.normal(size=(4, 4, 4, 4))) / 2)
    cs = jnp.asarray(sym(rng.normal(size=(4, 4))))
    om = jnp.asarray(rng.normal(size=4))
    ph = float(rng.uniform(0, 2 * np.pi))
    fa = jnp.asarray(rng.normal(size=4))
    fb = jnp.asarray(sym(rng.normal(size=(4, 4))))
    fo = jnp.asarray(rng.normal(size=4))

    def metric(x):
        pert = c1 @ x + jnp.einsum("abkl,k,l->ab", c2, x, x) + cs * jnp.sin(om @ x + ph)
        return jnp.eye(4) + amplitude * pert

    def potential(x):
        return fa @ x + 0.5 * x @ fb @ x + 0.3 * jnp.cos(fo @ x)

    half = 0.5
    chart = ChartGeometry(
        name="random_polynomial",
        metric=metric,
        potential=potential,
        lam=None,
        box=((-half,) * 4, (half,) * 4),
        policy=policy,
        soliton=False,
        params={"seed": seed, "amplitude": amplitude},
    )
    return ZooEntry("random_polynomial", chart, "none", note="generic metric for soliton-free identities")


def default_conformal_factor(seed: int = 1, amplitude: float = 0.2) -> Callable:
    rng = np.random.default_rng(seed)
    k = jnp.asarray(rng.normal(size=4))
    q = jnp.asarray(rng.normal(size=4))

    def u(x):
        return jnp.exp(amplitude * (jnp.sin(k @ x) + 0.5 * (q @ x) ** 2))

    return u


def conformal_pair(base: ZooEntry, u: Callable | None = None) -> tuple[ZooEntry, ZooEntry, Callable]:
    """``(g, u^2 g, u)``; the transformed entry carries no expectations."""
    u = default_conformal_factor() if u is None else u
    chart = conformal_transform(base.chart, u, name=f"{base.name}_conformal")
    return base, ZooEntry(chart.name, chart, "none", note=f"u² times {base.name}"), u


_BUILDERS = {
    "gaussian": gaussian,
    "sphere4": sphere4,
    "cylinder_s3xr": cylinder_s3xr,
    "s2xr2": s2xr2,
    "s2xs2": s2xs2,
    "cp2": cp2_fubini_study,
    "random_polynomial": random_polynomial,
}

NAMES = tuple(_BUILDERS)


# entries are immutable, and reusing them reuses their compiled evaluators
_ENTRIES: dict = {}


def get(name: str, validate: bool = True, **params) -> ZooEntry:
    """Entry by name; closed-form entries validate themselves at 10 points."""
    if name not in _BUILDERS:
        raise ZooError(f"unknown manifold {name!r}; known: {', '.join(NAMES)}")
    key = (name, tuple(sorted(params.items())))
    try:
        entry = _ENTRIES.get(key)
    except TypeError:  # unhashable parameters
        key, entry = None, None
    if entry is None:
        try:
            entry = _BUILDERS[name](**params)
        except TypeError as exc:
            raise ZooError(f"bad parameters for {name}: {exc}") from None
        if validate and entry.kind != "none":
            entry.validate()
        if key is not None and (validate or entry.kind == "none"):
            _ENTRIES[key] = entry
    return entry


def zoo(validate: bool = True) -> list[ZooEntry]:
    return [get(n, validate=validate) for n in NAMES]


__all__ = ["ZooEntry", "ZooError", "ChartError", "zoo", "get", "NAMES", "conformal_pair"]
