"""Suite runner, convergence studies and report serialization."""

from __future__ import annotations

import json
import math
import os
import platform
import time
import zlib
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

import numpy as np

from .. import synthetic
from ..chart import ChartError, ChartGeometry, DerivativePolicy
from ..zoo import NAMES, ZooEntry, ZooError, get
from . import schema
from .schema import ConfigError
from .checks import CHECKS, SUITES, Check

SYNTHETIC = "synthetic"
REPORT_DIR_ENV = "WEYLSOLITON_REPORT_DIR"

DEFAULT_MANIFOLDS = {
    "algebraic": (SYNTHETIC,),
    "differential": ("gaussian", "sphere4", "cylinder_s3xr", "s2xr2", "s2xs2", "cp2", "random_polynomial"),
    "conformal": ("random_polynomial",),
    "flow": ("random_polynomial", "gaussian", "sphere4"),
}
DEFAULT_POINTS = {"algebraic": 1000, "differential": 3, "conformal": 2, "flow": 2}


class NotDifferential(ConfigError):
    pass


@dataclass(frozen=True)
class CheckRecord:
    check_id: str
    reference: str
    manifold: str
    point: int | list
    residual: float
    tolerance: float
    passed: bool
    runtime_ms: float
    detail: str = ""

    def __post_init__(self):
        if self.passed != (self.residual <= self.tolerance):
            raise ValueError(f"{self.check_id}: pass flag disagrees with residual and tolerance")


@dataclass(frozen=True)
class SuiteConfig:
    suite: str = "all"
    manifolds: tuple | None = None
    points: int | None = None
    seed: int = 0
    fd_order: int = 4
    fd_step: float = 1e-3
    tol_scale: float = 1.0
    overrides: dict = field(default_factory=dict)
    report: str | None = None
    charts: tuple = ()  # manifest chart definitions (dicts)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["manifolds"] = None if self.manifolds is None else list(self.manifolds)
        d["charts"] = [dict(c) for c in self.charts]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SuiteConfig":
        schema.validate_config(d)
        d = dict(d)
        if d.get("manifolds") is not None:
            d["manifolds"] = tuple(d["manifolds"])
        d["charts"] = tuple(d.get("charts", ()))
        return cls(**d)

    def validate(self) -> None:
        schema.validate_config(self.to_dict())
        try:
            DerivativePolicy("fd", self.fd_order, self.fd_step)
        except ChartError as exc:
            raise ConfigError(f"invalid FD policy: {exc}") from None
        unknown = set(self.overrides) - set(CHECKS)
        if unknown:
            raise ConfigError(f"tolerance override for unknown check(s): {', '.join(sorted(unknown))}")

    def suites(self) -> tuple:
        return SUITES if self.suite == "all" else (self.suite,)

    def tolerance(self, check: Check) -> float:
        return float(self.overrides.get(check.check_id, check.tolerance * self.tol_scale))


@dataclass
class VerificationReport:
    header: dict
    records: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def summary(self) -> dict:
        out = {}
        for r in self.records:
            suite = CHECKS[r.check_id].suite
            s = out.setdefault(suite, {"checks": 0, "passed": 0, "worst": {}})
            s["checks"] += 1
            s["passed"] += int(r.passed)
            w = s["worst"].get(r.check_id)
            if w is None or r.residual > w["residual"]:
                s["worst"][r.check_id] = {"residual": r.residual, "tolerance": r.tolerance, "manifold": r.manifold}
        return out

    def to_json(self) -> str:
        body = {"header": self.header, "summary": self.summary(), "records": [asdict(r) for r in self.records]}
        return json.dumps(body, indent=1, allow_nan=True)

    @classmethod
    def from_json(cls, text: str) -> "VerificationReport":
        body = json.loads(text)
        schema.validate_report(body)
        return cls(body["header"], [CheckRecord(**r) for r in body["records"]])

    def write(self, path) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(self.to_json())
        except OSError as exc:
            raise ConfigError(f"unwritable report path {str(path)!r}: {exc.strerror}") from None
        return path

    def format_summary(self) -> str:
        lines = []
        rows = []
        for suite, s in self.summary().items():
            lines.append(f"{suite:<13} {s['passed']:>6}/{s['checks']:<6} passed")
            for cid, w in sorted(s["worst"].items()):
                flag = "ok" if w["residual"] <= w["tolerance"] else "FAIL"
                rows.append((cid, w["manifold"], f"{w['residual']:.3e}", f"{w['tolerance']:.1e}", flag))
        if rows:
            widths = [max(len(r[i]) for r in rows) for i in range(5)]
            lines.append("")
            lines.extend("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows)
        total = len(self.records)
        good = sum(r.passed for r in self.records)
        lines.append("")
        lines.append(f"{good}/{total} records passed")
        return "\n".join(lines)


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for pkg in ("numpy", "scipy", "jax"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            pass
    return out


# ---------------------------------------------------------------- manifolds

def resolve_entry(name: str, config: SuiteConfig) -> ZooEntry:
    """Zoo or manifest entry, with the configured FD policy applied to FD charts."""
    custom = {c["name"]: c for c in config.charts}
    if name in custom:
        from .manifest import build_chart

        entry = build_chart(custom[name])
    elif name in NAMES:
        entry = get(name)
    else:
        known = ", ".join((SYNTHETIC,) + NAMES + tuple(custom))
        raise ConfigError(f"unknown manifold {name!r}; known: {known}")
    if entry.chart.policy.mode == "fd" and name not in custom:
        entry = replace(entry, chart=entry.chart.with_policy(DerivativePolicy("fd", config.fd_order, config.fd_step)))
    return entry


def _plan(config: SuiteConfig):
    """``(suite, manifold)`` pairs in run order."""
    plan = []
    for suite in config.suites():
        names = config.manifolds if config.manifolds is not None else DEFAULT_MANIFOLDS[suite]
        for name in names:
            if (name == SYNTHETIC) != (suite == "algebraic"):
                if config.manifolds is not None and suite == config.suite:
                    raise ConfigError(f"manifold {name!r} cannot be used with the {suite} suite")
                continue
            plan.append((suite, name))
    return plan


def _points(config, suite):
    return config.points if config.points is not None else DEFAULT_POINTS[suite]


def _algebraic_records(config: SuiteConfig) -> list[CheckRecord]:
    count = _points(config, "algebraic")
    jets = synthetic.soliton_jets(count, seed=config.seed)
    out = []
    for check in CHECKS.values():
        if check.suite != "algebraic":
            continue
        rng = np.random.default_rng([config.seed, zlib.crc32(check.check_id.encode())])
        t0 = time.perf_counter()
        res, names = check.batch(jets, rng)
        per = (time.perf_counter() - t0) * 1e3 / count
        tol = config.tolerance(check)
        for i, (r, n) in enumerate(zip(res, names)):
            r = float(r)
            out.append(CheckRecord(check.check_id, check.reference, SYNTHETIC, i, r, tol, r <= tol, per, str(n)))
    return out


def _chart_records(config: SuiteConfig, suite: str, name: str) -> list[CheckRecord]:
    entry = resolve_entry(name, config)
    pts = entry.chart.sample(_points(config, suite), config.seed)
    out = []
    for check in CHECKS.values():
        if check.suite != suite or not check.applies(entry):
            continue
        tol = config.tolerance(check)
        for i, x in enumerate(pts):
            t0 = time.perf_counter()
            try:
                r, detail = check.point(entry, x)
                r = float(r)
            except ChartError as exc:
                r, detail = math.inf, f"chart error: {exc}"
            ms = (time.perf_counter() - t0) * 1e3
            out.append(CheckRecord(check.check_id, check.reference, entry.name, [float(v) for v in x], r, tol,
                                   r <= tol, ms, detail))
    return out


def run(config: SuiteConfig) -> VerificationReport:
    """Run every selected check; failures are recorded, never raised."""
    config.validate()
    plan = _plan(config)
    for _, name in plan:
        if name != SYNTHETIC and name not in NAMES and name not in {c["name"] for c in config.charts}:
            resolve_entry(name, config)  # raises the unknown-manifold error before any work
    records = []
    for suite, name in plan:
        if suite == "algebraic":
            records += _algebraic_records(config)
        else:
            try:
                records += _chart_records(config, suite, name)
            except ZooError as exc:
                raise ConfigError(str(exc)) from None
    order = {n: i for i, (_, n) in enumerate(plan)}
    records.sort(key=lambda r: (r.check_id, order.get(r.manifold, len(order)), r.manifold,
                                r.point if isinstance(r.point, int) else 0))
    header = {
        "tool": "weylsoliton.verify",
        "config": config.to_dict(),
        "versions": _versions(),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    report = VerificationReport(header, records)
    path = report_path(config)
    if path is not None:
        report.write(path)
    return report


def report_path(config: SuiteConfig):
    """``config.report``, placed under ``$WEYLSOLITON_REPORT_DIR`` when that is set and the path is relative."""
    base = os.environ.get(REPORT_DIR_ENV)
    if config.report is None:
        return None if base is None else Path(base) / f"verify-{config.suite}.json"
    p = Path(config.report)
    return Path(base) / p if base is not None and not p.is_absolute() else p


# ---------------------------------------------------------------- convergence

@dataclass
class ConvergenceTable:
    check_id: str
    manifold: str
    point: list
    declared_order: float
    steps: list
    residuals: list
    orders: list
    noise_floor: bool
    note: str = ""

    @property
    def observed_order(self) -> float | None:
        known = [o for o in self.orders if o is not None]
        return known[-1] if known else None

    @property
    def passed(self) -> bool:
        if self.noise_floor:
            return True
        return self.observed_order is not None and self.observed_order >= self.declared_order - 0.5

    def format(self) -> str:
        lines = [f"{self.check_id} on {self.manifold}, declared order {self.declared_order:g}"]
        lines.append(f"{'h':>10}  {'residual':>11}  {'order':>6}")
        for k, (h, r) in enumerate(zip(self.steps, self.residuals)):
            o = f"{self.orders[k - 1]:6.2f}" if k and self.orders[k - 1] is not None else ""
            lines.append(f"{h:10.3e}  {r:11.3e}  {o:>6}")
        if self.noise_floor:
            lines.append(f"noise floor reached: {self.note}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return asdict(self) | {"observed_order": self.observed_order, "passed": self.passed}


NOISE_FLOOR = 1e-12
CONVERGENCE_STEP = 0.04


def convergence_study(config: SuiteConfig, check_id: str, base_step: float | None = None,
                      manifold: str | None = None) -> ConvergenceTable:
    """Residuals at ``h``, ``h/2``, ``h/4`` and observed orders ``log2(r(h) / r(h/2))``.

    Flow checks refine the time step together with the spatial step.  A
    residual below :data:`NOISE_FLOOR` means the check has no visible
    discretization error; this is reported, not failed.
    """
    config.validate()
    if check_id not in CHECKS:
        raise ConfigError(f"unknown check {check_id!r}")
    check = CHECKS[check_id]
    if not check.differential:
        raise NotDifferential(f"{check_id} is not differential")
    if manifold is None:
        manifold = config.manifolds[0] if config.manifolds else "random_polynomial"
    entry = resolve_entry(manifold, config)
    if not check.applies(entry):
        raise ConfigError(f"{check_id} does not apply to {manifold}")
    h0 = CONVERGENCE_STEP if base_step is None else base_step
    x = entry.chart.sample(1, config.seed, margin=0.35)[0]
    declared = check.order if check.order is not None else float(config.fd_order)
    steps, res = [], []
    for k in range(3):
        h = h0 / 2**k
        e = replace(entry, chart=entry.chart.with_policy(DerivativePolicy("fd", config.fd_order, h)))
        if check.suite == "flow":
            r, _ = check.point(e, x, tau=h, t_order=2)
        else:
            r, _ = check.point(e, x)
        steps.append(h)
        res.append(float(r))
    orders, floor = [], False
    for a, b in zip(res, res[1:]):
        if b < NOISE_FLOOR or a < NOISE_FLOOR:
            floor = True
            orders.append(None)
        else:
            orders.append(math.log2(a / b))
    note = f"residual below {NOISE_FLOOR:g}" if floor else ""
    return ConvergenceTable(check_id, entry.name, [float(v) for v in x], declared, steps, res, orders, floor, note)
