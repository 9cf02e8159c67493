"""Chart manifests.

A manifest is a JSON object holding a suite configuration; its ``charts``
array adds named charts, either from a zoo builder::

    {"name": "big_sphere", "builder": "sphere4", "params": {"r": 2.0}}

or from symbolic metric components in coordinates ``x0..x3``::

    {"name": "warped", "metric": [["exp(x0)", 0, 0, 0], ...],
     "potential": "x0**2/2", "box": [[-1, -1, -1, -1], [1, 1, 1, 1]],
     "policy": {"mode": "fd", "order": 4, "step": 0.001}}

Symbolic entries are lambdified to jax so they support analytic derivatives.
"""

from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path

import jax.numpy as jnp
import sympy as sp

from ..chart import ChartError, ChartGeometry, DerivativePolicy
from ..zoo import ZooEntry, ZooError, get
from .schema import ConfigError, validate_config


def _policy(d: dict | None, default: DerivativePolicy) -> DerivativePolicy:
    if d is None:
        return default
    try:
        if d["mode"] == "analytic":
            return DerivativePolicy("analytic")
        return DerivativePolicy("fd", d.get("order", 4), d.get("step", 1e-3))
    except ChartError as exc:
        raise ConfigError(f"invalid FD policy: {exc}") from None


def _box(b):
    return tuple(tuple(float(v) for v in side) for side in b)


def _symbolic(defn: dict) -> ZooEntry:
    names = defn.get("coordinates", ["x0", "x1", "x2", "x3"])
    syms = sp.symbols(names, real=True)
    local = dict(zip(names, syms))
    try:
        g = sp.Matrix([[sp.sympify(c, locals=local) for c in row] for row in defn["metric"]])
        f = sp.sympify(defn.get("potential", 0), locals=local)
    except (sp.SympifyError, TypeError) as exc:
        raise ConfigError(f"chart {defn['name']!r}: cannot parse expression: {exc}") from None
    stray = (g.free_symbols | f.free_symbols) - set(syms)
    if stray:
        raise ConfigError(f"chart {defn['name']!r}: unknown symbols {sorted(map(str, stray))}")
    if g != g.T:
        raise ConfigError(f"chart {defn['name']!r}: metric is not symmetric")
    gl = sp.lambdify(syms, g, modules="jax")
    fl = sp.lambdify(syms, f, modules="jax")

    def metric(x):
        return jnp.asarray(gl(*x), dtype=jnp.float64).reshape(4, 4)

    def potential(x):
        return jnp.asarray(fl(*x), dtype=jnp.float64) + 0.0 * x[0]

    lam = defn.get("lam")
    soliton = defn.get("soliton", lam is not None)
    chart = ChartGeometry(
        name=defn["name"],
        metric=metric,
        potential=potential,
        lam=lam,
        box=_box(defn["box"]),
        policy=_policy(defn.get("policy"), DerivativePolicy("analytic")),
        soliton=soliton,
        params={"metric": [[str(c) for c in row] for row in g.tolist()], "potential": str(f)},
    )
    return ZooEntry(defn["name"], chart, "none", lam=lam, note="manifest chart")


def build_chart(defn: dict) -> ZooEntry:
    """Entry for one manifest chart definition."""
    if "builder" in defn:
        try:
            entry = get(defn["builder"], **defn.get("params", {}))
        except ZooError as exc:
            raise ConfigError(str(exc)) from None
        chart = entry.chart
        if "box" in defn:
            chart = replace(chart, box=_box(defn["box"]), _cache=chart._cache)
        chart = chart.with_policy(_policy(defn.get("policy"), chart.policy))
        return replace(entry, name=defn["name"], chart=replace(chart, name=defn["name"], _cache=chart._cache))
    return _symbolic(defn)


def load_manifest(path) -> dict:
    """Parse and schema-validate a manifest file; returns the configuration dict."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read manifest {str(path)!r}: {exc.strerror}") from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"manifest {str(path)!r} is not valid JSON: {exc}") from None
    validate_config(d)
    names = [c["name"] for c in d.get("charts", [])]
    if len(set(names)) != len(names):
        raise ConfigError("duplicate chart names in manifest")
    return d
