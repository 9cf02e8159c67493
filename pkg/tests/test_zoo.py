import math

import numpy as np
import pytest

from weylsoliton import chart as ch
from weylsoliton import zoo


def test_unknown_manifold():
    with pytest.raises(zoo.ZooError, match="unknown manifold"):
        zoo.get("klein_bottle")


def test_bad_parameters():
    with pytest.raises(zoo.ZooError, match="bad parameters"):
        zoo.get("sphere4", radius=2)


@pytest.mark.parametrize("name", ["gaussian", "sphere4", "cylinder_s3xr", "s2xr2", "s2xs2", "cp2"])
def test_entries_validate_and_are_solitons(name):
    entry = zoo.get(name)
    worst = entry.validate(points=10, seed=1)
    assert max(worst.values()) < 1e-8
    for x in entry.chart.sample(2, 2):
        assert max(ch.soliton_residuals(entry.chart, x).values()) < 1e-9


def test_entries_are_memoized():
    assert zoo.get("sphere4") is zoo.get("sphere4")


def test_mismatched_expectation_aborts():
    base = zoo.get("sphere4")
    from dataclasses import replace

    wrong = replace(base, S=13.0)
    with pytest.raises(zoo.ZooError, match="expectation mismatch"):
        wrong.validate(points=2)


@pytest.mark.parametrize("name,chi,tau", [("sphere4", 2, 0), ("s2xs2", 4, 0), ("cp2", 3, 1)])
def test_closed_integrals(name, chi, tau):
    it = zoo.get(name).integrals()
    assert it["gb_integral"] == pytest.approx(8 * math.pi**2 * chi, rel=1e-3)
    assert it["sig_integral"] == pytest.approx(12 * math.pi**2 * tau, rel=1e-3, abs=1e-9)


def test_open_entry_has_no_integrals():
    with pytest.raises(zoo.ZooError, match="not a closed"):
        zoo.get("gaussian").integrals()


def test_conformal_pair():
    base, conf, u = zoo.conformal_pair(zoo.get("gaussian"))
    assert conf.name == "gaussian_conformal"
    x = base.chart.sample(1, 0)[0]
    g0 = np.asarray(base.chart.metric(x))
    g1 = np.asarray(conf.chart.metric(x))
    assert np.allclose(g1, float(u(x)) ** 2 * g0)


def test_random_polynomial_is_generic():
    e = zoo.get("random_polynomial")
    assert e.chart.policy.mode == "fd"
    pg = ch.point_geometry_at(e.chart, np.zeros(4), jets=False)
    assert np.max(np.abs(pg.decomposition().W)) > 1e-3
