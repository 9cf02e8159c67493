import jax.numpy as jnp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from weylsoliton import chart as ch
from weylsoliton import curvature as cv
from weylsoliton import zoo


def test_policy_validation():
    with pytest.raises(ch.ChartError, match="order"):
        ch.DerivativePolicy("fd", 3)
    with pytest.raises(ch.ChartError, match="step"):
        ch.DerivativePolicy("fd", 4, 0.0)
    with pytest.raises(ch.ChartError, match="mode"):
        ch.DerivativePolicy("spectral")
    assert ch.DerivativePolicy("fd", 6, 0.01).reach == pytest.approx(0.03)
    assert ch.DerivativePolicy("analytic").reach == 0.0


def test_fd_weights_known_values():
    offs, w = ch.fd_weights(2)
    assert np.allclose(offs, [-1, 1]) and np.allclose(w, [-0.5, 0.5])
    offs, w = ch.fd_weights(4)
    assert np.allclose(w, [1 / 12, -2 / 3, 2 / 3, -1 / 12])


@pytest.mark.parametrize("order", [2, 4, 6])
@given(st.integers(0, 2**32 - 1))
def test_fd_derivative_exact_on_low_degree_polynomials(order, seed):
    c = np.random.default_rng(seed).normal(size=(4, order + 1))

    def fn(x):
        return sum(jnp.sum(c[:, k] * x**k) for k in range(order + 1))

    x = jnp.asarray(np.random.default_rng(seed + 1).uniform(-1, 1, 4))
    fd = ch.derivative(fn, ch.DerivativePolicy("fd", order, 0.1))(x)
    ad = ch.derivative(fn, ch.DerivativePolicy("analytic"))(x)
    assert np.allclose(fd, ad, rtol=1e-9, atol=1e-9)


@pytest.fixture(scope="module")
def sphere():
    return zoo.get("sphere4", r=2.0)


def test_sphere_curvature_constant(sphere):
    for x in sphere.chart.sample(3, 0):
        pg = ch.point_geometry_at(sphere.chart, x)
        assert np.allclose(pg.R, 0.25 * 0.5 * cv.GG, atol=1e-12)
        assert np.allclose(pg.grad_R, 0, atol=1e-12)


def test_domain_errors(sphere):
    with pytest.raises(ch.ChartError, match="outside the domain box"):
        ch.point_geometry_at(sphere.chart, np.full(4, 100.0))
    with pytest.raises(ch.ChartError, match="expected a point"):
        ch.point_geometry_at(sphere.chart, np.zeros(3))
    fd = sphere.chart.with_policy(ch.DerivativePolicy("fd", 4, 0.2))
    edge = np.asarray(sphere.chart.box[1]) - 0.05
    with pytest.raises(ch.ChartError, match="leaves the domain box"):
        ch.point_geometry_at(fd, edge)


def test_non_positive_metric():
    bad = ch.ChartGeometry("bad", lambda x: jnp.diag(jnp.array([1.0, 1.0, 1.0, x[0]])),
                           box=((-1.0,) * 4, (1.0,) * 4), policy=ch.DerivativePolicy("analytic"))
    with pytest.raises(ch.ChartError, match="positive definite"):
        ch.point_geometry_at(bad, np.array([-0.5, 0, 0, 0]))


def test_soliton_residuals_need_lambda():
    poly = zoo.get("random_polynomial")
    with pytest.raises(ch.ChartError):
        ch.soliton_residuals(poly.chart, np.zeros(4))


def test_with_policy_shares_compiled_cache(sphere):
    other = sphere.chart.with_policy(ch.DerivativePolicy("fd", 4, 1e-3))
    assert other._cache is sphere.chart._cache
    assert other.with_lambda(1.0)._cache is sphere.chart._cache


def test_conformal_constant_factor_scales_curvature(sphere):
    c = 1.5
    conf = ch.conformal_transform(sphere.chart, lambda x: c + 0.0 * x[0])
    x = sphere.chart.sample(1, 2)[0]
    a = ch.point_geometry_at(sphere.chart, x, jets=False)
    b = ch.point_geometry_at(conf, x, jets=False)
    assert np.allclose(b.R, a.R / c**2)


def test_sharp_is_cofactor():
    a = np.diag([1.0, 2.0, 3.0])
    assert np.allclose(np.asarray(ch.sharp(jnp.asarray(a))), np.diag([6.0, 3.0, 2.0]))
