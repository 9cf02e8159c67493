import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from weylsoliton import curvature as cv

seeds = st.integers(0, 2**32 - 1)


def product_s2_r2(k=1.0):
    m = np.zeros((6, 6))
    m[0, 0] = k  # only R_1212
    return m


def test_gg_is_twice_identity():
    assert np.allclose(cv.GG, 2 * np.eye(6))


def test_round_sphere_oracle():
    r = 0.5 * cv.GG  # K = 1
    d = cv.decompose(r)
    assert np.allclose(d.Rc, 3 * np.eye(4))
    assert d.S == pytest.approx(12.0)
    assert np.allclose(d.W, 0)
    assert cv.gauss_bonnet_integrand(r) == pytest.approx(6.0)


def test_s2xr2_weyl_spectrum():
    d = cv.decompose(product_s2_r2())
    assert np.allclose(np.linalg.eigvalsh(cv.weyl_pm(d.W, 1)), [-1 / 6, -1 / 6, 1 / 3])
    assert np.allclose(np.linalg.eigvalsh(cv.weyl_pm(d.W, -1)), [-1 / 6, -1 / 6, 1 / 3])
    assert cv.det_wpm(d.W, 1) == pytest.approx(1 / 108)


@given(seeds)
def test_decomposition_is_orthogonal(seed):
    r = cv.random_curvature(np.random.default_rng(seed))
    d = cv.decompose(r)
    assert np.allclose(d.R, r)
    assert abs(cv.inner(d.W, d.U)) < 1e-12
    assert abs(cv.inner(d.W, d.V)) < 1e-12
    assert abs(cv.inner(d.U, d.V)) < 1e-12
    assert np.allclose(cv.ricci(d.W), 0, atol=1e-12)
    assert abs(cv.bianchi_residual(d.W)) < 1e-12


@given(seeds)
def test_tensor_roundtrip_and_symmetries(seed):
    r = cv.random_curvature(np.random.default_rng(seed))
    t = cv.tensor_from_operator(r)
    assert np.allclose(cv.operator_from_tensor(t), r)
    assert np.allclose(t, -np.swapaxes(t, 0, 1))
    assert np.allclose(t, np.transpose(t, (2, 3, 0, 1)))
    bianchi = t + np.transpose(t, (0, 2, 3, 1)) + np.transpose(t, (0, 3, 1, 2))
    assert np.allclose(bianchi, 0)


@given(seeds)
def test_bianchi_projection_idempotent(seed):
    m = cv.project_bianchi(np.random.default_rng(seed).normal(size=(6, 6)))
    assert np.allclose(cv.project_bianchi(m), m)
    assert cv.validate_curvature(m).ok()


def test_decompose_rejects_non_curvature():
    with pytest.raises(cv.CurvatureError, match="Bianchi"):
        cv.decompose(np.eye(6) + np.fliplr(np.eye(6)))
    with pytest.raises(cv.CurvatureError, match="6x6"):
        cv.decompose(np.eye(4))


def test_weyl_pm_warns_on_mixed_block():
    r = cv.kulkarni_nomizu(np.diag([1.0, -1, 0, 0]), np.eye(4))
    with pytest.warns(RuntimeWarning, match="mixed block"):
        cv.weyl_pm(r, 1)


@given(seeds)
def test_berger_normal_form(seed):
    rng = np.random.default_rng(seed)
    w = cv.random_weyl(rng)
    nf = cv.berger_normal_form(w)
    assert np.allclose(cv.rotate_operator(w, nf.frame), nf.operator(), atol=1e-10)
    assert abs(nf.a.sum()) < 1e-10 and abs(nf.b.sum()) < 1e-10


def test_normal_form_requires_weyl():
    with pytest.raises(cv.CurvatureError, match="mixed block"):
        cv.berger_normal_form(cv.kulkarni_nomizu(np.diag([1.0, -1, 0, 0]), np.eye(4)))


@given(seeds)
def test_hitchin_thorpe_pointwise(seed):
    rng = np.random.default_rng(seed)
    r = cv.random_weyl(rng) + rng.normal() * cv.GG
    assert cv.hitchin_thorpe_check(r)


def test_hitchin_thorpe_needs_einstein():
    with pytest.raises(cv.CurvatureError, match="Einstein"):
        cv.hitchin_thorpe_check(product_s2_r2())
