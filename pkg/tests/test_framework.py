import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from weylsoliton import curvature as cv
from weylsoliton import framework as fw
from weylsoliton import synthetic

seeds = st.integers(0, 2**32 - 1)
scales = st.sampled_from([1e-3, 1.0, 30.0])


def jets(seed, scale=1.0, count=16):
    return synthetic.soliton_jets(count, seed=seed, scale=scale)


def worst(residuals):
    return max(r.rel for r in residuals)


def test_coefficients_in_dimension_four():
    c = fw.coefficients(4)
    assert c["C_Q"] == pytest.approx(1 / 6)
    assert c["D_M"] == pytest.approx(1 / 2)
    assert c["dW"] == pytest.approx(-1 / 2)


@given(seeds, scales)
def test_synthetic_jets_satisfy_soliton_constraints(seed, scale):
    pg = jets(seed, scale)
    res = pg.soliton_residuals()
    assert max(res.values()) < 1e-10 * max(1.0, scale) ** 2


@given(seeds, scales)
def test_interior_product_identities(seed, scale):
    assert worst(fw.interior_weyl(jets(seed, scale))[1]) < 1e-10


@given(seeds, scales)
def test_divergence_representations(seed, scale):
    assert worst(fw.divergence_representation_residuals(jets(seed, scale))) < 1e-10


@given(seeds, scales)
def test_pairing_table(seed, scale):
    assert worst(fw.pairing_table_residuals(jets(seed, scale))) < 1e-10


@given(seeds, scales)
def test_orthogonality(seed, scale):
    assert worst(fw.orthogonality_residuals(jets(seed, scale))) < 1e-10


@given(seeds)
def test_rbar_blocks(seed):
    assert worst(fw.rbar_and_sectional(jets(seed)).residuals) < 1e-10


@given(seeds)
def test_batched_and_single_agree(seed):
    pg = jets(seed, count=4)
    ft = fw.framework_tensors(pg)
    for i in range(4):
        one = fw.framework_tensors(pg.index(i))
        assert np.allclose(one.D, ft.D[i])
        assert np.allclose(one.C, ft.C[i])


@given(seeds)
def test_drift_laplacian_pairing_closed_form(seed):
    pg = jets(seed)
    lhs, rhs = fw.delta_f_weyl_plus_pairing(pg)
    assert np.allclose(lhs, rhs, atol=1e-10)


@given(seeds)
def test_bochner_forms_agree(seed):
    a, b = fw.bochner_rhs(jets(seed))
    assert np.allclose(a, b, atol=1e-10)


@given(seeds)
def test_hess_pairing_conversion(seed):
    pg = jets(seed)
    lhs, rhs = fw.hess_pairing_conversion(pg.decomposition().W, pg.hessf)
    assert np.allclose(lhs, rhs, atol=1e-10)


def test_framework_tensors_reject_non_soliton(rng):
    pg = synthetic.soliton_jets(1, seed=3).index(0)
    bad = fw.PointGeometry(R=pg.R, Rc=pg.Rc, S=pg.S, gradf=pg.gradf, hessf=pg.hessf + np.eye(4), lam=pg.lam)
    with pytest.raises(fw.JetError, match="soliton residual"):
        fw.framework_tensors(bad)


@given(seeds)
def test_eigen_d_instances_have_vanishing_d(seed):
    pg = fw.eigen_jet(np.random.default_rng(seed))
    rep = fw.rigidity_predicates(pg)
    assert rep.rc_pattern and rep.eigen_d_applies
    assert rep.d_norm < 1e-12
    assert abs(rep.w_rc_rc) < 1e-12
    assert all(v < 1e-10 for v in rep.eigen_items.values())


@given(seeds)
def test_gradient_eigen_items_equivalent(seed):
    pg = jets(seed, count=1).index(0)
    rep = fw.rigidity_predicates(pg)
    assert rep.eigen_items_consistent
    assert not rep.eigen_d_applies


@given(seeds, st.tuples(*[st.floats(-3, 3)] * 3))
def test_vector_form_of_combination(seed, abc):
    pg = jets(seed, count=1).index(0)
    ft = fw.framework_tensors(pg)
    t = abc[0] * ft.Q + abc[1] * ft.M + abc[2] * ft.N
    frame, vecs = fw.t_combination_vectors(pg, *abc)
    from weylsoliton.lambda2 import induced_rotation

    rot = induced_rotation(frame)
    assert np.allclose(rot.T @ t @ frame, fw.vector_form_tensor(vecs), atol=1e-10)


def test_plus_kernel_is_the_full_kernel():
    ker = fw.plus_kernel()
    assert ker.shape == (4, 16)
    for v in ker:
        assert np.allclose(fw.vector_form_tensor(v.reshape(4, 4)), 0, atol=1e-12)


@given(seeds)
def test_decom_basis_orthonormal(seed):
    x = np.random.default_rng(seed).normal(size=4)
    x /= np.linalg.norm(x)
    b = fw.decom_basis(x)
    assert np.allclose(b.T @ b, np.eye(4))


def test_sectional_bound_on_round_sphere():
    pg = fw.PointGeometry.from_curvature(0.5 * cv.GG, np.zeros(4), 3.0)
    rep = fw.sectional_bound_report(pg, eps=0.3)
    assert rep.ok
    assert rep.int_rc_combination == pytest.approx(36 - 72 + 36)
    with pytest.raises(ValueError, match="1/3"):
        fw.sectional_bound_report(pg, eps=0.4)


def test_isotropic_u_of_s2xr2():
    r = np.zeros((6, 6))
    r[0, 0] = 1.0
    pg = fw.PointGeometry.from_curvature(r, np.zeros(4), 1.0)
    # S/3 - 2 W± has smallest eigenvalue 2/3 - 2/3 = 0
    assert fw.isotropic_u(pg) == pytest.approx(0.0, abs=1e-12)
