import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from weylsoliton import lambda2 as l2

seeds = st.integers(0, 2**32 - 1)


def test_basis_orthonormal_and_star_blocks():
    assert np.allclose(l2.HODGE_BASIS @ l2.HODGE_BASIS.T, np.eye(6))
    assert np.allclose(l2.HODGE_BASIS @ l2.STAR @ l2.HODGE_BASIS.T, np.diag([1, 1, 1, -1, -1, -1]))


def test_wedge_of_basis_vectors():
    e = np.eye(4)
    assert np.allclose(l2.wedge(e[0], e[1]), [1, 0, 0, 0, 0, 0])
    # e42 is stored with its own orientation
    assert np.allclose(l2.wedge(e[3], e[1]), [0, 0, 0, 0, 1, 0])
    assert np.allclose(l2.wedge(e[1], e[3]), [0, 0, 0, 0, -1, 0])


def test_star_of_e12_is_e34():
    assert np.allclose(l2.hodge_star([1, 0, 0, 0, 0, 0]), [0, 0, 0, 1, 0, 0])


@given(seeds)
def test_action_matches_definition(seed):
    rng = np.random.default_rng(seed)
    u, v, x = rng.normal(size=(3, 4))
    assert np.allclose(l2.act(l2.wedge(u, v), x), (v @ x) * u - (u @ x) * v)


@given(seeds)
def test_star_involution_and_projections(seed):
    a = np.random.default_rng(seed).normal(size=6)
    assert np.allclose(l2.hodge_star(l2.hodge_star(a)), a)
    p, m = l2.project_pm(a, 1), l2.project_pm(a, -1)
    assert np.allclose(p + m, a)
    assert np.allclose(l2.hodge_star(p), p)
    assert np.allclose(l2.hodge_star(m), -m)
    assert abs(p @ m) < 1e-12


def test_project_rejects_bad_sign():
    with pytest.raises(ValueError, match="sign"):
        l2.project_pm(np.zeros(6), 0)


@given(seeds)
def test_matrix_roundtrip(seed):
    a = np.random.default_rng(seed).normal(size=(3, 6))
    assert np.allclose(l2.from_matrix(l2.to_matrix(a)), a)


@given(seeds)
def test_induced_rotation_commutes_with_star(seed):
    o = l2.random_rotation(np.random.default_rng(seed))
    assert np.isclose(np.linalg.det(o), 1.0)
    t = l2.induced_rotation(o)
    assert np.allclose(t.T @ t, np.eye(6))
    assert np.allclose(t @ l2.STAR, l2.STAR @ t)


def test_quaternion_triples():
    ok, fails = l2.quaternion_triple_check(np.sqrt(2) * l2.SELF_DUAL)
    assert ok and not fails
    ok, _ = l2.quaternion_triple_check(np.sqrt(2) * l2.ANTI_SELF_DUAL)
    assert not ok  # anti-self-dual triple multiplies with the opposite orientation
    ok, fails = l2.quaternion_triple_check(np.sqrt(2) * l2.SELF_DUAL[[1, 0, 2]])
    assert not ok and any("!=" in f for f in fails)


@given(seeds)
def test_lift_reproduces_the_pair(seed):
    rp, rm = Rotation.random(2, random_state=seed % 2**31).as_matrix()
    o = l2.lift_rotation_pair(rp, rm)
    assert np.allclose(o.T @ o, np.eye(4))
    h = l2.HODGE_BASIS @ l2.induced_rotation(o) @ l2.HODGE_BASIS.T
    assert np.allclose(h[:3, :3], rp)
    assert np.allclose(h[3:, 3:], rm)
    assert np.allclose(h[:3, 3:], 0)
