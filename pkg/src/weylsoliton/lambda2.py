"""Bivectors on an oriented 4-dimensional inner-product space.

Every 6-component array in this package is a bivector written in the ordered
basis ``(e12, e13, e14, e34, e42, e23)``.  With the orientation
``vol = e1^e2^e3^e4`` the Hodge star is then the swap of the first and last
three components, and the self-dual / anti-self-dual generators are the
normalized sums / differences of components ``k`` and ``k + 3``.

All functions broadcast over leading axes.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.transform import Rotation

# (i, j) index pairs of the basis, zero based; e42 is stored as (3, 1).
BASIS_PAIRS: tuple[tuple[int, int], ...] = ((0, 1), (0, 2), (0, 3), (2, 3), (3, 1), (1, 2))
BASIS_LABELS = ("e12", "e13", "e14", "e34", "e42", "e23")

_S = 1.0 / np.sqrt(2.0)

#: Rows are the orthonormal generators: three self-dual, then three anti-self-dual.
HODGE_BASIS = _S * np.array(
    [
        [1, 0, 0, 1, 0, 0],
        [0, 1, 0, 0, 1, 0],
        [0, 0, 1, 0, 0, 1],
        [1, 0, 0, -1, 0, 0],
        [0, 1, 0, 0, -1, 0],
        [0, 0, 1, 0, 0, -1],
    ],
    dtype=float,
)
SELF_DUAL = HODGE_BASIS[:3]
ANTI_SELF_DUAL = HODGE_BASIS[3:]

#: Matrix of the Hodge star in the bivector basis (block swap).
STAR = np.block([[np.zeros((3, 3)), np.eye(3)], [np.eye(3), np.zeros((3, 3))]])

# to_matrix as a fixed linear map: _EMBED[k] is the antisymmetric 4x4 of basis element k.
_EMBED = np.zeros((6, 4, 4))
for _k, (_i, _j) in enumerate(BASIS_PAIRS):
    _EMBED[_k, _i, _j] = 1.0
    _EMBED[_k, _j, _i] = -1.0


def wedge(u, v):
    """Bivector ``u ^ v``; components ``u_i v_j - u_j v_i`` in basis order."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    m = u[..., :, None] * v[..., None, :]
    m = m - np.swapaxes(m, -1, -2)
    return from_matrix(m)


def to_matrix(alpha):
    """Antisymmetric 4x4 matrix ``A`` with ``A @ x`` the action of ``alpha`` on ``x``."""
    return np.einsum("...k,kij->...ij", np.asarray(alpha, dtype=float), _EMBED)


def from_matrix(m):
    """Inverse of :func:`to_matrix` (reads the upper entries of an antisymmetric matrix)."""
    m = np.asarray(m, dtype=float)
    return np.stack([m[..., i, j] for i, j in BASIS_PAIRS], axis=-1)


def act(alpha, x):
    """Action of a bivector on a vector: ``(U^V)X = <V,X>U - <U,X>V``."""
    return np.einsum("...ij,...j->...i", to_matrix(alpha), np.asarray(x, dtype=float))


def hodge_star(alpha):
    alpha = np.asarray(alpha, dtype=float)
    return np.concatenate([alpha[..., 3:], alpha[..., :3]], axis=-1)


def project_pm(alpha, sign: int):
    """Projection onto the self-dual (``sign=+1``) or anti-self-dual (``sign=-1``) part."""
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")
    alpha = np.asarray(alpha, dtype=float)
    return 0.5 * (alpha + sign * hodge_star(alpha))


def hodge_coordinates(alpha):
    """Coordinates of ``alpha`` in :data:`HODGE_BASIS` (first three self-dual)."""
    return np.einsum("ab,...b->...a", HODGE_BASIS, np.asarray(alpha, dtype=float))


def induced_rotation(o):
    """6x6 matrix of the action ``e_i ^ e_j -> (o e_i) ^ (o e_j)`` on bivectors.

    Column ``q`` holds the components of the image of basis element ``q``.
    """
    o = np.asarray(o, dtype=float)
    cols = [wedge(o[..., :, i], o[..., :, j]) for i, j in BASIS_PAIRS]
    return np.stack(cols, axis=-1)


def quaternion_triple_check(alphas, tol: float = 1e-12) -> tuple[bool, list[str]]:
    """Check the quaternion relations of a triple of self-dual bivectors of norm sqrt(2).

    As endomorphisms, ``a_i a_i = -Id`` and ``a_i a_j = a_k`` for cyclic
    ``(i, j, k)``, where the product ``a_i a_j`` applies ``a_i`` first.
    Returns ``(ok, failures)`` with a readable description of each failing
    relation.
    """
    mats = [to_matrix(a) for a in alphas]
    if len(mats) != 3:
        raise ValueError("expected three bivectors")
    failures = []
    for i, a in enumerate(mats):
        err = np.max(np.abs(a @ a + np.eye(4)))
        if err > tol:
            failures.append(f"alpha{i + 1}^2 != -Id (max deviation {err:.3g})")
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        # a_i a_j acting on X is a_j(a_i(X))
        prod = mats[j] @ mats[i]
        err = np.max(np.abs(prod - mats[k]))
        if err > tol:
            failures.append(f"alpha{i + 1} alpha{j + 1} != alpha{k + 1} (max deviation {err:.3g})")
    return not failures, failures


def _quat_left(p):
    # x -> p x as a 4x4 matrix, quaternion components (w, x, y, z) <-> (e1, e2, e3, e4)
    w, x, y, z = p
    return np.array([[w, -x, -y, -z], [x, w, -z, y], [y, z, w, -x], [z, -y, x, w]])


def _quat_right_conj(q):
    # x -> x conj(q)
    w, x, y, z = q
    return np.array([[w, x, y, z], [-x, w, -z, y], [-y, z, w, -x], [-z, -y, x, w]])


def lift_rotation_pair(rot_plus, rot_minus):
    """An SO(4) matrix whose induced action is ``rot_plus`` on the self-dual
    triple and ``rot_minus`` on the anti-self-dual triple.

    Left multiplication by a unit quaternion rotates the self-dual block and
    right multiplication by a conjugate rotates the anti-self-dual block, so
    the pair lifts as ``x -> p x conj(q)`` (unique up to sign).
    """
    xp, yp, zp, wp = Rotation.from_matrix(rot_plus).as_quat()
    xm, ym, zm, wm = Rotation.from_matrix(rot_minus).as_quat()
    return _quat_left((wp, xp, yp, zp)) @ _quat_right_conj((wm, xm, ym, zm))


def random_rotation(rng) -> np.ndarray:
    """Uniformly distributed element of SO(4)."""
    q, r = np.linalg.qr(rng.normal(size=(4, 4)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
