import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from cancelling import kernels
from cancelling.catalog import catalog_get
from cancelling.linalg import (
    LinalgError,
    NumericError,
    Subspace,
    exact_contains_vector,
    exact_image,
    exact_intersect,
    exact_kernel,
    exact_rank,
    image,
    intersect,
    kernel,
    principal_angles,
    pseudoinverse,
    singular_values,
    svd,
    svd_batch,
    to_exact,
)
from cancelling.symbols import eval_symbol

entries = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def matrices(max_side=6):
    shapes = st.tuples(st.integers(1, max_side), st.integers(1, max_side))
    return shapes.flatmap(lambda s: hnp.arrays(np.float64, s, elements=entries))


def low_rank(draw_rng, rows, cols, rank):
    return draw_rng.standard_normal((rows, rank)) @ draw_rng.standard_normal((rank, cols))


# -- SVD -----------------------------------------------------------------------------------

def test_svd_trivial_cases():
    assert np.allclose(svd(np.eye(3))[1], [1, 1, 1])
    assert np.allclose(svd(np.diag([3.0, 0.0]))[1], [3, 0])


@given(matrices())
def test_svd_reconstructs_and_is_orthonormal(m):
    u, s, v = svd(m)
    r = min(m.shape)
    scale = max(np.abs(m).max(), 1e-300)
    assert np.abs(u @ np.diag(s) @ v.T - m).max() <= 1e-10 * scale
    assert np.all(s >= 0) and np.all(np.diff(s) <= 0)
    assert np.allclose(u.T @ u, np.eye(r), atol=1e-10)
    assert np.allclose(v.T @ v, np.eye(r), atol=1e-10)


def test_svd_against_gram_eigendecomposition():
    rng = np.random.default_rng(7)
    for _ in range(20):
        m = rng.standard_normal((5, 3))
        _, s, v = svd(m)
        w, q = np.linalg.eigh(m.T @ m)
        assert np.allclose(s ** 2, w[::-1], rtol=1e-10)
        # right singular vectors are eigenvectors of the gram matrix
        assert np.allclose(np.abs(np.sum(v * q[:, ::-1], axis=0)), 1.0, atol=1e-8)


def test_svd_rejects_non_finite_and_reports_non_convergence():
    with pytest.raises(LinalgError):
        svd(np.array([[1.0, np.nan]]))
    with pytest.raises(NumericError, match="did not converge"):
        svd_batch(np.random.default_rng(0).standard_normal((1, 6, 6)), max_sweeps=1)


@pytest.mark.skipif("compiled" not in kernels.available_backends(), reason="extension not built")
@pytest.mark.parametrize("shape", [(3, 3), (4, 3), (9, 3), (2, 3), (8, 6), (1, 3), (6, 1)])
def test_backends_agree(shape):
    rng = np.random.default_rng(sum(shape))
    a = rng.standard_normal((200,) + shape)
    a[::7, :, -1] = a[::7, :, 0]  # some rank-deficient members
    backends = kernels.available_backends()
    s_py = backends["python"](a.copy(), 60)[1]
    s_c = backends["compiled"](a.copy(), 60)[1]
    assert np.allclose(s_py, s_c, atol=1e-12)
    for fn in backends.values():
        u, s, v, ok = fn(a.copy(), 60)
        assert ok.all()
        assert np.abs(np.einsum("bij,bj,bkj->bik", u, s, v) - a).max() < 1e-12


def test_pure_python_switch():
    env = dict(os.environ, CANCELLING_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from cancelling import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


# -- pseudoinverse ---------------------------------------------------------------------------

def test_pinv_of_divcurl_symbol_is_left_inverse():
    a = catalog_get("divcurl").numeric([0.0, 0.0, 1.0])
    assert np.abs(pseudoinverse(a) @ a - np.eye(3)).max() < 1e-10


def test_pinv_of_zero_is_zero():
    assert not pseudoinverse(np.zeros((3, 2))).any()


def test_pinv_matches_normal_equations_for_full_column_rank():
    rng = np.random.default_rng(3)
    for _ in range(20):
        m = rng.standard_normal((6, 3))
        assert np.abs(pseudoinverse(m) - np.linalg.solve(m.T @ m, m.T)).max() < 1e-8


@given(matrices())
def test_penrose_identities(m):
    p = pseudoinverse(m)
    scale = max(np.abs(m).max(), 1.0)
    assert np.abs(m @ p @ m - m).max() <= 1e-8 * scale
    pscale = max(np.abs(p).max(), 1.0)
    assert np.abs(p @ m @ p - p).max() <= 1e-8 * pscale


# -- image / kernel ----------------------------------------------------------------------------

@given(matrices())
def test_rank_nullity(m):
    assert image(m).dim + kernel(m).dim == m.shape[1]


def test_divergence_and_curl_kernels():
    xi = np.array([0.3, -1.2, 0.7])
    k = kernel(catalog_get("divergence", n=3).numeric(xi))
    assert k.dim == 2 and np.abs(k.orthonormal().T @ xi).max() < 1e-12
    k = kernel(catalog_get("curl", n=3).numeric(xi))
    assert k.dim == 1 and k.equals(Subspace.span(xi[:, None]))


def test_identity_image_and_kernel():
    assert image(np.eye(4)).dim == 4
    assert kernel(np.eye(4)).dim == 0


@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 5), st.integers(0, 2 ** 32 - 1))
def test_exact_and_numeric_kernels_agree_on_integer_matrices(rows, cols, rank, seed):
    rng = np.random.default_rng(seed)
    rank = min(rank, rows, cols)
    m = rng.integers(-3, 4, (rows, rank)) @ rng.integers(-3, 4, (rank, cols))
    s = singular_values(m.astype(float))
    gaps_ok = all(x > 100 * 1e-8 * max(s[0], 1e-300) or x == 0 or x < 1e-14 * max(s[0], 1) for x in s)
    exact = exact_kernel(m.astype(object))
    if gaps_ok:
        assert exact.dim == kernel(m.astype(float)).dim
    assert exact.dim + exact_rank(m) == cols
    prod = m.astype(object).dot(exact.basis)
    assert all(c == 0 for c in prod.ravel())


def test_exact_image_and_membership():
    m = to_exact([["1/2", 1], [1, 2], [0, 0]])
    img = exact_image(m)
    assert img.dim == 1
    assert exact_contains_vector(img, [Fraction(1, 3), Fraction(2, 3), 0])
    assert not exact_contains_vector(img, [0, 0, 1])


# -- intersections -----------------------------------------------------------------------------

def test_divcurl_images_meet_in_first_axis():
    op = catalog_get("divcurl")
    acc = Subspace.full(4)
    for xi in np.eye(3):
        acc = intersect(acc, image(op.numeric(xi)))
    assert acc.dim == 1
    assert acc.equals(Subspace.span(np.array([[1.0], [0], [0], [0]])))
    exact = Subspace.full(4, exact=True)
    for xi in np.eye(3, dtype=int):
        exact = exact_intersect(exact, exact_image(eval_symbol(op, list(xi))))
    assert exact.dim == 1 and exact_contains_vector(exact, [1, 0, 0, 0])


@given(st.integers(0, 2 ** 32 - 1))
def test_intersection_recovers_planted_common_part(seed):
    rng = np.random.default_rng(seed)
    amb = 8
    b, c1, c2 = rng.standard_normal((amb, 2)), rng.standard_normal((amb, 2)), rng.standard_normal((amb, 3))
    s1 = Subspace.span(np.hstack([b, c1]))
    s2 = Subspace.span(np.hstack([b, c2]))
    common = Subspace.span(b)
    got = intersect(s1, s2)
    assert got.equals(common)
    assert intersect(s2, s1).equals(common)
    s3 = Subspace.span(np.hstack([b, rng.standard_normal((amb, 1))]))
    assert intersect(intersect(s1, s2), s3).equals(intersect(s1, intersect(s2, s3)))


@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 4))
def test_self_intersection_and_orthonormal_basis(seed, dim):
    rng = np.random.default_rng(seed)
    s = Subspace.span(rng.standard_normal((5, dim)))
    q = s.orthonormal()
    assert np.allclose(q.T @ q, np.eye(s.dim), atol=10 * s.tol)
    assert intersect(s, s).equals(s)
    assert np.all(principal_angles(s, s) < 1e-6)


def test_intersect_rejects_ambient_mismatch():
    with pytest.raises(LinalgError):
        intersect(Subspace.full(2), Subspace.full(3))


def test_canonical_basis_signs():
    s = Subspace.span(np.array([[-1.0], [0.2], [0.0]])).canonical()
    q = s.orthonormal()
    assert q[np.argmax(np.abs(q[:, 0])), 0] > 0
