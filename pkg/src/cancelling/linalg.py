"""Small dense linear algebra, numeric and exact.

Numeric routines sit on the batched one-sided Jacobi SVD from
:mod:`cancelling.kernels`. Exact routines take numpy object arrays of
ints/Fractions and use fraction-free (Bareiss) elimination on rows
scaled to integers.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

import numpy as np

from . import kernels

DEFAULT_TOL = 1e-8
EQUAL_ANGLE = 1e-6


class LinalgError(ValueError):
    """Shape or ambient-dimension mismatch."""


class NumericError(ArithmeticError):
    """Jacobi sweeps did not converge."""


# -- SVD -------------------------------------------------------------------------

def _check_finite(a):
    if not np.all(np.isfinite(a)):
        raise LinalgError("matrix has non-finite entries")


def svd_batch(ms, max_sweeps=60):
    """Full batched SVD: ``(u (B,m,n), s (B,n), v (B,n,n))``, s descending.

    The ``n`` columns of v are a complete orthonormal basis of the domain,
    which :func:`kernel` relies on for wide matrices.
    """
    ms = np.asarray(ms, dtype=np.float64)
    if ms.ndim != 3:
        raise LinalgError(f"expected a (B, m, n) stack, got shape {ms.shape}")
    _check_finite(ms)
    if ms.shape[0] == 0 or ms.shape[2] == 0:
        b, m, n = ms.shape
        return np.zeros((b, m, n)), np.zeros((b, n)), np.broadcast_to(np.eye(n), (b, n, n)).copy()
    # unit max entry keeps squared column norms clear of underflow and overflow
    scale = np.abs(ms).max(axis=(1, 2))
    scale[scale == 0.0] = 1.0
    u, s, v, ok = kernels.jacobi_svd_batch(np.ascontiguousarray(ms / scale[:, None, None]), max_sweeps)
    s *= scale[:, None]
    if not ok.all():
        bad = int(np.flatnonzero(~ok)[0])
        raise NumericError(
            f"Jacobi SVD did not converge in {max_sweeps} sweeps for matrix\n{ms[bad]!r}"
        )
    return u, s, v


def svd(m):
    """Thin SVD ``M = U diag(s) V^T`` with ``r = min(rows, cols)`` terms.

    U has orthonormal columns even where ``s`` vanishes to round-off.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise LinalgError(f"expected a matrix, got shape {m.shape}")
    rows, cols = m.shape
    u, s, v = svd_batch(m[None])
    u, s, v = u[0], s[0], v[0]
    r = min(rows, cols)
    u, s, v = u[:, :r], s[:r], v[:, :r]
    # columns of u for round-off singular values are noise; complete them instead
    zero = s <= max(rows, cols) * np.finfo(float).eps * (s[0] if r else 0.0)
    if zero.any():
        good = u[:, ~zero]
        q, _ = np.linalg.qr(np.hstack([good, np.eye(rows)]))
        u = u.copy()
        u[:, zero] = q[:, good.shape[1]:good.shape[1] + int(zero.sum())]
    return u, s, v


def singular_values(ms):
    """Descending singular values of one matrix or a (B, m, n) stack."""
    ms = np.asarray(ms, dtype=np.float64)
    single = ms.ndim == 2
    _, s, _ = svd_batch(ms[None] if single else ms)
    r = min(ms.shape[-2], ms.shape[-1])
    s = s[..., :r]
    return s[0] if single else s


def pseudoinverse_batch(ms, tol=DEFAULT_TOL):
    """Moore-Penrose inverse of every matrix in a stack (SVD with relative cutoff)."""
    u, s, v = svd_batch(ms)
    smax = s[:, :1]
    keep = s > tol * smax
    inv = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    return np.einsum("bij,bj,bkj->bik", v, inv, u)


def pseudoinverse(m, tol=DEFAULT_TOL):
    """Moore-Penrose inverse; singular values below ``tol * s_max`` are dropped."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise LinalgError(f"expected a matrix, got shape {m.shape}")
    return pseudoinverse_batch(m[None], tol)[0]


# -- subspaces ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Subspace:
    """Linear subspace of ``R^ambient`` given by basis columns.

    Numeric mode: orthonormal float columns. Exact mode: linearly
    independent rational columns (object dtype).
    """

    ambient: int
    basis: np.ndarray
    tol: float = DEFAULT_TOL
    exact: bool = False

    def __post_init__(self):
        b = self.basis
        if b.ndim != 2 or b.shape[0] != self.ambient:
            raise LinalgError(f"basis shape {b.shape} does not match ambient {self.ambient}")
        if b.shape[1] > self.ambient:
            raise LinalgError("more basis vectors than the ambient dimension")

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def zero(cls, ambient, tol=DEFAULT_TOL, exact=False):
        return cls(ambient, np.zeros((ambient, 0), dtype=object if exact else float), tol, exact)

    @classmethod
    def full(cls, ambient, tol=DEFAULT_TOL, exact=False):
        if exact:
            return cls(ambient, _exact_identity(ambient), tol, True)
        return cls(ambient, np.eye(ambient), tol, False)

    @classmethod
    def span(cls, vectors, tol=DEFAULT_TOL):
        """Orthonormalised span of the columns of ``vectors``."""
        vectors = np.asarray(vectors, dtype=float)
        return image(vectors, tol) if vectors.shape[1] else cls.zero(vectors.shape[0], tol)

    def orthonormal(self) -> np.ndarray:
        """Float orthonormal basis (converts exact bases)."""
        if not self.exact:
            return self.basis
        if self.dim == 0:
            return np.zeros((self.ambient, 0))
        q, _ = np.linalg.qr(self.basis.astype(float))
        return q

    def canonical(self) -> "Subspace":
        """Same subspace with each basis column's largest entry made positive."""
        if self.dim == 0:
            return self
        b = self.basis.copy()
        for j in range(b.shape[1]):
            col = b[:, j]
            i = int(np.argmax([abs(float(c)) for c in col]))
            if col[i] < 0:
                b[:, j] = -col
        return Subspace(self.ambient, b, self.tol, self.exact)

    def projector(self):
        q = self.orthonormal()
        return q @ q.T

    def distance(self, vector) -> float:
        """Euclidean distance from ``vector`` to the subspace."""
        x = np.asarray(vector, dtype=float)
        q = self.orthonormal()
        return float(np.linalg.norm(x - q @ (q.T @ x)))

    def contains(self, other: "Subspace", angle=EQUAL_ANGLE) -> bool:
        """True when every principal angle from ``other`` into ``self`` is below ``angle``."""
        _same_ambient(self, other)
        if other.dim == 0:
            return True
        if other.dim > self.dim:
            return False
        q1, q2 = self.orthonormal(), other.orthonormal()
        resid = q2 - q1 @ (q1.T @ q2)
        return float(np.linalg.norm(resid, 2)) < np.sin(angle)

    def equals(self, other: "Subspace", angle=EQUAL_ANGLE) -> bool:
        return self.dim == other.dim and self.contains(other, angle) and other.contains(self, angle)

    def __repr__(self):
        mode = "exact" if self.exact else "numeric"
        return f"Subspace(dim={self.dim}, ambient={self.ambient}, {mode})"


def _same_ambient(s1, s2):
    if s1.ambient != s2.ambient:
        raise LinalgError(f"ambient dimension mismatch: {s1.ambient} vs {s2.ambient}")


def principal_angles(s1: Subspace, s2: Subspace) -> np.ndarray:
    """Principal angles (ascending) between two subspaces, accurate for small angles."""
    _same_ambient(s1, s2)
    q1, q2 = s1.orthonormal(), s2.orthonormal()
    if q1.shape[1] == 0 or q2.shape[1] == 0:
        return np.zeros(0)
    if q1.shape[1] < q2.shape[1]:
        q1, q2 = q2, q1
    cos = np.clip(singular_values(q1.T @ q2), 0.0, 1.0)
    sin = np.sort(np.clip(singular_values(q2 - q1 @ (q1.T @ q2)), 0.0, 1.0))
    return np.where(cos > np.sqrt(0.5), np.arcsin(sin), np.arccos(cos))


def _is_exact(m) -> bool:
    return isinstance(m, np.ndarray) and m.dtype == object


def image(m, tol=DEFAULT_TOL) -> Subspace:
    """Column space; left singular vectors with ``s > tol * s_max``.

    Object-dtype (rational) input gets the exact column space instead.
    """
    if _is_exact(m):
        return exact_image(m)
    m = np.asarray(m, dtype=float)
    u, s, _ = svd_batch(m[None])
    u, s = u[0], s[0]
    if s.size == 0 or s[0] == 0.0:
        return Subspace.zero(m.shape[0], tol)
    keep = s > tol * s[0]
    return Subspace(m.shape[0], u[:, keep], tol)


def kernel(m, tol=DEFAULT_TOL) -> Subspace:
    """Null space; right singular vectors with ``s <= tol * s_max``."""
    if _is_exact(m):
        return exact_kernel(m)
    m = np.asarray(m, dtype=float)
    _, s, v = svd_batch(m[None])
    s, v = s[0], v[0]
    if s.size == 0 or s[0] == 0.0:
        return Subspace.full(m.shape[1], tol)
    drop = s <= tol * s[0]
    return Subspace(m.shape[1], v[:, drop], tol)


def intersect(s1: Subspace, s2: Subspace) -> Subspace:
    """Intersection of two subspaces.

    Numeric: principal vectors whose cosine is at least ``1 - tol``.
    Exact: solve ``B1 a = B2 b`` by exact elimination.
    """
    _same_ambient(s1, s2)
    if s1.exact and s2.exact:
        return exact_intersect(s1, s2)
    tol = max(s1.tol, s2.tol)
    q1, q2 = s1.orthonormal(), s2.orthonormal()
    if q1.shape[1] == 0 or q2.shape[1] == 0:
        return Subspace.zero(s1.ambient, tol)
    u, cos, _ = svd(q1.T @ q2)
    keep = cos >= 1.0 - tol
    basis = q1 @ u[:, keep]
    if basis.shape[1]:
        # re-orthonormalise to keep rounding from accumulating across folds
        basis, _ = np.linalg.qr(basis)
    return Subspace(s1.ambient, basis, tol)


# -- exact linear algebra -------------------------------------------------------------

def _exact_identity(n):
    return np.eye(n, dtype=int).astype(object)


def to_exact(m) -> np.ndarray:
    """Object array of ints/Fractions from ints, Fractions or ``"p/q"`` strings."""
    from .symbols import as_rational

    a = np.asarray(m, dtype=object)
    return np.vectorize(as_rational, otypes=[object])(a) if a.size else a.reshape(a.shape)


def _integer_rows(m):
    rows = []
    for row in m:
        den = 1
        for c in row:
            if isinstance(c, Fraction):
                den = lcm(den, c.denominator)
        rows.append([int(c * den) for c in row])
    return rows


def bareiss_echelon(rows: list[list[int]]):
    """Fraction-free row echelon form of an integer matrix.

    Returns ``(echelon_rows, pivot_columns)``. All intermediate values are
    integers (each division is exact by Sylvester's identity).
    """
    a = [list(r) for r in rows]
    nrows = len(a)
    ncols = len(a[0]) if nrows else 0
    pivots = []
    prev = 1
    r = 0
    for c in range(ncols):
        if r >= nrows:
            break
        p = next((i for i in range(r, nrows) if a[i][c] != 0), None)
        if p is None:
            continue
        a[r], a[p] = a[p], a[r]
        piv = a[r][c]
        for i in range(r + 1, nrows):
            for j in range(c + 1, ncols):
                a[i][j] = (piv * a[i][j] - a[i][c] * a[r][j]) // prev
            a[i][c] = 0
        # columns left of c in rows below are already zero
        prev = piv
        pivots.append(c)
        r += 1
    return a, pivots


def exact_rank(m) -> int:
    m = to_exact(m) if not _is_exact(m) else m
    if m.size == 0:
        return 0
    return len(bareiss_echelon(_integer_rows(m))[1])


def exact_kernel(m) -> Subspace:
    """Exact null space with one basis vector per free column."""
    m = to_exact(m) if not _is_exact(m) else m
    ncols = m.shape[1]
    if m.shape[0] == 0:
        return Subspace.full(ncols, exact=True)
    ech, pivots = bareiss_echelon(_integer_rows(m))
    free = [c for c in range(ncols) if c not in pivots]
    basis = np.zeros((ncols, len(free)), dtype=object)
    basis[:, :] = 0
    for t, f in enumerate(free):
        x = [Fraction(0)] * ncols
        x[f] = Fraction(1)
        for r in range(len(pivots) - 1, -1, -1):
            c = pivots[r]
            acc = sum((ech[r][j] * x[j] for j in range(c + 1, ncols)), Fraction(0))
            x[c] = -acc / ech[r][c]
        for i in range(ncols):
            v = x[i]
            basis[i, t] = v.numerator if v.denominator == 1 else v
    return Subspace(ncols, basis, exact=True)


def exact_image(m) -> Subspace:
    """Exact column space spanned by the pivot columns of ``m``."""
    m = to_exact(m) if not _is_exact(m) else m
    if m.shape[0] == 0 or m.shape[1] == 0:
        return Subspace.zero(m.shape[0], exact=True)
    _, pivots = bareiss_echelon(_integer_rows(m))
    return Subspace(m.shape[0], m[:, pivots].copy(), exact=True)


def exact_intersect(s1: Subspace, s2: Subspace) -> Subspace:
    _same_ambient(s1, s2)
    if s1.dim == 0 or s2.dim == 0:
        return Subspace.zero(s1.ambient, exact=True)
    stacked = np.hstack([s1.basis, -s2.basis]).astype(object)
    ker = exact_kernel(stacked)
    if ker.dim == 0:
        return Subspace.zero(s1.ambient, exact=True)
    vecs = s1.basis.dot(ker.basis[: s1.dim, :])
    return exact_image(vecs)


def exact_contains_vector(s: Subspace, vector) -> bool:
    """Exact membership test for a rational vector."""
    v = to_exact(np.asarray(vector, dtype=object).reshape(-1, 1))
    if s.dim == 0:
        return all(c == 0 for c in v.ravel())
    return exact_rank(np.hstack([s.basis, v])) == s.dim
