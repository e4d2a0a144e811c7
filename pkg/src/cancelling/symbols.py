"""Exact symbols of homogeneous constant-coefficient differential operators.

An operator ``A(D)`` of order ``k`` from ``V = R^dim_v`` to ``E = R^dim_e`` is
stored as one rational ``dim_e x dim_v`` matrix ``A_alpha`` per multiindex
``alpha`` with ``|alpha| = k``, so that ``A(D)u = sum_alpha A_alpha d^alpha u``
and the symbol is ``A(xi) = sum_alpha xi^alpha A_alpha``.

Coefficients are stored in this multiindex form directly. The symmetric
k-tensor form ``Lin_sym^k(R^n, V) -> E`` differs from it by multinomial
weights and is never materialised.

V and E carry the standard basis and the standard inner product, so the
adjoint ``A(xi)^*`` is the transpose.

Polynomials keep their monomials packed into a single Python int (10 bits
per variable), which turns monomial multiplication into integer addition.
Coefficients are exact: ``int`` when integral, ``Fraction`` otherwise.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from numbers import Rational
from typing import Iterable, Mapping, Sequence

import numpy as np

Multiindex = tuple  # tuple[int, ...] of nonnegative exponents

_BITS = 10
_MASK = (1 << _BITS) - 1
_MAX_EXP = _MASK


class SymbolError(ValueError):
    """Malformed operator, polynomial or matrix input."""


# -- rationals ---------------------------------------------------------------

def as_rational(x):
    """Exact rational from int, Fraction or a ``"p/q"`` string.

    Integral values come back as ``int`` so integer arithmetic stays fast.
    Floats are rejected: exactness is the point of this module.
    """
    if isinstance(x, bool):
        raise SymbolError(f"not a rational number: {x!r}")
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else x
    if isinstance(x, Rational):
        return as_rational(Fraction(x.numerator, x.denominator))
    if isinstance(x, str):
        try:
            return as_rational(Fraction(x.strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise SymbolError(f"not a rational number: {x!r}") from exc
    raise SymbolError(f"not an exact rational: {x!r} ({type(x).__name__})")


def _norm(c):
    if type(c) is Fraction and c.denominator == 1:
        return c.numerator
    return c


def is_exact_vector(xi) -> bool:
    """True when every entry is an int or Fraction (not a float)."""
    return all(
        isinstance(x, (int, Fraction, np.integer)) and not isinstance(x, bool)
        for x in xi
    )


# -- multiindices ------------------------------------------------------------

def multiindices(n: int, k: int) -> list[Multiindex]:
    """All ``alpha`` in ``N^n`` with ``|alpha| = k``, in lexicographic order."""
    if n < 1 or k < 0:
        raise SymbolError(f"need n >= 1 and k >= 0, got n={n}, k={k}")
    out = []
    for bars in itertools.combinations(range(k + n - 1), n - 1):
        prev = -1
        alpha = []
        for b in bars:
            alpha.append(b - prev - 1)
            prev = b
        alpha.append(k + n - 2 - prev)
        out.append(tuple(alpha))
    return sorted(out)


def order(alpha: Multiindex) -> int:
    return sum(alpha)


def _pack(alpha) -> int:
    key = 0
    for i, e in enumerate(alpha):
        if e < 0 or e > _MAX_EXP:
            raise SymbolError(f"exponent {e} out of range in {alpha}")
        key |= int(e) << (_BITS * i)
    return key


def _unpack(key: int, n: int) -> Multiindex:
    return tuple((key >> (_BITS * i)) & _MASK for i in range(n))


# -- polynomials ---------------------------------------------------------------

class Polynomial:
    """Multivariate polynomial in ``n`` variables with exact rational coefficients."""

    __slots__ = ("n", "_terms", "_hash")

    def __init__(self, n: int, terms: Mapping | None = None):
        if n < 1:
            raise SymbolError("a polynomial needs at least one variable")
        self.n = n
        packed = {}
        for alpha, c in (terms or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != n:
                raise SymbolError(f"multiindex {alpha} has length != {n}")
            c = as_rational(c)
            if c:
                key = _pack(alpha)
                packed[key] = _norm(packed.get(key, 0) + c)
                if not packed[key]:
                    del packed[key]
        self._terms = packed
        self._hash = None

    @classmethod
    def _from_packed(cls, n, packed):
        p = cls.__new__(cls)
        p.n = n
        p._terms = packed
        p._hash = None
        return p

    @classmethod
    def zero(cls, n):
        return cls._from_packed(n, {})

    @classmethod
    def constant(cls, n, c):
        c = as_rational(c)
        return cls._from_packed(n, {0: c} if c else {})

    @classmethod
    def variable(cls, n, i):
        if not 0 <= i < n:
            raise SymbolError(f"variable index {i} out of range for n={n}")
        return cls._from_packed(n, {1 << (_BITS * i): 1})

    @property
    def terms(self) -> dict:
        """Mapping multiindex -> coefficient, keys in lexicographic order."""
        items = [(_unpack(k, self.n), c) for k, c in self._terms.items()]
        return dict(sorted(items))

    def __len__(self):
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def degrees(self) -> set[int]:
        return {sum(_unpack(k, self.n)) for k in self._terms}

    @property
    def degree(self):
        """Total degree; ``None`` for the zero polynomial."""
        d = self.degrees()
        return max(d) if d else None

    def is_homogeneous(self) -> bool:
        return len(self.degrees()) <= 1

    def _check(self, other):
        if not isinstance(other, Polynomial):
            return Polynomial.constant(self.n, other)
        if other.n != self.n:
            raise SymbolError(f"variable count mismatch: {self.n} vs {other.n}")
        return other

    def __add__(self, other):
        other = self._check(other)
        out = dict(self._terms)
        for k, c in other._terms.items():
            v = _norm(out.get(k, 0) + c)
            if v:
                out[k] = v
            else:
                out.pop(k, None)
        return Polynomial._from_packed(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._from_packed(self.n, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return self._check(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            c = as_rational(other)
            if not c:
                return Polynomial.zero(self.n)
            return Polynomial._from_packed(
                self.n, {k: _norm(v * c) for k, v in self._terms.items()}
            )
        other = self._check(other)
        a, b = self._terms, other._terms
        if len(a) < len(b):
            a, b = b, a
        out = {}
        get = out.get
        for kb, cb in b.items():
            for ka, ca in a.items():
                k = ka + kb
                out[k] = get(k, 0) + ca * cb
        return Polynomial._from_packed(
            self.n, {k: _norm(c) for k, c in out.items() if c}
        )

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.n == other.n and self._terms == other._terms
        try:
            return self == Polynomial.constant(self.n, other)
        except SymbolError:
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.n, frozenset(self._terms.items())))
        return self._hash

    def __call__(self, xi):
        return self.evaluate(xi)

    def evaluate(self, xi):
        """Exact value at a rational point (``int``/``Fraction`` entries)."""
        if len(xi) != self.n:
            raise SymbolError(f"point has length {len(xi)}, expected {self.n}")
        xi = [as_rational(x) for x in xi]
        total = 0
        for key, c in self._terms.items():
            term = c
            for i in range(self.n):
                e = (key >> (_BITS * i)) & _MASK
                if e:
                    term = term * xi[i] ** e
            total += term
        return _norm(Fraction(total)) if isinstance(total, Fraction) else total

    def __repr__(self):
        if not self._terms:
            return "0"
        parts = []
        for alpha, c in self.terms.items():
            mono = "*".join(
                f"x{i + 1}" + (f"^{e}" if e > 1 else "") for i, e in enumerate(alpha) if e
            )
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)


# -- polynomial matrices -------------------------------------------------------

class PolyMatrix:
    """Immutable matrix of polynomials in a common number of variables."""

    __slots__ = ("n", "rows", "cols", "entries", "__dict__")

    def __init__(self, entries: Sequence[Sequence[Polynomial]], n: int | None = None):
        rows = len(entries)
        cols = len(entries[0]) if rows else 0
        if any(len(r) != cols for r in entries):
            raise SymbolError("ragged polynomial matrix")
        if n is None:
            if not rows or not cols:
                raise SymbolError("cannot infer variable count of an empty matrix")
            n = entries[0][0].n
        for r in entries:
            for p in r:
                if not isinstance(p, Polynomial) or p.n != n:
                    raise SymbolError("entries must be Polynomials in the same variables")
        self.n = n
        self.rows = rows
        self.cols = cols
        self.entries = tuple(tuple(r) for r in entries)

    @classmethod
    def zeros(cls, n, rows, cols):
        z = Polynomial.zero(n)
        return cls([[z] * cols for _ in range(rows)], n=n)

    @classmethod
    def identity(cls, n, size, scale=None):
        scale = Polynomial.constant(n, 1) if scale is None else scale
        z = Polynomial.zero(n)
        return cls([[scale if i == j else z for j in range(size)] for i in range(size)], n=n)

    @classmethod
    def from_rational(cls, n, matrix):
        return cls([[Polynomial.constant(n, c) for c in row] for row in matrix], n=n)

    @property
    def shape(self):
        return (self.rows, self.cols)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    @property
    def degree(self):
        """Common homogeneity degree, ``"mixed"``, or ``None`` if all zero.

        Advisory only; no arithmetic relies on it.
        """
        degs = set()
        for r in self.entries:
            for p in r:
                degs |= p.degrees()
        if not degs:
            return None
        return degs.pop() if len(degs) == 1 else "mixed"

    def is_zero(self):
        return all(p.is_zero() for r in self.entries for p in r)

    def transpose(self):
        return PolyMatrix([list(c) for c in zip(*self.entries)], n=self.n) if self.rows else self

    T = property(transpose)

    def _same_shape(self, other):
        if not isinstance(other, PolyMatrix) or other.shape != self.shape or other.n != self.n:
            raise SymbolError("polynomial matrix shape or variable mismatch")

    def __add__(self, other):
        self._same_shape(other)
        return PolyMatrix(
            [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self.entries, other.entries)],
            n=self.n,
        )

    def __sub__(self, other):
        self._same_shape(other)
        return PolyMatrix(
            [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(self.entries, other.entries)],
            n=self.n,
        )

    def scale(self, c):
        """Multiply every entry by a rational or a Polynomial."""
        return PolyMatrix([[p * c for p in r] for r in self.entries], n=self.n)

    def __matmul__(self, other):
        if not isinstance(other, PolyMatrix) or other.n != self.n:
            raise SymbolError("can only multiply polynomial matrices in the same variables")
        if self.cols != other.rows:
            raise SymbolError(f"shape mismatch {self.shape} @ {other.shape}")
        cols = list(zip(*other.entries)) if other.rows else [()] * other.cols
        out = []
        for r in self.entries:
            row = []
            for c in cols:
                acc = Polynomial.zero(self.n)
                for a, b in zip(r, c):
                    if a._terms and b._terms:
                        acc = acc + a * b
                row.append(acc)
            out.append(row)
        return PolyMatrix(out, n=self.n)

    def __eq__(self, other):
        return isinstance(other, PolyMatrix) and self.n == other.n and self.entries == other.entries

    def __hash__(self):
        return hash((self.n, self.entries))

    def evaluate(self, xi) -> np.ndarray:
        """Exact value at a rational point, as an object array of rationals."""
        out = np.empty((self.rows, self.cols), dtype=object)
        for i, r in enumerate(self.entries):
            for j, p in enumerate(r):
                out[i, j] = p.evaluate(xi)
        return out

    @cached_property
    def _numeric_tables(self):
        keys = sorted({k for r in self.entries for p in r for k in p._terms})
        index = {k: t for t, k in enumerate(keys)}
        exps = np.array([_unpack(k, self.n) for k in keys], dtype=np.int64).reshape(-1, self.n)
        coef = np.zeros((len(keys), self.rows, self.cols))
        for i, r in enumerate(self.entries):
            for j, p in enumerate(r):
                for k, c in p._terms.items():
                    coef[index[k], i, j] = float(c)
        return exps, coef

    def numeric(self, xi) -> np.ndarray:
        """Float evaluation; ``xi`` of shape (n,) or (B, n) gives (r, c) or (B, r, c)."""
        xi = np.asarray(xi, dtype=np.float64)
        single = xi.ndim == 1
        xi = np.atleast_2d(xi)
        if xi.shape[1] != self.n:
            raise SymbolError(f"points have dimension {xi.shape[1]}, expected {self.n}")
        exps, coef = self._numeric_tables
        if len(exps) == 0:
            out = np.zeros((xi.shape[0], self.rows, self.cols))
        else:
            mono = np.prod(xi[:, None, :] ** exps[None, :, :], axis=2)
            out = np.einsum("bt,tij->bij", mono, coef)
        return out[0] if single else out

    def __repr__(self):
        return f"PolyMatrix({self.rows}x{self.cols}, n={self.n}, degree={self.degree})"


# -- operators -----------------------------------------------------------------

@dataclass(frozen=True)
class SymbolOperator:
    """Homogeneous operator ``A(D) = sum_{|alpha|=k} A_alpha d^alpha``.

    ``coeffs`` maps each multiindex to a ``dim_e x dim_v`` tuple-of-tuples
    of exact rationals; keys are kept in lexicographic order and multiindices
    with all-zero matrices are dropped.
    """

    n: int
    k: int
    dim_v: int
    dim_e: int
    coeffs: Mapping[Multiindex, tuple]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.n < 1 or self.dim_v < 1 or self.dim_e < 1:
            raise SymbolError(
                f"need n, dim_v, dim_e >= 1 (got n={self.n}, dim_v={self.dim_v}, dim_e={self.dim_e})"
            )
        if self.k < 1:
            raise SymbolError(f"operator order must be >= 1, got k={self.k}")
        clean = {}
        for alpha, mat in self.coeffs.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.n or any(a < 0 for a in alpha):
                raise SymbolError(f"bad multiindex {alpha} for n={self.n}")
            if sum(alpha) != self.k:
                raise SymbolError(f"multiindex {alpha} has order {sum(alpha)} != k={self.k}")
            rows = tuple(tuple(as_rational(c) for c in row) for row in mat)
            if len(rows) != self.dim_e or any(len(r) != self.dim_v for r in rows):
                raise SymbolError(
                    f"coefficient for {alpha} is not {self.dim_e}x{self.dim_v}"
                )
            if any(c for r in rows for c in r):
                if alpha in clean:
                    raise SymbolError(f"duplicate multiindex {alpha}")
                clean[alpha] = rows
        if not clean:
            raise SymbolError("operator has no nonzero coefficient")
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))

    @classmethod
    def from_entries(cls, n, k, dim_v, dim_e, entries: Iterable, name=""):
        """Build from ``(alpha, row, col, value)`` quadruples; repeated cells add up."""
        acc = {}
        for alpha, i, j, c in entries:
            alpha = tuple(alpha)
            if not (0 <= i < dim_e and 0 <= j < dim_v):
                raise SymbolError(f"entry ({i}, {j}) outside {dim_e}x{dim_v}")
            mat = acc.setdefault(alpha, [[0] * dim_v for _ in range(dim_e)])
            mat[i][j] = _norm(mat[i][j] + as_rational(c))
        return cls(n, k, dim_v, dim_e, acc, name=name)

    @classmethod
    def from_polymatrix(cls, m: PolyMatrix, name=""):
        """Inverse of :meth:`symbol` for a homogeneous, nonzero polynomial matrix."""
        deg = m.degree
        if deg is None:
            raise SymbolError("zero symbol does not define an operator")
        if deg == "mixed":
            raise SymbolError("symbol entries are not homogeneous of one degree")
        entries = []
        for i, row in enumerate(m.entries):
            for j, p in enumerate(row):
                for alpha, c in p.terms.items():
                    entries.append((alpha, i, j, c))
        return cls.from_entries(m.n, deg, m.cols, m.rows, entries, name=name)

    def entries(self):
        """Nonzero ``(alpha, row, col, value)`` quadruples in canonical order."""
        for alpha, mat in self.coeffs.items():
            for i, row in enumerate(mat):
                for j, c in enumerate(row):
                    if c:
                        yield alpha, i, j, c

    def scaled(self, c):
        c = as_rational(c)
        if not c:
            raise SymbolError("scaling by zero")
        return SymbolOperator(
            self.n, self.k, self.dim_v, self.dim_e,
            {a: tuple(tuple(_norm(x * c) for x in r) for r in m) for a, m in self.coeffs.items()},
            name=self.name,
        )

    @cached_property
    def symbol(self) -> PolyMatrix:
        cells = [[{} for _ in range(self.dim_v)] for _ in range(self.dim_e)]
        for alpha, i, j, c in self.entries():
            cells[i][j][alpha] = c
        return PolyMatrix([[Polynomial(self.n, t) for t in r] for r in cells], n=self.n)

    @cached_property
    def _numeric_tables(self):
        alphas = list(self.coeffs)
        exps = np.array(alphas, dtype=np.int64).reshape(-1, self.n)
        coef = np.array(
            [[[float(c) for c in r] for r in self.coeffs[a]] for a in alphas], dtype=np.float64
        )
        return exps, coef

    def numeric(self, xi) -> np.ndarray:
        """Float symbol; ``xi`` of shape (n,) or (B, n)."""
        xi = np.asarray(xi, dtype=np.float64)
        single = xi.ndim == 1
        xi = np.atleast_2d(xi)
        if xi.shape[-1] != self.n:
            raise SymbolError(f"frequency has dimension {xi.shape[-1]}, expected n={self.n}")
        exps, coef = self._numeric_tables
        mono = np.prod(xi[:, None, :] ** exps[None, :, :], axis=2)
        out = np.einsum("bt,tij->bij", mono, coef)
        return out[0] if single else out

    def evaluate(self, xi):
        return eval_symbol(self, xi)

    @property
    def rows(self):
        return self.dim_e

    @property
    def cols(self):
        return self.dim_v


def eval_symbol(op, xi):
    """Evaluate ``A(xi) = sum_alpha xi^alpha A_alpha``.

    Rational input (ints / Fractions) returns an exact object array;
    anything else returns a float array. Works for :class:`SymbolOperator`
    and :class:`PolyMatrix` alike.
    """
    if len(xi) != op.n:
        raise SymbolError(f"frequency has length {len(xi)}, expected n={op.n}")
    if is_exact_vector(xi):
        if isinstance(op, SymbolOperator):
            out = np.zeros((op.dim_e, op.dim_v), dtype=object)
            xi = [as_rational(x) for x in xi]
            for alpha, mat in op.coeffs.items():
                mono = 1
                for x, a in zip(xi, alpha):
                    if a:
                        mono = mono * x ** a
                if mono:
                    out += np.array(mat, dtype=object) * mono
            return np.vectorize(_norm, otypes=[object])(out) if out.size else out
        return op.evaluate(xi)
    return op.numeric(np.asarray(xi, dtype=np.float64))


def symbol_gram(op: SymbolOperator) -> PolyMatrix:
    """The ``dim_v x dim_v`` polynomial matrix ``A(xi)^* A(xi)``."""
    s = op.symbol
    return s.T @ s


# -- determinant and adjugate ------------------------------------------------------

def _charpoly(m: PolyMatrix) -> list[Polynomial]:
    """Coefficients ``[1, c1, ..., cn]`` of ``det(t I - M)`` (Berkowitz, division free)."""
    n = m.n
    e = m.entries
    one = Polynomial.constant(n, 1)
    zero = Polynomial.zero(n)
    v = [one]
    for r in range(m.rows):
        a = e[r][r]
        row = [e[r][j] for j in range(r)]
        col = [e[i][r] for i in range(r)]
        t = [one, -a]
        vec = col
        for _ in range(r):
            t.append(-sum((x * y for x, y in zip(row, vec) if x._terms and y._terms), zero))
            vec = [
                sum((e[i][j] * vec[j] for j in range(r) if e[i][j]._terms and vec[j]._terms), zero)
                for i in range(r)
            ]
        new = []
        for i in range(r + 2):
            acc = zero
            for j in range(max(0, i - len(t) + 1), min(i, r) + 1):
                if t[i - j]._terms and v[j]._terms:
                    acc = acc + t[i - j] * v[j]
            new.append(acc)
        v = new
    return v


def _square(m):
    if not isinstance(m, PolyMatrix):
        raise SymbolError("expected a PolyMatrix")
    if m.rows != m.cols or m.rows == 0:
        raise SymbolError(f"matrix must be square and nonempty, got {m.shape}")


def poly_det(m: PolyMatrix) -> Polynomial:
    """Exact determinant via the division-free Berkowitz recursion."""
    _square(m)
    c = _charpoly(m)
    return c[-1] if m.rows % 2 == 0 else -c[-1]


def poly_det_adjugate(m: PolyMatrix) -> tuple[Polynomial, PolyMatrix]:
    """Determinant and adjugate together (one characteristic polynomial).

    Cayley-Hamilton gives ``adj(M) = (-1)^(s-1) (M^(s-1) + c1 M^(s-2) + ... + c_(s-1) I)``
    for an ``s x s`` matrix; evaluated by Horner, so only ring operations occur.
    """
    _square(m)
    s = m.rows
    c = _charpoly(m)
    det = c[-1] if s % 2 == 0 else -c[-1]
    acc = PolyMatrix.identity(m.n, s)
    for i in range(1, s):
        acc = (acc @ m) + PolyMatrix.identity(m.n, s, c[i])
    if s % 2 == 0:
        acc = acc.scale(-1)
    return det, acc


def poly_adjugate(m: PolyMatrix) -> PolyMatrix:
    return poly_det_adjugate(m)[1]


def cofactor_det(m: PolyMatrix) -> Polynomial:
    """Laplace expansion along the first row; a slow independent check."""
    _square(m)
    e = m.entries
    s = m.rows
    if s == 1:
        return e[0][0]
    total = Polynomial.zero(m.n)
    for j in range(s):
        if e[0][j].is_zero():
            continue
        minor = PolyMatrix([[e[i][c] for c in range(s) if c != j] for i in range(1, s)], n=m.n)
        term = e[0][j] * cofactor_det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total
