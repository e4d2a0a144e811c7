"""Deciders for ellipticity, cancellation, cocancellation and weak cancellation.

"For every xi != 0" cannot be checked by sampling alone, so every verdict
is one of ``yes``, ``no`` or ``evidence`` and carries a ``certified`` flag.
Certificates come from exact rational arithmetic:

* not elliptic: a rational direction where the symbol has exact rank < dim V;
* cancelling / cocancelling: finitely many rational directions whose exact
  images (kernels) already intersect in ``{0}``;
* not cocancelling: a rational vector ``e`` with ``L(xi) e == 0`` as a
  polynomial identity;
* not cancelling: the same identity for the compatibility operator of ``A``
  (needs ellipticity, which is only ever numerical).

Operators are passed as :class:`~cancelling.symbols.SymbolOperator` or as a
:class:`~cancelling.symbols.PolyMatrix` symbol; both expose ``n``,
``rows``, ``cols``, ``numeric`` and ``evaluate``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import linalg
from .linalg import DEFAULT_TOL, Subspace
from .sphere import sphere_area, sphere_points, sphere_quadrature
from .symbols import PolyMatrix, Polynomial, SymbolOperator, poly_det_adjugate, symbol_gram

YES, NO, EVIDENCE = "yes", "no", "numerical-evidence"
STABILIZATION_WINDOW = 16
EXACT_DIRECTIONS = 16


class PreconditionError(ValueError):
    """An analyzer was called on an operator outside its domain."""


class NotEllipticError(PreconditionError):
    pass


class NotApplicableError(PreconditionError):
    pass


@dataclass(frozen=True)
class SphereSampling:
    """How the unit sphere is discretised.

    ``count=None`` means ``max(1024, 64 n^2)``.
    """

    count: int | None = None
    scheme: str = "auto"
    refine_starts: int = 8
    refine_iters: int = 200
    seed: int = 0

    def resolve(self, n: int) -> int:
        count = self.count if self.count is not None else max(1024, 64 * n * n)
        if count < 2 * n:
            raise ValueError(f"sample count {count} below 2n = {2 * n}")
        return count

    def points(self, n: int) -> np.ndarray:
        return sphere_points(n, self.resolve(n), self.scheme, self.seed)


@dataclass
class Verdict:
    value: str
    certified: bool = False
    note: str = ""

    def to_dict(self):
        return {"value": self.value, "certified": self.certified, "note": self.note}


@dataclass
class EllipticityResult:
    verdict: Verdict
    min_singular_value: float
    argmin: np.ndarray
    constant: float
    max_singular_value: float
    witness: tuple | None = None
    samples: int = 0


@dataclass
class IntersectionResult:
    verdict: Verdict
    subspace: Subspace
    exact_subspace: Subspace | None = None
    trace: list = field(default_factory=list)
    samples_used: int = 0
    rounds_stable: int = 0
    ambiguous: bool = False


@dataclass
class WeakCancellationResult:
    verdict: Verdict
    integrals: np.ndarray
    scale: float
    order: int


# -- helpers ------------------------------------------------------------------------

def _dims(op):
    return op.rows, op.cols


def _min_sigma(op, xi):
    """Smallest of the ``dim V`` singular values of ``A(xi)`` for each row of ``xi``."""
    _, s, _ = linalg.svd_batch(op.numeric(xi))
    return s[:, -1], s[:, 0]


def _exact_directions(n, count, seed):
    rng = np.random.default_rng(seed + 7919)
    count = min(count, 9 ** n - 1)
    out = []
    while len(out) < count:
        v = tuple(int(x) for x in rng.integers(-4, 5, size=n))
        if any(v) and v not in out:
            out.append(v)
    return out


def _rational_candidates(x, max_den=(1, 2, 3, 4, 6, 8, 12, 16, 100, 1000)):
    x = np.asarray(x, dtype=float)
    x = x / np.abs(x).max()
    seen = []
    for d in max_den:
        cand = tuple(Fraction(float(c)).limit_denominator(d) for c in x)
        if any(cand) and cand not in seen:
            seen.append(cand)
    return seen


def _poly_identity_kills(op, e) -> bool:
    """``A(xi) e == 0`` for all xi, checked on the exact symbol."""
    sym = op.symbol if isinstance(op, SymbolOperator) else op
    zero = Polynomial.zero(sym.n)
    for row in sym.entries:
        acc = zero
        for p, c in zip(row, e):
            if c:
                acc = acc + p * c
        if not acc.is_zero():
            return False
    return True


def _refine(op, start, iters, scale):
    """Projected gradient descent of ``sigma_min`` on the sphere, step halving."""
    n = op.n
    x = start / np.linalg.norm(start)
    fx = _min_sigma(op, x[None])[0][0]
    step = 0.25
    h = 1e-6
    eye = np.eye(n)
    for _ in range(iters):
        probes = np.vstack([x + h * eye, x - h * eye])
        probes /= np.linalg.norm(probes, axis=1, keepdims=True)
        fp = _min_sigma(op, probes)[0]
        g = (fp[:n] - fp[n:]) / (2.0 * h)
        g -= (g @ x) * x
        gn = np.linalg.norm(g)
        if gn <= 1e-14 * max(scale, 1e-300):
            break
        trial = x - step * g / gn
        trial /= np.linalg.norm(trial)
        ft = _min_sigma(op, trial[None])[0][0]
        if ft < fx:
            x, fx = trial, ft
        else:
            step *= 0.5
            if step < 1e-12:
                break
    return x, fx


# -- ellipticity ------------------------------------------------------------------------

def check_ellipticity(op, sampling: SphereSampling | None = None, tol=DEFAULT_TOL) -> EllipticityResult:
    """Minimise ``sigma_min(A(xi))`` over the unit sphere.

    The constant ``C = 1 / min sigma`` is the best constant in
    ``|xi|^k |v| <= C |A(xi) v|``. Thresholds are relative to the largest
    singular value seen, so rescaling the operator never flips a verdict.
    """
    sampling = sampling or SphereSampling()
    pts = sampling.points(op.n)
    smin, smax = _min_sigma(op, pts)
    scale = float(smax.max())
    if scale == 0.0:
        raise PreconditionError("symbol vanishes on every sampled direction")

    best = np.argsort(smin, kind="stable")
    starts = []
    for i in best:
        if len(starts) >= sampling.refine_starts:
            break
        if all(abs(abs(pts[i] @ pts[j]) - 1.0) > 1e-9 for j in starts):
            starts.append(i)
    argmin = pts[best[0]]
    value = float(smin[best[0]])
    if op.n > 1:
        for i in starts:
            x, f = _refine(op, pts[i], sampling.refine_iters, scale)
            if f < value:
                argmin, value = x, float(f)

    witness = None
    if value > 100.0 * tol * scale:
        verdict = Verdict(YES, False, "sphere minimum well above rank tolerance")
    else:
        for cand in _rational_candidates(argmin):
            if linalg.exact_rank(_exact_symbol(op, cand)) < op.cols:
                witness = tuple(cand)
                break
        if witness is not None:
            verdict = Verdict(NO, True, f"exact rank drop at xi = {_fmt_vec(witness)}")
        else:
            verdict = Verdict(EVIDENCE, False, "sphere minimum near rank tolerance; no rational witness")
    constant = 1.0 / value if value > 0.0 else math.inf
    return EllipticityResult(verdict, value, argmin, constant, scale, witness, len(pts))


def _exact_symbol(op, xi):
    if isinstance(op, SymbolOperator):
        from .symbols import eval_symbol

        return eval_symbol(op, list(xi))
    return op.evaluate(list(xi))


def _fmt_vec(v):
    return "(" + ", ".join(str(c) for c in v) + ")"


# -- folding intersections --------------------------------------------------------------

def _fold(op, sampling, tol, which):
    pts = sampling.points(op.n)
    mats = op.numeric(pts)
    u, s, v = linalg.svd_batch(mats)
    smax = s[:, :1]
    rel = np.where(smax > 0, s / np.where(smax > 0, smax, 1.0), 0.0)
    ambiguous = bool(np.any((rel > tol / 10.0) & (rel < tol * 10.0)))
    ambient = op.rows if which == "image" else op.cols

    def space(i):
        if smax[i, 0] == 0.0:
            return Subspace.zero(ambient, tol) if which == "image" else Subspace.full(ambient, tol)
        keep = s[i] > tol * smax[i, 0]
        if which == "image":
            return Subspace(ambient, u[i][:, keep], tol)
        return Subspace(ambient, v[i][:, ~keep], tol)

    current = space(0)
    trace = [current.dim]
    stable = 0
    used = 1
    exhausted = op.n == 1
    for i in range(1, len(pts)):
        if current.dim == 0 or stable >= STABILIZATION_WINDOW:
            break
        nxt = linalg.intersect(current, space(i))
        used += 1
        if nxt.dim > current.dim:
            raise AssertionError("intersection dimension increased while folding")
        if nxt.dim == current.dim and nxt.equals(current):
            stable += 1
        else:
            stable = 0
        current = nxt
        trace.append(current.dim)
    settled = current.dim == 0 or stable >= STABILIZATION_WINDOW or exhausted
    return current.canonical(), trace, used, stable, ambiguous, settled


def _exact_fold(op, which, seed):
    ambient = op.rows if which == "image" else op.cols
    current = None
    for xi in _exact_directions(op.n, EXACT_DIRECTIONS, seed):
        m = _exact_symbol(op, xi)
        sp = linalg.exact_image(m) if which == "image" else linalg.exact_kernel(m)
        current = sp if current is None else linalg.exact_intersect(current, sp)
        if current.dim == 0:
            break
    return current if current is not None else Subspace.full(ambient, exact=True)


def _finish(op, which, sampling, tol, certify_op):
    numeric, trace, used, stable, ambiguous, settled = _fold(op, sampling, tol, which)
    exact = _exact_fold(op, which, sampling.seed)
    consistent = exact.contains(numeric)
    if not consistent:
        verdict = Verdict(EVIDENCE, False, "exact cross-check does not contain the numeric intersection")
    elif numeric.dim == 0:
        certified = exact.dim == 0
        note = (
            f"exact intersection over {EXACT_DIRECTIONS} rational directions is {{0}}"
            if certified else "numeric intersection is {0}"
        )
        verdict = Verdict(YES, certified, note)
    else:
        certified = False
        note = f"intersection of dimension {numeric.dim}"
        if certify_op is not None and exact.dim == numeric.dim:
            basis = exact.basis
            if all(_poly_identity_kills(certify_op, basis[:, j]) for j in range(basis.shape[1])):
                certified = True
                note += "; rational basis verified by polynomial identity"
        verdict = Verdict(NO, certified, note)
    if ambiguous and not verdict.certified:
        verdict = Verdict(EVIDENCE, False, verdict.note + "; singular values near the rank threshold")
    if not settled and verdict.value != EVIDENCE and not verdict.certified:
        verdict = Verdict(EVIDENCE, False, verdict.note + "; folding did not stabilise")
    return IntersectionResult(verdict, numeric, exact, trace, used, stable, ambiguous)


def check_cancelling(op, sampling: SphereSampling | None = None, tol=DEFAULT_TOL,
                     ellipticity: EllipticityResult | None = None,
                     compatibility: PolyMatrix | None = None) -> IntersectionResult:
    """Intersect the images ``A(xi)[V]`` over sampled directions.

    Folding stops once the running intersection is unchanged for 16
    consecutive samples. A compatibility operator, when given, is used to
    certify a nonzero intersection (``L(xi) e == 0`` identically).
    """
    sampling = sampling or SphereSampling()
    ellipticity = ellipticity or check_ellipticity(op, sampling, tol)
    if ellipticity.verdict.value == NO:
        raise NotEllipticError("cancellation is only defined here for injectively elliptic operators")
    return _finish(op, "image", sampling, tol, compatibility)


def check_cocancelling(op, sampling: SphereSampling | None = None, tol=DEFAULT_TOL) -> IntersectionResult:
    """Intersect the kernels ``ker L(xi)`` over sampled directions."""
    sampling = sampling or SphereSampling()
    return _finish(op, "kernel", sampling, tol, op)


# -- compatibility operator ----------------------------------------------------------------

def synthesize_compatibility(op: SymbolOperator) -> PolyMatrix:
    """``L(xi) = det(M) id_E - A(xi) adj(M) A(xi)^*`` with ``M = A(xi)^* A(xi)``.

    ``ker L(xi) = A(xi)[V]`` wherever ``A(xi)`` is injective. The order of
    ``L`` is ``2 k dim V``, far from minimal.
    """
    gram = symbol_gram(op)
    det, adj = poly_det_adjugate(gram)
    if det.is_zero():
        raise NotEllipticError("det(A(xi)^* A(xi)) vanishes identically: A is not injectively elliptic")
    a = op.symbol
    return PolyMatrix.identity(op.n, op.dim_e, det) - (a @ adj) @ a.T


# -- weak cancellation ----------------------------------------------------------------------

def check_weak_cancellation(op: SymbolOperator, intersection: Subspace, quadrature_order=64,
                            tol=DEFAULT_TOL, quad_tol=1e-8) -> WeakCancellationResult:
    """Sphere integrals of ``xi^(k-n) (x) A(xi)^+ e`` for ``e`` in the intersection.

    ``A(xi)^{-1} e`` is read as the pseudoinverse applied to ``e``, which is
    the inverse on the image since ``e`` lies in every ``A(xi)[V]``.
    Result shape: ``(dim intersection, n^(k-n) * dim V)``.
    """
    n, k = op.n, op.k
    if k < n:
        raise NotApplicableError(f"weak cancellation needs k >= n (k={k}, n={n})")
    basis = intersection.orthonormal()
    width = n ** (k - n) * op.dim_v
    if basis.shape[1] == 0:
        return WeakCancellationResult(Verdict(YES, True, "intersection is {0}"), np.zeros((0, width)), 0.0, quadrature_order)
    pts, w = sphere_quadrature(n, quadrature_order)
    pinv = linalg.pseudoinverse_batch(op.numeric(pts), tol)
    vals = np.einsum("bve,ed->bdv", pinv, basis)  # (M, d, dim V)
    tens = np.ones((len(pts), 1))
    for _ in range(k - n):
        tens = np.einsum("bi,bj->bij", tens, pts).reshape(len(pts), -1)
    integrand = np.einsum("bt,bdv->bdtv", tens, vals).reshape(len(pts), basis.shape[1], width)
    integrals = np.einsum("b,bdw->dw", w, integrand)
    scale = float(np.einsum("b,bdw->", w, np.abs(integrand)))
    zero = np.abs(integrals).max() <= quad_tol * max(scale, 1.0)
    verdict = Verdict(YES if zero else NO, False,
                      f"max |integral| = {np.abs(integrals).max():.3e} (sphere area {sphere_area(n):.6f})")
    return WeakCancellationResult(verdict, integrals, scale, quadrature_order)
