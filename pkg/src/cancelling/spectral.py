"""Spectral calculus on the periodic unit torus ``[0, 1)^n``.

Fields are arrays of shape ``(components, N, ..., N)``. Grid index ``N/2``
along every axis is the origin of the centred coordinates, so compactly
supported fields live around the middle of the array. Frequencies are the
integers returned by ``numpy.fft.fftfreq(N, 1/N)``.

Multipliers of odd total order vanish on the Nyquist planes so that real
fields stay real.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import fft

from . import linalg
from .linalg import DEFAULT_TOL
from .symbols import SymbolOperator

MEMORY_CAP = 1 << 22  # grid points
CHUNK = 1 << 15  # frequencies per batched symbol evaluation


class GridError(ValueError):
    pass


class IllPosedError(ValueError):
    """Least-squares solve requested for a symbol with a nontrivial kernel."""


@dataclass(frozen=True)
class TorusGrid:
    n: int
    N: int
    memory_cap: int = MEMORY_CAP

    def __post_init__(self):
        if not 1 <= self.n <= 4:
            raise GridError(f"dimension must be 1..4, got {self.n}")
        if self.N < 4 or self.N & (self.N - 1):
            raise GridError(f"N must be a power of two >= 4, got {self.N}")
        if self.N ** self.n > self.memory_cap:
            raise GridError(f"{self.N}^{self.n} points exceed the cap of {self.memory_cap}")

    @property
    def shape(self):
        return (self.N,) * self.n

    @property
    def size(self):
        return self.N ** self.n

    @property
    def h(self):
        return 1.0 / self.N

    @property
    def cell_volume(self):
        return self.h ** self.n

    def axis(self):
        """Centred coordinates along one axis: ``(j - N/2) / N``."""
        return (np.arange(self.N) - self.N // 2) / self.N

    def coords(self):
        """Broadcastable centred coordinate arrays, one per axis."""
        return np.meshgrid(*([self.axis()] * self.n), indexing="ij", sparse=True)

    def radius(self):
        """``|x|`` on the grid."""
        r2 = sum(c * c for c in self.coords())
        return np.sqrt(r2)

    def frequencies(self):
        """Broadcastable integer frequency arrays, one per axis."""
        k = fft.fftfreq(self.N, 1.0 / self.N)
        return np.meshgrid(*([k] * self.n), indexing="ij", sparse=True)

    def frequency_points(self):
        """All frequencies as a (size, n) array in C order."""
        k = fft.fftfreq(self.N, 1.0 / self.N)
        mesh = np.meshgrid(*([k] * self.n), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def nyquist_mask(self):
        """True where any frequency component equals ``-N/2``."""
        mask = np.zeros(self.shape, dtype=bool)
        for f in self.frequencies():
            mask |= f == -self.N // 2
        return mask

    def center_index(self):
        return (self.N // 2,) * self.n


@dataclass
class TorusField:
    grid: TorusGrid
    values: np.ndarray
    space: str = "physical"

    def __post_init__(self):
        if self.values.shape[1:] != self.grid.shape:
            raise GridError(f"values of shape {self.values.shape} do not fit grid {self.grid.shape}")
        if self.space not in ("physical", "frequency"):
            raise GridError(f"unknown space {self.space!r}")

    @property
    def components(self):
        return self.values.shape[0]

    def to_frequency(self) -> "TorusField":
        if self.space == "frequency":
            return self
        axes = tuple(range(1, self.grid.n + 1))
        shifted = np.fft.ifftshift(self.values, axes=axes)
        return TorusField(self.grid, fft.fftn(shifted, axes=axes), "frequency")

    def to_physical(self, real=None) -> "TorusField":
        """Inverse transform; ``real=None`` drops the imaginary part when it is round-off."""
        if self.space == "physical":
            return self
        axes = tuple(range(1, self.grid.n + 1))
        vals = np.fft.fftshift(fft.ifftn(self.values, axes=axes), axes=axes)
        if real is None:
            scale = np.abs(vals).max() if vals.size else 0.0
            real = bool(np.abs(vals.imag).max() <= 1e-10 * max(scale, 1e-300))
        return TorusField(self.grid, vals.real.copy() if real else vals, "physical")

    def is_real_spectrum(self, tol=1e-10) -> bool:
        """Conjugate symmetry ``F(-xi) = conj F(xi)`` away from Nyquist planes."""
        f = self.to_frequency().values
        axes = tuple(range(1, self.grid.n + 1))
        flipped = np.roll(np.flip(f, axis=axes), 1, axis=axes)
        scale = max(np.abs(f).max(), 1e-300)
        return bool(np.abs(f - flipped.conj()).max() <= tol * scale)

    def __add__(self, other):
        return TorusField(self.grid, self.physical_values() + other.physical_values())

    def __mul__(self, c):
        return TorusField(self.grid, self.physical_values() * c)

    __rmul__ = __mul__

    def physical_values(self):
        return self.to_physical().values


def field(grid, values) -> TorusField:
    values = np.asarray(values)
    if values.ndim == grid.n:
        values = values[None]
    return TorusField(grid, values)


# -- multipliers ----------------------------------------------------------------------
#
# Multipliers commute with translations, so physical fields are transformed
# without recentring; real fields use the half spectrum of ``rfftn``.

def operator_order(op) -> int:
    if isinstance(op, SymbolOperator):
        return op.k
    degree = op.degree
    if degree is None:
        return 0
    if not isinstance(degree, int):
        raise GridError("symbol is not homogeneous")
    return degree


def _axes(grid):
    return tuple(range(1, grid.n + 1))


def _forward(values, grid):
    """``(spectrum, real)``; real input gives the half spectrum."""
    if np.isrealobj(values):
        return fft.rfftn(values, axes=_axes(grid)), True
    return fft.fftn(values, axes=_axes(grid)), False


def _backward(hat, grid, real):
    if real:
        return fft.irfftn(hat, s=grid.shape, axes=_axes(grid))
    return fft.ifftn(hat, axes=_axes(grid))


def _freqs(grid, real):
    """Broadcastable frequency arrays matching the spectrum layout."""
    k = fft.fftfreq(grid.N, 1.0 / grid.N)
    axes = [k] * grid.n
    if real:
        axes[-1] = fft.rfftfreq(grid.N, 1.0 / grid.N)
    return np.meshgrid(*axes, indexing="ij", sparse=True)


def _points(freqs):
    full = np.broadcast_arrays(*freqs)
    return np.stack([f.ravel() for f in full], axis=1)


def _nyquist(grid, freqs):
    mask = np.zeros(np.broadcast_shapes(*(f.shape for f in freqs)), dtype=bool)
    for f in freqs:
        mask = mask | (np.abs(f) == grid.N // 2)
    return mask


def _symbol_times(op, hat, freqs, factor):
    """``factor * A(xi) hat(xi)`` summed over monomials and nonzero coefficients."""
    exps, coef = op._numeric_tables
    out = np.zeros((coef.shape[1],) + hat.shape[1:], dtype=complex)
    for alpha, c in zip(exps, coef):
        mono = np.full((1,) * len(freqs), factor, dtype=complex)
        for f, a in zip(freqs, alpha):
            if a:
                mono = mono * f ** int(a)
        for i, j in zip(*np.nonzero(c)):
            out[i] += (c[i, j] * mono) * hat[j]
    return out


def _multiplier(u: TorusField, fn, order):
    """Apply ``fn(hat, freqs)`` in frequency space; Nyquist planes cleared for odd order."""
    grid = u.grid
    if u.space == "frequency":
        freqs = grid.frequencies()
        out = fn(u.values, freqs)
        if order % 2:
            out[:, _nyquist(grid, freqs)] = 0.0
        return TorusField(grid, out, "frequency")
    hat, real = _forward(u.values, grid)
    freqs = _freqs(grid, real)
    out = fn(hat, freqs)
    if order % 2:
        out[:, _nyquist(grid, freqs)] = 0.0
    return TorusField(grid, _backward(out, grid, real))


def apply_operator(op, u: TorusField) -> TorusField:
    """``A(D) u`` through the multiplier ``(2 pi i)^k A(xi)``."""
    if u.components != op.cols:
        raise GridError(f"field has {u.components} components, operator acts on {op.cols}")
    k = operator_order(op)
    factor = (2j * np.pi) ** k
    return _multiplier(u, lambda hat, freqs: _symbol_times(op, hat, freqs, factor), k)


def _pinv(op, points, tol):
    """``pinv(A(xi))`` at each point; zero at ``xi = 0``."""
    u, s, v = linalg.svd_batch(op.numeric(points))
    smax = s[:, :1]
    nonzero = np.any(points != 0, axis=1)
    if np.any(nonzero & (s[:, -1] <= tol * smax[:, 0])):
        raise IllPosedError("symbol has a nontrivial kernel at a nonzero frequency: operator is not elliptic")
    inv = np.where(s > 0, 1.0 / np.where(s > 0, s, 1.0), 0.0)
    p = np.einsum("bij,bj,bkj->bik", v, inv, u)
    p[~nonzero] = 0.0
    return p


def _kernel_projector(op, points, tol):
    _, s, v = linalg.svd_batch(op.numeric(points))
    smax = s[:, :1]
    null = (s <= tol * smax) | (smax == 0.0)
    p = np.einsum("bij,bj,bkj->bik", v, null.astype(float), v)
    p[np.all(points == 0, axis=1)] = 0.0
    return p


def _pointwise(matrix_fn, hats, freqs, out_dim, factor=1.0):
    """Apply per-frequency matrices from ``matrix_fn(points)`` to several spectra, in chunks."""
    pts = _points(freqs)
    shape = hats[0].shape[1:]
    flats = [h.reshape(h.shape[0], -1) for h in hats]
    outs = [np.zeros((out_dim, pts.shape[0]), dtype=complex) for _ in hats]
    for start in range(0, pts.shape[0], CHUNK):
        sl = slice(start, min(start + CHUNK, pts.shape[0]))
        mats = matrix_fn(pts[sl]) * factor
        for flat, out in zip(flats, outs):
            out[:, sl] = np.einsum("bij,jb->ib", mats, flat[:, sl])
    return [o.reshape((out_dim,) + shape) for o in outs]


def solve_least_squares_many(op, fhats, grid: TorusGrid, real=True, tol=DEFAULT_TOL):
    """Spectra ``(2 pi i)^(-k) pinv(A(xi)) F f`` for several right-hand sides.

    ``fhats`` are spectra in the layout of ``rfftn`` (``real=True``) or
    ``fftn``; the zero frequency is dropped.
    """
    if not fhats:
        return []
    k = operator_order(op)
    freqs = _freqs(grid, real)
    outs = _pointwise(lambda pts: _pinv(op, pts, tol), fhats, freqs, op.cols, (2j * np.pi) ** (-k))
    if k % 2:
        mask = _nyquist(grid, freqs)
        for o in outs:
            o[:, mask] = 0.0
    return outs


def solve_least_squares(op, f: TorusField, tol=DEFAULT_TOL) -> TorusField:
    """Least-squares inverse of ``A(D)``; the zero frequency is dropped."""
    if f.components != op.rows:
        raise GridError(f"field has {f.components} components, operator maps into {op.rows}")
    grid = f.grid
    if f.space == "frequency":
        (uh,) = solve_least_squares_many(op, [f.values], grid, False, tol)
        return TorusField(grid, uh, "frequency")
    hat, real = _forward(f.values, grid)
    (uh,) = solve_least_squares_many(op, [hat], grid, real, tol)
    return TorusField(grid, _backward(uh, grid, real))


def project_kernel(op, f: TorusField, tol=DEFAULT_TOL) -> TorusField:
    """Orthogonal projection of ``F f(xi)`` onto ``ker L(xi)`` at every ``xi != 0``."""
    if f.components != op.cols:
        raise GridError(f"field has {f.components} components, operator acts on {op.cols}")

    def fn(hat, freqs):
        (out,) = _pointwise(lambda pts: _kernel_projector(op, pts, tol), [hat], freqs, op.cols)
        return out

    return _multiplier(f, fn, 0)


def derivative(u: TorusField, alpha) -> TorusField:
    """``d^alpha u`` spectrally."""
    def fn(hat, freqs):
        mult = np.ones((1,) * len(freqs), dtype=complex)
        for f, a in zip(freqs, alpha):
            if a:
                mult = mult * (2j * np.pi * f) ** a
        return hat * mult

    return _multiplier(u, fn, sum(alpha))


def filter_field(u: TorusField, multiplier) -> TorusField:
    """Multiply the spectrum by a scalar array given on the full ``fftn`` grid."""
    def fn(hat, freqs):
        m = multiplier if hat.shape[1:] == multiplier.shape else multiplier[..., : hat.shape[-1]]
        return hat * m

    return _multiplier(u, fn, 0)


# -- norms -----------------------------------------------------------------------------

def pointwise_norm(values):
    """Euclidean norm over the component axis."""
    return np.sqrt(np.sum(np.abs(values) ** 2, axis=0))


def lp_norm(u: TorusField, p) -> float:
    mag = pointwise_norm(u.physical_values())
    if p == math.inf:
        return float(mag.max())
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return float((np.sum(mag ** p) * u.grid.cell_volume) ** (1.0 / p))


def spectral_l2_norm(u: TorusField) -> float:
    """``||u||_2`` from the coefficients (Parseval on the unit torus)."""
    f = u.to_frequency().values
    return float(np.sqrt(np.sum(np.abs(f) ** 2)) / u.grid.size)


def _multinomial(alpha):
    out = math.factorial(sum(alpha))
    for a in alpha:
        out //= math.factorial(a)
    return out


def derivative_magnitude(u: TorusField, j: int) -> np.ndarray:
    """``|D^j u|`` with ``|D^j u|^2 = sum_{|alpha|=j} (j!/alpha!) |d^alpha u|^2``."""
    if j == 0:
        return pointwise_norm(u.physical_values())
    grid = u.grid
    hat, real = _forward(u.physical_values(), grid)
    freqs = _freqs(grid, real)
    mask = _nyquist(grid, freqs) if j % 2 else None
    total = np.zeros(grid.shape)
    for alpha in itertools.product(range(j + 1), repeat=grid.n):
        if sum(alpha) != j:
            continue
        mult = np.ones((1,) * grid.n, dtype=complex)
        for f, a in zip(freqs, alpha):
            if a:
                mult = mult * (2j * np.pi * f) ** a
        dh = hat * mult
        if mask is not None:
            dh[:, mask] = 0.0
        d = _backward(dh, grid, real)
        total += _multinomial(alpha) * np.sum(np.abs(d) ** 2, axis=0)
    return np.sqrt(total)


def sobolev_grad_norm(u: TorusField, j: int, p) -> float:
    """``|| D^j u ||_p``."""
    mag = derivative_magnitude(u, j)
    if p == math.inf:
        return float(mag.max())
    return float((np.sum(mag ** p) * u.grid.cell_volume) ** (1.0 / p))


def hardy_norm(u: TorusField, a: float, j: int = 0, center=None):
    """``int |D^j u(x)| / |x - center|^a dx`` without the centre cell.

    Returns ``(value, excluded_bound)`` where the bound is ``|D^j u|`` at the
    centre times the weight integrated over the ball circumscribing the cell.
    """
    grid = u.grid
    center = grid.center_index() if center is None else tuple(center)
    mag = derivative_magnitude(u, j)
    shifts = [(np.arange(grid.N) - c) for c in center]
    shifts = [((s + grid.N // 2) % grid.N - grid.N // 2) / grid.N for s in shifts]
    r2 = sum(np.meshgrid(*[s * s for s in shifts], indexing="ij", sparse=True))
    r = np.sqrt(r2)
    r[center] = 1.0
    w = r ** (-a)
    w[center] = 0.0
    value = float(np.sum(mag * w) * grid.cell_volume)
    if a < grid.n:
        rho = math.sqrt(grid.n) * grid.h / 2.0
        area = 2.0 * math.pi ** (grid.n / 2.0) / math.gamma(grid.n / 2.0)
        bound = float(mag[center]) * area * rho ** (grid.n - a) / (grid.n - a)
    else:
        bound = math.inf
    return value, bound
