"""Inequality experiments on the torus: ratio ladders and their diagnoses.

Every scan returns a :class:`Scan` whose ``rows`` are flat dicts ready for
CSV output and whose ``summary`` holds the headline numbers.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import analyzers, spectral
from .catalog import curl
from .linalg import DEFAULT_TOL, Subspace
from .spectral import TorusField, TorusGrid
from .symbols import SymbolOperator

BLOW_UP, BOUNDED, INCONCLUSIVE = "BLOW-UP", "BOUNDED", "INCONCLUSIVE"
DEFAULT_N = {1: 1024, 2: 256, 3: 128, 4: 32}
SMALL_N = {1: 64, 2: 32, 3: 16, 4: 8}


def ladder(first: int, last: int) -> tuple:
    """``(2^-first, ..., 2^-last)``."""
    if last <= first:
        raise ValueError(f"ladder exponents must increase, got {first}:{last}")
    return tuple(2.0 ** -j for j in range(first, last + 1))


@dataclass(frozen=True)
class ExperimentConfig:
    N: int | None = None
    eps_ladder: tuple = ladder(2, 7)
    cutoff_inner: float = 0.2
    cutoff_outer: float = 0.25
    trials: int = 3
    seed: int = 0
    band: int = 4
    delta_width: float = 2.0  # std of the point-mass surrogate, in grid cells
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        eps = self.eps_ladder
        if len(eps) < 2 or any(a <= b for a, b in zip(eps, eps[1:])) or eps[-1] <= 0:
            raise ValueError("eps ladder must be positive and strictly decreasing")
        if not 0 < self.cutoff_inner < self.cutoff_outer < 0.5:
            raise ValueError("cutoff radii must satisfy 0 < inner < outer < 1/2")
        if self.trials < 1 or self.band < 1:
            raise ValueError("trials and band must be positive")

    def grid(self, n, small=False) -> TorusGrid:
        N = self.N or (SMALL_N if small else DEFAULT_N)[n]
        return TorusGrid(n, N)

    def rng(self, salt=0):
        return np.random.default_rng([self.seed, salt])


@dataclass
class Scan:
    kind: str
    operator: str
    rows: list = field(default_factory=list)
    ladder: list = field(default_factory=list)  # (scale, ratio) pairs of the envelope
    diagnosis: str = ""
    summary: dict = field(default_factory=dict)


def diagnose(ratios) -> str:
    """``BLOW-UP``: last/first > 2 with >= 80% increasing steps; ``BOUNDED``: max/min < 3."""
    r = np.asarray(ratios, dtype=float)
    if len(r) < 2 or not np.all(np.isfinite(r)) or np.any(r <= 0):
        return INCONCLUSIVE
    steps = np.diff(r)
    if r[-1] / r[0] > 2.0 and np.mean(steps > 0) >= 0.8:
        return BLOW_UP
    if r.max() / r.min() < 3.0:
        return BOUNDED
    return INCONCLUSIVE


# -- building blocks ----------------------------------------------------------------------

@functools.lru_cache(maxsize=4)
def smoothstep_cutoff(grid: TorusGrid, inner, outer) -> np.ndarray:
    """1 inside ``inner``, 0 outside ``outer``, quintic in between."""
    r = grid.radius()
    t = np.clip((r - inner) / (outer - inner), 0.0, 1.0)
    chi = 1.0 - t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)
    chi.flags.writeable = False
    return chi


def gaussian_bump(grid: TorusGrid, sigma) -> np.ndarray:
    """Unit-mass Gaussian at the origin, truncated at ``4 sigma``."""
    r = grid.radius()
    g = np.exp(-0.5 * (r / sigma) ** 2)
    g[r > min(4.0 * sigma, 0.5)] = 0.0
    return g / (g.sum() * grid.cell_volume)


@functools.lru_cache(maxsize=16)
def mollifier_multiplier(grid: TorusGrid, eps) -> np.ndarray:
    """Spectrum of the truncated Gaussian mollifier of standard deviation ``eps``."""
    kernel = gaussian_bump(grid, eps) * grid.cell_volume
    mult = np.fft.fftn(np.fft.ifftshift(kernel)).real
    mult.flags.writeable = False
    return mult


def band_limited(grid: TorusGrid, components, band, rng, zero_mean=True) -> TorusField:
    """Real random trigonometric polynomial with frequencies ``|xi|_inf <= band``.

    The coefficients depend only on ``rng`` and ``band``, so the same
    continuous field is sampled on every grid.
    """
    if band >= grid.N // 2:
        raise ValueError(f"band {band} must be below N/2 = {grid.N // 2}")
    width = 2 * band + 1
    shape = (components,) + (width,) * grid.n
    coef = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    coef = coef + np.conj(np.flip(coef, axis=tuple(range(1, grid.n + 1))))
    if zero_mean:
        coef[(slice(None),) + (band,) * grid.n] = 0.0
    spec = np.zeros((components,) + grid.shape, dtype=complex)
    idx = np.r_[0:band + 1, grid.N - band:grid.N]
    src = np.r_[band:2 * band + 1, 0:band]
    spec[np.ix_(range(components), *([idx] * grid.n))] = coef[np.ix_(range(components), *([src] * grid.n))]
    vals = np.fft.ifftn(spec, axes=tuple(range(1, grid.n + 1))) * grid.size
    vals = np.fft.fftshift(vals, axes=tuple(range(1, grid.n + 1))).real
    return TorusField(grid, vals / np.sqrt(components * width ** grid.n))


def random_unit_vectors(dim, count, rng):
    v = rng.standard_normal((count, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _inner(f: TorusField, g: TorusField) -> float:
    return float(np.sum(f.physical_values() * g.physical_values()) * f.grid.cell_volume)


def boundary_ratio(u: TorusField) -> float:
    """Largest magnitude within ``0.05`` of the period boundary over the peak."""
    grid = u.grid
    mag = spectral.pointwise_norm(u.physical_values())
    far = np.zeros(grid.shape, dtype=bool)
    for c in grid.coords():
        far = far | (np.abs(c) >= 0.45)
    peak = mag.max()
    return float(mag[far].max() / peak) if peak > 0 else 0.0


# -- kernel fields -----------------------------------------------------------------------------

def kernel_spectra(op, vectors, grid: TorusGrid, cfg: ExperimentConfig):
    """Half spectra of ``G_A[e]``: least-squares solutions of ``A(D) G = bump * e``."""
    bump = gaussian_bump(grid, cfg.delta_width * grid.h)
    bump_hat = np.fft.rfftn(bump)
    rhs = [np.multiply.outer(np.asarray(e, dtype=float), bump_hat) for e in vectors]
    return spectral.solve_least_squares_many(op, rhs, grid, True, cfg.tol)


def regularize(ghat, eps, grid: TorusGrid, cfg: ExperimentConfig) -> TorusField:
    """``cutoff * (mollifier_eps * G)`` in physical space, from a half spectrum."""
    mult = mollifier_multiplier(grid, eps)[..., : grid.N // 2 + 1]
    u = np.fft.irfftn(ghat * mult, s=grid.shape, axes=tuple(range(1, grid.n + 1)))
    chi = smoothstep_cutoff(grid, cfg.cutoff_inner, cfg.cutoff_outer)
    return TorusField(grid, u * chi)


def kernel_field(op, e, eps, cfg: ExperimentConfig, grid: TorusGrid | None = None) -> TorusField:
    grid = grid or cfg.grid(op.n)
    (ghat,) = kernel_spectra(op, [e], grid, cfg)
    return regularize(ghat, eps, grid, cfg)


def counterexample_field(op, e, eps, cfg: ExperimentConfig, grid: TorusGrid | None = None,
                         intersection: Subspace | None = None) -> TorusField:
    """Regularised fundamental solution applied to ``e`` from the image intersection."""
    e = np.asarray(e, dtype=float)
    if intersection is None:
        intersection = analyzers.check_cancelling(op, tol=cfg.tol).subspace
    if not np.any(e):
        raise ValueError("e must be nonzero")
    if intersection.distance(e / np.linalg.norm(e)) > math.sin(1e-6):
        raise ValueError("e is not in the intersection of the images")
    return kernel_field(op, e, eps, cfg, grid)


# -- ladder scans ------------------------------------------------------------------------------

def _trial_fields(op, cfg, grid, intersection):
    """Name and spectrum (or fixed field) of each trial in a ladder scan."""
    if intersection.dim > 0:
        e = intersection.orthonormal()[:, 0]
        (ghat,) = kernel_spectra(op, [e], grid, cfg)
        return [("intersection", ghat)]
    rng = cfg.rng(1)
    es = random_unit_vectors(op.rows, cfg.trials, rng)
    trials = [(f"random-e-{i}", g) for i, g in enumerate(kernel_spectra(op, es, grid, cfg))]
    for i in range(cfg.trials):
        w = band_limited(grid, op.cols, cfg.band, rng)
        trials.append((f"band-limited-{i}", np.fft.rfftn(w.values, axes=tuple(range(1, grid.n + 1)))))
    return trials


def _ladder_scan(kind, op, cfg, numerator, intersection, grid):
    grid = grid or cfg.grid(op.n)
    if intersection is None:
        intersection = analyzers.check_cancelling(op, tol=cfg.tol).subspace
    scan = Scan(kind, op.name if isinstance(op, SymbolOperator) else "")
    worst = 0.0
    trials = _trial_fields(op, cfg, grid, intersection)
    for eps in cfg.eps_ladder:
        best = -1.0
        for name, ghat in trials:
            u = regularize(ghat, eps, grid, cfg)
            den = spectral.lp_norm(spectral.apply_operator(op, u), 1)
            num = numerator(u)
            ratio = num / den if den > 0 else 0.0
            worst = max(worst, boundary_ratio(u))
            scan.rows.append({"epsilon": eps, "trial": name, "ratio": ratio, "numerator": num,
                              "denominator": den, "N": grid.N, "seed": cfg.seed})
            best = max(best, ratio)
        scan.ladder.append((eps, best))
    ratios = [r for _, r in scan.ladder]
    scan.diagnosis = diagnose(ratios)
    scan.summary = {
        "intersection_dim": intersection.dim,
        "first": ratios[0], "last": ratios[-1],
        "last_over_first": ratios[-1] / ratios[0] if ratios[0] > 0 else math.inf,
        "max_over_min": max(ratios) / min(ratios) if min(ratios) > 0 else math.inf,
        "boundary_ratio": worst, "N": grid.N,
    }
    return scan


def sobolev_exponent(n, k, l) -> float:
    """``n / (n - (k - l))``; infinite when the denominator vanishes."""
    d = n - (k - l)
    return math.inf if d <= 0 else n / d


def sobolev_ratio_scan(op, cfg: ExperimentConfig, intersection: Subspace | None = None,
                       grid: TorusGrid | None = None) -> Scan:
    """``||D^(k-1) u_eps||_p / ||A(D) u_eps||_1`` with ``p = n/(n-1)``.

    Non-cancelling operators use the kernel field of an intersection
    vector; cancelling ones take the envelope over random target vectors
    and random band-limited fields.
    """
    l = op.k - 1
    p = sobolev_exponent(op.n, op.k, l)
    scan = _ladder_scan("sobolev", op, cfg, lambda u: spectral.sobolev_grad_norm(u, l, p),
                        intersection, grid)
    scan.summary.update({"l": l, "p": p})
    return scan


def hardy_ratio_scan(op, cfg: ExperimentConfig, intersection: Subspace | None = None,
                     grid: TorusGrid | None = None) -> Scan:
    """``int |D^(k-1) u_eps| / |x| / ||A(D) u_eps||_1``, weight centred at the singularity."""
    l = op.k - 1
    excluded = []

    def numerator(u):
        value, bound = spectral.hardy_norm(u, op.k - l, l)
        excluded.append(bound / value if value > 0 else 0.0)
        return value

    scan = _ladder_scan("hardy", op, cfg, numerator, intersection, grid)
    scan.summary.update({"l": l, "weight_exponent": op.k - l,
                         "max_excluded_fraction": max(excluded) if excluded else 0.0})
    return scan


# -- L2 estimate ---------------------------------------------------------------------------------

def l2_estimate_experiment(op, cfg: ExperimentConfig, trials=50, grid: TorusGrid | None = None) -> Scan:
    """``||D^k u||_2^2 / ||A(D) u||_2^2`` against ``C^2`` from the ellipticity check."""
    ell = analyzers.check_ellipticity(op, tol=cfg.tol)
    if ell.verdict.value == analyzers.NO:
        raise analyzers.NotEllipticError("L2 estimate needs an injectively elliptic operator")
    grid = grid or cfg.grid(op.n, small=True)
    bound = ell.constant ** 2
    rng = cfg.rng(2)
    scan = Scan("l2", op.name)
    ratios = []
    for t in range(trials):
        u = band_limited(grid, op.cols, min(cfg.band, grid.N // 2 - 1), rng)
        num = spectral.sobolev_grad_norm(u, op.k, 2) ** 2
        den = spectral.lp_norm(spectral.apply_operator(op, u), 2) ** 2
        if den == 0.0:
            continue
        ratios.append(num / den)
        scan.rows.append({"trial": t, "ratio": num / den, "numerator": num, "denominator": den,
                          "N": grid.N, "seed": cfg.seed})
    worst = max(ratios) if ratios else 0.0
    scan.summary = {"max_ratio": worst, "bound_C2": bound, "within_bound": worst <= bound * (1 + 1e-6),
                    "min_singular_value": ell.min_singular_value}
    scan.diagnosis = BOUNDED if worst <= bound * (1 + 1e-6) else INCONCLUSIVE
    return scan


def plane_wave_ratio(op, frequency, vector, grid: TorusGrid) -> float:
    """The L2 ratio for ``u = v cos(2 pi x . xi)``."""
    phase = 2.0 * np.pi * sum(c * f for c, f in zip(grid.coords(), frequency))
    u = TorusField(grid, np.multiply.outer(np.asarray(vector, dtype=float), np.cos(phase)))
    num = spectral.sobolev_grad_norm(u, op.k, 2) ** 2
    den = spectral.lp_norm(spectral.apply_operator(op, u), 2) ** 2
    return num / den


# -- duality and compensation --------------------------------------------------------------------

def divergence_potential(n) -> SymbolOperator:
    """``b -> (sum_j d_j B_ij)_i`` with ``B`` antisymmetric; its image is divergence free."""
    return SymbolOperator.from_polymatrix(curl(n).symbol.T, name=f"antisymmetric-divergence(n={n})")


def loop_current(grid: TorusGrid, radius=0.15, width=0.04) -> TorusField:
    """Mollified unit current along a circle in the ``x1 x2`` plane.

    ``width`` is a physical length so refining the grid samples the same field.
    """
    x = grid.coords()
    rho = np.sqrt(x[0] ** 2 + x[1] ** 2)
    off = (rho - radius) ** 2 + sum(c ** 2 for c in x[2:])
    tube = np.exp(-0.5 * off / width ** 2) / (2.0 * np.pi * width ** 2) ** ((grid.n - 1) / 2.0)
    safe = np.where(rho > 0, rho, 1.0)
    vals = np.zeros((grid.n,) + grid.shape)
    vals[0] = -x[1] / safe * tube
    vals[1] = x[0] / safe * tube
    return TorusField(grid, vals)


def duality_ratio_scan(L, cfg: ExperimentConfig, trials=100, grid: TorusGrid | None = None,
                       loop=True) -> Scan:
    """``|int f . phi| / (||f||_1 ||D phi||_n)`` for ``f`` with ``L(D) f = 0``."""
    grid = grid or cfg.grid(L.n, small=True)
    rng = cfg.rng(3)
    n = L.n
    scan = Scan("duality", getattr(L, "name", ""))
    ratios, residual = [], 0.0
    sources = []
    for t in range(trials):
        sources.append((t, band_limited(grid, L.cols, cfg.band, rng)))
    if loop and L.cols == n and n >= 2:
        sources.append(("loop", loop_current(grid)))
    for t, w in sources:
        f = spectral.project_kernel(L, w, cfg.tol)
        phi = band_limited(grid, L.cols, cfg.band, rng)
        lf = spectral.lp_norm(spectral.apply_operator(L, f), math.inf)
        residual = max(residual, lf / max(spectral.lp_norm(f, math.inf), 1e-300))
        num = abs(_inner(f, phi))
        den = spectral.lp_norm(f, 1) * spectral.sobolev_grad_norm(phi, 1, n)
        ratio = num / den if den > 0 else 0.0
        ratios.append(ratio)
        scan.rows.append({"trial": t, "ratio": ratio, "numerator": num, "denominator": den,
                          "N": grid.N, "seed": cfg.seed})
    scan.summary = {"max_ratio": max(ratios), "kernel_residual": residual, "N": grid.N}
    scan.diagnosis = BOUNDED if np.isfinite(max(ratios)) else INCONCLUSIVE
    return scan


def common_kernel_operator() -> SymbolOperator:
    """``L(xi) = [xi_1, 0]`` on ``R^2``: every ``ker L(xi)`` contains ``e_2``."""
    return SymbolOperator.from_entries(2, 1, 2, 1, [((1, 0), 0, 0, 1)], name="common-kernel")


def duality_counterexample_scan(cfg: ExperimentConfig, grid: TorusGrid | None = None) -> Scan:
    """Concentrating bumps along ``e_2`` against log profiles, at scales ``s = eps / 2``.

    ``|int f phi|`` tracks ``log(R/s)`` while ``||f||_1 ||D phi||_2`` grows
    like its square root.
    """
    L = common_kernel_operator()
    coc = analyzers.check_cocancelling(L, tol=cfg.tol)
    if coc.subspace.dim == 0:
        raise ValueError("operator unexpectedly cocancelling")
    e = coc.subspace.orthonormal()[:, 0]
    grid = grid or cfg.grid(2)
    r = grid.radius()
    radius = cfg.cutoff_inner
    smooth = mollifier_multiplier(grid, grid.h)
    scan = Scan("duality-counterexample", L.name)
    for eps in cfg.eps_ladder:
        s = eps / 2.0
        bump = gaussian_bump(grid, max(s / 2.0, grid.h / 2.0))
        f = TorusField(grid, np.multiply.outer(e, bump))
        profile = np.maximum(np.log(radius / np.maximum(r, s)), 0.0)
        phi = spectral.filter_field(TorusField(grid, np.multiply.outer(e, profile)), smooth)
        resid = spectral.lp_norm(spectral.apply_operator(L, f), math.inf)
        num = abs(_inner(f, phi))
        den = spectral.lp_norm(f, 1) * spectral.sobolev_grad_norm(phi, 1, 2)
        ratio = num / den
        scan.rows.append({"epsilon": eps, "ratio": ratio, "numerator": num, "denominator": den,
                          "residual": resid, "N": grid.N, "seed": cfg.seed})
        scan.ladder.append((eps, ratio))
    ratios = [x for _, x in scan.ladder]
    scan.diagnosis = diagnose(ratios)
    scan.summary = {"last_over_first": ratios[-1] / ratios[0], "kernel_vector": e.tolist(), "N": grid.N}
    return scan


def compensation_ratio_scan(L, cfg: ExperimentConfig, trials=100, grid: TorusGrid | None = None,
                            potential: SymbolOperator | None = None) -> Scan:
    """``|int f . phi| / sum_{j=1..m} int |f| |x|^j |D^j phi|`` for L-free ``f``.

    With a ``potential`` (an operator ``P`` with ``L P = 0``) the fields are
    ``f = P(D)(cutoff * psi)`` and stay compactly supported; otherwise they
    are kernel projections of cut-off random fields.
    """
    coc = analyzers.check_cocancelling(L, tol=cfg.tol)
    if coc.verdict.value != analyzers.YES:
        raise analyzers.PreconditionError("compensation estimate needs a cocancelling operator")
    grid = grid or cfg.grid(L.n, small=True)
    m = spectral.operator_order(L)
    rng = cfg.rng(4)
    chi = smoothstep_cutoff(grid, cfg.cutoff_inner, cfg.cutoff_outer)
    r = grid.radius()
    scan = Scan("compensation", getattr(L, "name", ""))
    ratios = []
    for t in range(trials):
        if potential is not None:
            psi = band_limited(grid, potential.cols, cfg.band, rng)
            f = spectral.apply_operator(potential, TorusField(grid, psi.values * chi))
        else:
            w = band_limited(grid, L.cols, cfg.band, rng)
            f = spectral.project_kernel(L, TorusField(grid, w.values * chi), cfg.tol)
        phi = band_limited(grid, L.cols, cfg.band, rng, zero_mean=False)
        num = abs(_inner(f, phi))
        fmag = spectral.pointwise_norm(f.physical_values())
        den = sum(float(np.sum(fmag * r ** j * spectral.derivative_magnitude(phi, j)) * grid.cell_volume)
                  for j in range(1, m + 1))
        ratio = num / den if den > 0 else 0.0
        ratios.append(ratio)
        scan.rows.append({"trial": t, "ratio": ratio, "numerator": num, "denominator": den,
                          "N": grid.N, "seed": cfg.seed})
    scan.summary = {"max_ratio": max(ratios), "N": grid.N, "order": m,
                    "compact": potential is not None}
    scan.diagnosis = BOUNDED if np.isfinite(max(ratios)) else INCONCLUSIVE
    return scan


# -- fundamental solution ----------------------------------------------------------------------

def newton_kernel(n, r):
    """Fundamental solution of the Laplacian for ``n >= 3``: ``-|x|^(2-n) / ((n-2) |S^(n-1)|)``."""
    area = 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)
    return -np.asarray(r, dtype=float) ** (2 - n) / ((n - 2) * area)


def greens_homogeneity_check(op, e, cfg: ExperimentConfig, grid: TorusGrid | None = None,
                             shell=None, oracle=None) -> dict:
    """Shell test of ``K(2x) 2^(n-k) = K(x)`` for the numeric kernel ``K = G_A[e]``.

    The free-space kernel is recovered from periods 1 and 1/2 by
    ``(2^(n-k) G_1 - G_(1/2)) / (2^(n-k) - 1)``, which removes the constant
    periodisation offset. Shells are the grid points with ``|j|`` rounding
    to ``shell`` and ``2 shell`` cells; by default the largest shell up to
    8 cells that the half-period grid allows.
    """
    n, k = op.n, op.k
    if k >= n:
        raise analyzers.NotApplicableError(f"homogeneity check needs k < n (k={k}, n={n})")
    e = np.asarray(e, dtype=float)
    if not np.any(e):
        return {"skipped": True, "reason": "e = 0 gives the zero kernel"}
    grid = grid or cfg.grid(n)
    half = TorusGrid(n, grid.N // 2, grid.memory_cap)
    if shell is None:
        # the mean-zero background grows like |x|^n relative to the kernel
        shell = min(8, (half.N // 2 - 2) // 4)
    if shell < 2 or 4 * shell + 2 > half.N // 2:
        raise ValueError(f"shell {shell} too large for N = {grid.N}")
    g1 = _kernel_physical(op, e, grid, cfg)
    gh = _kernel_physical(op, e, half, cfg)
    factor = 2.0 ** (n - k)

    def free(offsets):
        c1 = np.array(grid.center_index())
        ch = np.array(half.center_index())
        a = g1[(slice(None),) + tuple((c1 + offsets).T)]
        b = gh[(slice(None),) + tuple((ch + offsets).T)] * factor
        return (factor * a - b) / (factor - 1.0)

    offs = _shell_offsets(n, shell)
    inner, outer = free(offs), free(2 * offs)
    diff = np.linalg.norm(inner - factor * outer, axis=0)
    homog = float(diff.sum() / np.linalg.norm(inner, axis=0).sum())
    report = {"skipped": False, "n": n, "k": k, "N": grid.N, "shell_cells": shell,
              "points": int(len(offs)), "expected_ratio": factor,
              "observed_ratio": float(np.linalg.norm(inner, axis=0).sum() / np.linalg.norm(outer, axis=0).sum()),
              "homogeneity_error": homog, "homogeneous": homog < 0.05}
    if oracle is not None:
        for name, o in (("inner", inner), ("outer", outer)):
            pts = (offs if name == "inner" else 2 * offs) * grid.h
            ref = oracle(np.linalg.norm(pts, axis=1))
            rel = np.abs(o[0] - ref) / np.abs(ref)
            report[f"oracle_error_{name}"] = float(rel.mean())
        report["oracle_match"] = max(report["oracle_error_inner"], report["oracle_error_outer"]) < 0.05
    return report


def _kernel_physical(op, e, grid, cfg):
    (ghat,) = kernel_spectra(op, [e], grid, cfg)
    return np.fft.irfftn(ghat, s=grid.shape, axes=tuple(range(1, grid.n + 1)))


def _shell_offsets(n, radius):
    rng = np.arange(-radius - 1, radius + 2)
    mesh = np.stack(np.meshgrid(*([rng] * n), indexing="ij"), axis=-1).reshape(-1, n)
    norm = np.linalg.norm(mesh, axis=1)
    return mesh[(norm >= radius - 0.5) & (norm < radius + 0.5)]
