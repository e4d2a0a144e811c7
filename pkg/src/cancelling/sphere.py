"""Point sets and quadrature on the unit sphere ``S^(n-1)``."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

GOLDEN = (1.0 + 5.0 ** 0.5) / 2.0


def fibonacci_sphere(count: int, offset: float = 0.5) -> np.ndarray:
    """Fibonacci lattice on ``S^2``, shape (count, 3)."""
    i = np.arange(count, dtype=float) + offset
    z = 1.0 - 2.0 * i / count
    phi = 2.0 * np.pi * i / GOLDEN
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def halton_sphere(n: int, count: int, seed: int = 0) -> np.ndarray:
    """Scrambled Halton points pushed to ``S^(n-1)`` through the Gaussian quantile."""
    h = qmc.Halton(d=n, scramble=True, seed=seed).random(count)
    g = ndtri(np.clip(h, 1e-12, 1.0 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sphere_points(n: int, count: int, scheme: str = "auto", seed: int = 0) -> np.ndarray:
    """Deterministic low-discrepancy directions on ``S^(n-1)``.

    ``n = 1`` returns the whole sphere ``{+1, -1}``. ``auto`` picks evenly
    spaced angles for ``n = 2``, a Fibonacci lattice for ``n = 3`` and
    scrambled Halton points above.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if scheme == "auto":
        scheme = {2: "circle", 3: "fibonacci"}.get(n, "halton")
    rng = np.random.default_rng(seed)
    if scheme == "circle":
        if n != 2:
            raise ValueError("circle scheme needs n = 2")
        t = 2.0 * np.pi * (np.arange(count) + rng.random()) / count
        # interleave so that any prefix is spread around the circle
        order = np.argsort(_van_der_corput(count), kind="stable")
        t = t[order]
        return np.column_stack([np.cos(t), np.sin(t)])
    if scheme == "fibonacci":
        if n != 3:
            raise ValueError("fibonacci scheme needs n = 3")
        pts = fibonacci_sphere(count, offset=0.5)
        order = np.argsort(_van_der_corput(count), kind="stable")
        return pts[order]
    if scheme == "halton":
        return halton_sphere(n, count, seed)
    raise ValueError(f"unknown sampling scheme {scheme!r}")


def _van_der_corput(count):
    out = np.zeros(count)
    for i in range(count):
        x, denom, k = 0.0, 1.0, i + 1
        while k:
            k, r = divmod(k, 2)
            denom *= 2.0
            x += r / denom
        out[i] = x
    return out


def sphere_area(n: int) -> float:
    """Surface measure of ``S^(n-1)`` (counting measure for ``n = 1``)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def sphere_quadrature(n: int, order: int = 64):
    """Product Gauss-Legendre rule on ``S^(n-1)`` for ``n <= 4``.

    Hyperspherical coordinates: polar angles in ``[0, pi]`` carry their
    ``sin^j`` Jacobian factor, the azimuth runs over ``[0, 2 pi]``.
    Returns ``(points (M, n), weights (M,))``.
    """
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if not 2 <= n <= 4:
        raise ValueError(f"sphere quadrature is implemented for n <= 4, got n={n}")
    x, w = np.polynomial.legendre.leggauss(order)
    polar = (x + 1.0) * (np.pi / 2.0)
    polar_w = w * (np.pi / 2.0)
    azim = (x + 1.0) * np.pi
    azim_w = w * np.pi

    grids = [polar] * (n - 2) + [azim]
    weights = [polar_w * np.sin(polar) ** (n - 2 - j) for j in range(n - 2)] + [azim_w]
    mesh = np.meshgrid(*grids, indexing="ij")
    wmesh = np.meshgrid(*weights, indexing="ij")
    angles = [m.ravel() for m in mesh]
    wt = np.prod([m.ravel() for m in wmesh], axis=0)

    pts = np.empty((wt.size, n))
    sin_prod = np.ones(wt.size)
    for j, a in enumerate(angles[:-1]):
        pts[:, j] = sin_prod * np.cos(a)
        sin_prod = sin_prod * np.sin(a)
    pts[:, n - 2] = sin_prod * np.cos(angles[-1])
    pts[:, n - 1] = sin_prod * np.sin(angles[-1])
    return pts, wt
