import math

import numpy as np
import pytest

from cancelling.sphere import sphere_area, sphere_points, sphere_quadrature


@pytest.mark.parametrize("n,scheme", [(2, "auto"), (3, "auto"), (4, "auto"), (3, "halton"), (5, "halton")])
def test_points_are_unit_and_deterministic(n, scheme):
    a = sphere_points(n, 300, scheme, seed=4)
    b = sphere_points(n, 300, scheme, seed=4)
    assert a.shape == (300, n)
    assert np.allclose(np.linalg.norm(a, axis=1), 1.0)
    assert np.array_equal(a, b)


def test_one_dimensional_sphere_is_two_points():
    assert sphere_points(1, 50).tolist() == [[1.0], [-1.0]]


def test_prefixes_are_spread_out():
    # every prefix of the circle samples leaves no gap wider than a few average spacings
    pts = sphere_points(2, 1024)
    for m in (8, 64, 512):
        t = np.sort(np.arctan2(pts[:m, 1], pts[:m, 0]))
        gaps = np.diff(np.concatenate([t, t[:1] + 2 * np.pi]))
        assert gaps.max() < 4 * 2 * np.pi / m


def test_unknown_scheme_is_rejected():
    with pytest.raises(ValueError):
        sphere_points(3, 10, "circle")
    with pytest.raises(ValueError):
        sphere_points(3, 10, "nope")


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_quadrature_area_and_moments(n):
    pts, w = sphere_quadrature(n, 24)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0)
    area = sphere_area(n) if n > 1 else 2.0
    assert abs(w.sum() - area) < 1e-12 * area
    for i in range(n):
        # second moments of the coordinates: area / n; odd moments vanish
        assert abs(w @ pts[:, i] ** 2 - area / n) < 1e-12
        assert abs(w @ pts[:, i] ** 3) < 1e-12


def test_circle_area_closed_form():
    assert sphere_area(2) == pytest.approx(2 * math.pi, rel=1e-15)
    assert sphere_area(3) == pytest.approx(4 * math.pi, rel=1e-15)


def test_quadrature_dimension_cap():
    with pytest.raises(ValueError):
        sphere_quadrature(5)
