import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cancelling import spectral
from cancelling.catalog import catalog_get
from cancelling.experiments import band_limited
from cancelling.spectral import (
    GridError,
    IllPosedError,
    TorusField,
    TorusGrid,
    apply_operator,
    derivative,
    derivative_magnitude,
    hardy_norm,
    lp_norm,
    project_kernel,
    sobolev_grad_norm,
    solve_least_squares,
    spectral_l2_norm,
)
from cancelling.symbols import eval_symbol

seeds = st.integers(0, 2 ** 32 - 1)


def random_field(grid, components, seed, band=3):
    return band_limited(grid, components, band, np.random.default_rng(seed))


def gaussian(grid, center, width):
    r2 = sum((c - x0) ** 2 for c, x0 in zip(grid.coords(), center))
    return np.exp(-0.5 * r2 / width ** 2)


# -- grids and transforms ----------------------------------------------------------------------

@pytest.mark.parametrize("n,N", [(0, 8), (5, 4), (2, 12), (2, 2), (4, 64)])
def test_grid_validation(n, N):
    with pytest.raises(GridError):
        TorusGrid(n, N)


def test_grid_geometry():
    g = TorusGrid(2, 8)
    assert g.shape == (8, 8) and g.size == 64 and g.h == 1 / 8 and g.cell_volume == 1 / 64
    assert g.axis()[g.N // 2] == 0.0
    assert g.radius()[g.center_index()] == 0.0
    assert g.nyquist_mask().sum() == 2 * 8 - 1


@given(seeds, st.sampled_from([(1, 32), (2, 16), (3, 8)]))
def test_transform_round_trip_and_conjugate_symmetry(seed, nN):
    grid = TorusGrid(*nN)
    vals = np.random.default_rng(seed).standard_normal((2,) + grid.shape)
    u = TorusField(grid, vals)
    f = u.to_frequency()
    assert f.is_real_spectrum()
    back = f.to_physical().values
    assert np.abs(back - vals).max() <= 1e-10 * np.abs(vals).max()


@given(seeds, st.sampled_from([(1, 64), (2, 16), (3, 8)]))
def test_parseval(seed, nN):
    grid = TorusGrid(*nN)
    u = TorusField(grid, np.random.default_rng(seed).standard_normal((3,) + grid.shape))
    assert abs(lp_norm(u, 2) - spectral_l2_norm(u)) <= 1e-10 * lp_norm(u, 2)


# -- applying operators -------------------------------------------------------------------------

PLANE_CASES = [("divcurl", {}), ("symder", {"n": 2}), ("laplacian", {"n": 2}), ("hodge", {"n": 3, "m": 1}),
               ("gradient", {"n": 1}), ("kpowers", {"n": 2, "k": 3})]


@pytest.mark.parametrize("cid,params", PLANE_CASES)
@given(data=st.data())
def test_plane_waves_are_eigenfunctions(cid, params, data):
    op = catalog_get(cid, **params)
    N = 8 if op.n == 3 else 16
    grid = TorusGrid(op.n, N)
    top = N // 2 - 1  # Nyquist planes are cleared for odd orders
    xi0 = data.draw(st.lists(st.integers(-top, top), min_size=op.n, max_size=op.n))
    v = np.asarray(data.draw(st.lists(st.floats(-2, 2), min_size=op.cols, max_size=op.cols)))
    phase = np.exp(2j * np.pi * sum(c * k for c, k in zip(grid.coords(), xi0)))
    u = TorusField(grid, np.multiply.outer(v.astype(complex), phase))
    got = apply_operator(op, u).values
    mult = (2j * np.pi) ** op.k * eval_symbol(op, [int(k) for k in xi0]).astype(float)
    want = np.multiply.outer(mult @ v, phase)
    assert np.abs(got - want).max() <= 1e-9 * max(np.abs(want).max(), 1.0)


def test_constant_fields_are_annihilated():
    grid = TorusGrid(3, 8)
    u = TorusField(grid, np.ones((3,) + grid.shape) * np.array([1.0, -2.0, 0.5])[:, None, None, None])
    assert np.abs(apply_operator(catalog_get("divcurl"), u).values).max() < 1e-12


def test_spectral_gradient_against_centred_differences():
    errors = []
    for N in (32, 64, 128):
        grid = TorusGrid(2, N)
        u = TorusField(grid, gaussian(grid, (0.05, -0.02), 0.08)[None])
        spec = apply_operator(catalog_get("gradient", n=2), u).values
        fd = np.stack([(np.roll(u.values[0], -1, axis=i) - np.roll(u.values[0], 1, axis=i)) / (2 * grid.h)
                       for i in range(2)])
        errors.append(np.abs(spec - fd).max())
    # second order: each halving of h cuts the gap by about four
    assert errors[0] / errors[1] > 3.5 and errors[1] / errors[2] > 3.5


@given(seeds, st.floats(-3, 3), st.floats(-3, 3))
def test_apply_operator_is_linear(seed, a, b):
    op = catalog_get("symder", n=2)
    grid = TorusGrid(2, 16)
    u, v = random_field(grid, 2, seed), random_field(grid, 2, seed + 1)
    lhs = apply_operator(op, TorusField(grid, a * u.values + b * v.values)).values
    rhs = a * apply_operator(op, u).values + b * apply_operator(op, v).values
    assert np.abs(lhs - rhs).max() <= 1e-12 * max(np.abs(rhs).max(), 1.0) + 1e-12


def test_apply_operator_checks_components():
    with pytest.raises(GridError):
        apply_operator(catalog_get("divcurl"), TorusField(TorusGrid(3, 8), np.zeros((2, 8, 8, 8))))


def test_frequency_space_input_gives_frequency_output():
    grid = TorusGrid(2, 16)
    u = random_field(grid, 2, 5)
    op = catalog_get("symder", n=2)
    via_freq = apply_operator(op, u.to_frequency())
    assert via_freq.space == "frequency"
    assert np.allclose(via_freq.to_physical().values, apply_operator(op, u).values, atol=1e-12)


# -- least squares and projections ----------------------------------------------------------------

@pytest.mark.parametrize("cid,params,N", [("divcurl", {}, 16), ("laplacian", {"n": 2}, 32),
                                          ("symder", {"n": 3}, 16), ("hodge", {"n": 4, "m": 2}, 8)])
def test_least_squares_round_trip(cid, params, N):
    op = catalog_get(cid, **params)
    grid = TorusGrid(op.n, N)
    u0 = random_field(grid, op.cols, 1, band=min(3, N // 2 - 1))
    u = solve_least_squares(op, apply_operator(op, u0))
    assert np.abs(u.values - u0.values).max() <= 1e-8 * np.abs(u0.values).max()


def test_least_squares_of_zero_and_of_non_elliptic():
    grid = TorusGrid(3, 8)
    zero = TorusField(grid, np.zeros((4,) + grid.shape))
    assert not solve_least_squares(catalog_get("divcurl"), zero).values.any()
    with pytest.raises(IllPosedError):
        solve_least_squares(catalog_get("divergence", n=3), TorusField(grid, np.ones((1,) + grid.shape)))


@pytest.mark.parametrize("cid,n", [("divergence", 2), ("divergence", 3), ("curl", 3), ("kpowers", 2)])
@given(seed=seeds)
def test_kernel_projection_is_annihilated(cid, n, seed):
    op = catalog_get(cid, n=n)
    grid = TorusGrid(n, 16 if n == 2 else 8)
    f = project_kernel(op, random_field(grid, op.cols, seed))
    assert lp_norm(apply_operator(op, f), math.inf) <= 1e-9 * lp_norm(f, math.inf)
    # idempotent
    assert np.allclose(project_kernel(op, f).values, f.values, atol=1e-12)


# -- norms -------------------------------------------------------------------------------------

def test_l1_norm_of_gaussian_bump():
    grid = TorusGrid(2, 128)
    s = 0.04
    u = TorusField(grid, gaussian(grid, (0, 0), s)[None])
    assert lp_norm(u, 1) == pytest.approx(2 * math.pi * s ** 2, rel=1e-10)
    assert lp_norm(u, math.inf) == 1.0


@given(seeds, st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3), st.sampled_from([1, 1.5, 2, 3, math.inf]))
def test_norms_are_absolutely_homogeneous(seed, c, p):
    grid = TorusGrid(2, 16)
    u = random_field(grid, 2, seed)
    assert lp_norm(u * c, p) == pytest.approx(abs(c) * lp_norm(u, p), rel=1e-12)
    assert sobolev_grad_norm(u * c, 1, p) == pytest.approx(abs(c) * sobolev_grad_norm(u, 1, p), rel=1e-12)


def test_derivative_magnitude_matches_partials():
    grid = TorusGrid(2, 32)
    u = random_field(grid, 2, 9)
    parts = [derivative(u, a).values for a in [(1, 0), (0, 1)]]
    assert np.allclose(derivative_magnitude(u, 1), np.sqrt(sum(np.sum(p ** 2, axis=0) for p in parts)))
    second = [derivative(u, a).values for a in [(2, 0), (1, 1), (0, 2)]]
    want = np.sqrt(np.sum(second[0] ** 2 + 2 * second[1] ** 2 + second[2] ** 2, axis=0))
    assert np.allclose(derivative_magnitude(u, 2), want)


def test_hardy_weight_bound_away_from_centre():
    grid = TorusGrid(2, 64)
    u = TorusField(grid, gaussian(grid, (0.3, 0.0), 0.03)[None])
    d = 0.15
    for a, j in [(1, 0), (1, 1), (2, 0)]:
        value, excluded = hardy_norm(u, a, j)
        assert value <= d ** (-a) * sobolev_grad_norm(u, j, 1)
        assert excluded < 1e-5 * value if a < 2 else excluded == math.inf


def test_hardy_excluded_cell_bound_is_reported():
    grid = TorusGrid(3, 16)
    u = TorusField(grid, gaussian(grid, (0, 0, 0), 0.1)[None])
    value, excluded = hardy_norm(u, 1)
    assert 0 < excluded < value
    _, infinite = hardy_norm(u, 3)
    assert infinite == math.inf


def test_memory_cap_applies():
    with pytest.raises(GridError):
        TorusGrid(3, 256)
    assert TorusGrid(3, 256, memory_cap=1 << 24).size == 256 ** 3
    assert spectral.MEMORY_CAP == 1 << 22
