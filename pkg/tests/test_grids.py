import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from conftest import walks
from dqwalk import DualGrid, GridCache, PrimalGrid, WalkSpec, dualize_midpoints, layer_grid
from dqwalk import optimal_normal_primal
from dqwalk.dualquant import dual_distortion
from dqwalk.grids import (
    MIN_SPACING,
    iter_layer_grids,
    lloyd_step,
    normal_centroids,
    normal_distortion,
    read_primal_grid,
    write_primal_grid,
)
from dqwalk.normal import norm_pdf
from dqwalk.oracles import brute_force_law


def test_single_point_quantizer_is_the_mean():
    assert np.array_equal(optimal_normal_primal(1).points, [0.0])


def test_two_point_quantizer():
    y = optimal_normal_primal(2).points
    c = math.sqrt(2 / math.pi)
    assert y == pytest.approx([-c, c], abs=1e-12)


@pytest.mark.parametrize("N", [3, 5, 11, 101])
def test_odd_quantizers_are_symmetric_about_zero(N):
    y = optimal_normal_primal(N).points
    assert np.array_equal(y, -y[::-1])
    assert y[N // 2] == 0.0


@pytest.mark.parametrize("N", [2, 7, 50, 501, 2000])
def test_centroid_condition(N):
    tol = 1e-12
    y = optimal_normal_primal(N, tol=tol).points
    assert np.max(np.abs(y - normal_centroids(y))) < 10 * tol


@pytest.mark.parametrize("N", [3, 8])
def test_centroids_against_numerical_integration(N):
    y = optimal_normal_primal(N).points
    edges = np.concatenate(([-np.inf], 0.5 * (y[:-1] + y[1:]), [np.inf]))
    for j in range(N):
        m1 = integrate.quad(lambda x: x * norm_pdf(x), edges[j], edges[j + 1], epsabs=1e-14)[0]
        m0 = integrate.quad(norm_pdf, edges[j], edges[j + 1], epsabs=1e-14)[0]
        assert y[j] == pytest.approx(m1 / m0, abs=1e-9)


def test_distortion_closed_form_against_quadrature():
    y = np.array([-1.3, -0.2, 0.4, 1.9])
    num = integrate.quad(lambda x: np.min((x - y) ** 2) * norm_pdf(x), -12, 12,
                         points=list(0.5 * (y[:-1] + y[1:])), limit=200)[0]
    assert normal_distortion(y) == pytest.approx(num, rel=1e-10)


@pytest.mark.parametrize("N", [4, 20, 60])
def test_lloyd_decreases_distortion_every_iteration(N):
    y = np.linspace(-4.0, 4.0, N)
    d = normal_distortion(y)
    for _ in range(200):
        y = lloyd_step(y)
        nxt = normal_distortion(y)
        assert nxt <= d + 1e-15
        d = nxt


def test_optimal_quantizer_beats_perturbations():
    y = optimal_normal_primal(10).points
    best = normal_distortion(y)
    rng = np.random.default_rng(1)
    for _ in range(50):
        z = np.sort(y + rng.normal(0, 1e-3, y.size))
        assert normal_distortion(z) >= best


def test_primal_grid_file_round_trip():
    grid = optimal_normal_primal(17)
    back = read_primal_grid(write_primal_grid(grid))
    assert np.array_equal(back.points, grid.points)


def test_primal_grid_rejects_unsorted():
    with pytest.raises(ValueError):
        PrimalGrid([1.0, 0.0])


@pytest.mark.parametrize(
    "primal, a, b, interior",
    [([-1.0, 1.0], -2.0, 2.0, [0.0]),
     ([0.0, 1.0, 2.0, 3.0], 0.0, 3.0, [0.5, 1.5, 2.5]),
     ([-3.0, 0.0, 3.0], -1.0, 1.0, [])],
)
def test_dualize_midpoints_examples(primal, a, b, interior):
    grid = dualize_midpoints(PrimalGrid(primal), a, b)
    assert np.array_equal(grid.interior, interior)
    assert grid.knots[0] == a and grid.knots[-1] == b


def test_dual_grid_invariants_enforced():
    with pytest.raises(ValueError):
        DualGrid(1.0, 1.0, [])
    with pytest.raises(ValueError):
        DualGrid(0.0, 1.0, [0.5, 0.4])
    with pytest.raises(ValueError):
        DualGrid(0.0, 1.0, [1.5])


def test_uniform_dual_rate_constant():
    N = 200
    grid = DualGrid(0.0, 1.0, np.arange(1, N + 1) / (N + 1))
    distortion = dual_distortion(grid, lambda x: np.ones_like(x))
    assert abs((N + 1) ** 2 * distortion - 1 / 6) < 0.01
    assert (N + 1) ** 2 * distortion == pytest.approx(1 / 6, rel=1e-12)


@pytest.mark.parametrize("N", [0, 1, 5, 500])
def test_first_layer_is_exact_support(N):
    grid = layer_grid(WalkSpec([1.0, 1.0], [0.3, 0.4]), 1, N)
    assert np.array_equal(grid.knots, [0.0, 1.0])


def test_last_layer_lies_in_hull():
    spec = WalkSpec(np.ones(100), np.full(100, 0.1))
    grid = layer_grid(spec, 100, 500, exact_support=False)
    assert grid.a == 0.0 and grid.b == 100.0
    assert np.all((grid.interior > 0.0) & (grid.interior < 100.0))
    assert np.all(np.diff(grid.knots) >= MIN_SPACING * 100.0)


def test_affine_map_matches_moments_before_clipping():
    cache = GridCache()
    y = cache.primal(301).points
    mu, sigma = 10.0, 3.0
    mapped = y * sigma + mu
    assert math.fsum(mapped) / mapped.size == pytest.approx(mu, abs=1e-12)
    mids = cache.midpoints(301)
    assert np.array_equal(mids, 0.5 * (y[:-1] + y[1:]))


@given(walks(max_n=8), st.integers(0, 20))
def test_layer_grid_exact_support_when_small(spec, N):
    for k in range(1, spec.n + 1):
        grid = layer_grid(spec, k, N)
        prefix = WalkSpec(spec.alphas[:k], spec.probs[:k])
        support = brute_force_law(prefix).points
        if support.size <= N + 2:
            assert np.allclose(grid.knots, support, rtol=0, atol=1e-12)
        assert grid.b == pytest.approx(float(np.sum(spec.alphas[:k])), rel=1e-15)


@given(walks(min_n=5, max_n=40), st.integers(1, 60), st.booleans())
def test_emitted_grids_respect_invariants(spec, N, exact):
    ends = list(range(1, spec.n + 1))
    for grid in iter_layer_grids(spec, ends, N, exact_support=exact):
        assert grid.a == 0.0
        assert np.all(np.diff(grid.knots) >= MIN_SPACING * (grid.b - grid.a))
        assert grid.size <= max(N, 0) + 2


def test_layer_index_out_of_range():
    with pytest.raises(IndexError):
        layer_grid(WalkSpec([1.0], [0.5]), 2, 10)


def test_cache_solves_each_size_once():
    cache = GridCache()
    g1 = cache.primal(40)
    assert 40 in cache
    assert cache.primal(40) is g1
