"""Forward weight propagation of the dual quantization scheme.

``X^0 = 0`` and ``X^k = J_k(X^{k-1} + Z'_k)``, where ``Z'_k`` is the k-th
block of ``n0`` consecutive terms of the walk and ``J_k`` splits every atom
onto the Delaunay segment of the layer grid that contains it. Only the law is
propagated, so the whole scheme is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from dqwalk.dualquant import split_many
from dqwalk.errors import PropagationError
from dqwalk.grids import GridCache, iter_layer_grids
from dqwalk.walk import MASS_TOL, AtomicDistribution, WalkSpec

MERGE_TOL = 1e-12
MAX_BLOCK = 20


@dataclass(frozen=True)
class PropagationConfig:
    """Grid size ``N`` (interior points per layer) and block length ``n0``.

    ``exact_support`` lets early layers use the exact support of the partial
    walk while it fits in ``N + 2`` points; turn it off to run the plain
    moment-matched normal grids on every layer (e.g. for rate studies).
    """

    grid_size: int = 500
    aggregation: int = 1
    track_distortion: bool = True
    exact_support: bool = True

    def __post_init__(self):
        if self.grid_size < 1:
            raise ValueError(f"grid_size must be >= 1, got {self.grid_size}")
        if not 1 <= self.aggregation <= MAX_BLOCK:
            raise ValueError(f"aggregation must lie in 1..{MAX_BLOCK}, got {self.aggregation}")


@dataclass
class PropagationResult:
    final: AtomicDistribution
    per_layer_distortion: list = field(default_factory=list)
    per_layer_mass: list = field(default_factory=list)
    layers: int = 0
    history: list | None = None

    @property
    def total_distortion(self) -> float:
        return math.fsum(self.per_layer_distortion)

    def to_csv(self) -> str:
        return self.final.to_csv()


def _merge_atoms(points, weights, tol=MERGE_TOL):
    order = np.argsort(points, kind="stable")
    points, weights = points[order], weights[order]
    starts = np.concatenate(([True], np.diff(points) > tol))
    idx = np.flatnonzero(starts)
    return points[idx], np.add.reduceat(weights, idx)


def enumerate_law(alphas, probs):
    """Exact law of ``sum alpha_i Z_i`` over all 2**n outcomes, merged at 1e-12."""
    points = np.zeros(1)
    weights = np.ones(1)
    for a, p in zip(alphas, probs):
        points = np.concatenate((points, points + a))
        weights = np.concatenate((weights * (1.0 - p), weights * p))
    return _merge_atoms(points, weights)


def aggregate_increments(spec: WalkSpec, k: int, n0: int) -> AtomicDistribution:
    """Law of the k-th block sum (1-based) of ``n0`` terms; the last may be short."""
    if not 1 <= n0 <= MAX_BLOCK:
        raise ValueError(f"block length must lie in 1..{MAX_BLOCK}")
    start = (k - 1) * n0
    if k < 1 or start >= spec.n:
        raise IndexError(f"block {k} out of range for n={spec.n}, n0={n0}")
    stop = min(start + n0, spec.n)
    points, weights = enumerate_law(spec.alphas[start:stop], spec.probs[start:stop])
    return AtomicDistribution(points, weights)


def propagate_layer(prev: AtomicDistribution, increments: AtomicDistribution, grid,
                    track_distortion: bool = True):
    """One insertion step; returns the new law on the grid knots and its distortion.

    Sources are ordered by previous atom, then by increment atom (the
    ``Z = 0`` branch first), which fixes the accumulation order. Zero-weight
    knots stay in the output.
    """
    xi = (prev.points[:, None] + increments.points[None, :]).ravel()
    w = (prev.weights[:, None] * increments.weights[None, :]).ravel()
    try:
        idx, lam, xi = split_many(grid, xi)
    except PropagationError as exc:
        raise PropagationError(f"propagation precondition violated: {exc}") from None
    m = grid.knots.size
    new_w = np.bincount(idx, w * lam, minlength=m) + np.bincount(idx + 1, w * (1.0 - lam), minlength=m)
    mass = float(np.sum(new_w))
    if abs(mass - 1.0) > MASS_TOL:
        raise PropagationError(f"insertion lost mass: total weight {mass!r}")
    knots = grid.knots
    distortion = 0.0
    if track_distortion:
        distortion = math.fsum(w * (knots[idx + 1] - xi) * (xi - knots[idx]))
    return AtomicDistribution(knots, new_w), distortion


def _block_ends(n, n0):
    return list(range(n0, n, n0)) + [n]


def propagate_walk(spec: WalkSpec, config: PropagationConfig | None = None,
                   grids: GridCache | None = None, record: bool = False) -> PropagationResult:
    """Run the scheme over all ``ceil(n / n0)`` blocks.

    With ``record=True`` the law after every layer is kept in ``history``.
    """
    config = PropagationConfig() if config is None else config
    dist = AtomicDistribution.point_mass(0.0)
    result = PropagationResult(final=dist, history=[] if record else None)
    if spec.n == 0:
        return result
    n0 = config.aggregation
    ends = _block_ends(spec.n, n0)
    layer_grids = iter_layer_grids(spec, ends, config.grid_size, grids, config.exact_support)
    for k, grid in enumerate(layer_grids, start=1):
        inc = aggregate_increments(spec, k, n0)
        dist, distortion = propagate_layer(dist, inc, grid, config.track_distortion)
        result.per_layer_mass.append(dist.mass())
        if config.track_distortion:
            result.per_layer_distortion.append(distortion)
        if record:
            result.history.append(dist)
    result.final = dist
    result.layers = len(ends)
    return result
