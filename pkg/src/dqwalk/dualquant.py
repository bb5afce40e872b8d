"""The dual quantization operator as a deterministic two-point split.

A value ``xi`` in the Delaunay segment ``[x_j, x_{j+1})`` is sent to ``x_j``
with probability ``lam = (x_{j+1} - xi) / (x_{j+1} - x_j)`` and to
``x_{j+1}`` otherwise, so the split preserves ``xi`` in mean. Segments are
half-open on the right except the last one, which is closed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dqwalk.errors import PropagationError


@dataclass(frozen=True)
class Split:
    lower_index: int
    lam: float


def _check_range(grid, xi):
    xi = np.asarray(xi, dtype=float)
    delta = grid.collar
    bad = (xi < grid.a - delta) | (xi > grid.b + delta) | np.isnan(xi)
    if np.any(bad):
        first = np.atleast_1d(xi)[np.atleast_1d(bad)][0]
        raise PropagationError(
            f"value {first!r} lies outside grid range [{grid.a!r}, {grid.b!r}]"
        )
    return np.clip(xi, grid.a, grid.b)


def locate_segments(grid, xi):
    """Vectorized segment lookup; returns (indices, clamped values)."""
    xi = _check_range(grid, xi)
    last = grid.knots.size - 2
    idx = np.searchsorted(grid.knots, xi, side="right") - 1
    return np.minimum(idx, last), xi


def split_many(grid, xi):
    """Lower indices and barycentric weights for an array of values."""
    idx, xi = locate_segments(grid, xi)
    knots = grid.knots
    lo, hi = knots[idx], knots[idx + 1]
    lam = np.clip((hi - xi) / (hi - lo), 0.0, 1.0)
    return idx, lam, xi


def locate_segment(grid, xi: float) -> int:
    """Index ``j`` of the segment containing ``xi`` (binary search)."""
    idx, _ = locate_segments(grid, float(xi))
    return int(idx)


def split(grid, xi: float) -> Split:
    idx, lam, _ = split_many(grid, float(xi))
    return Split(int(idx), float(lam))


def local_distortion(grid, xi):
    """E|xi - J(xi)|^2 = (x_{j+1} - xi)(xi - x_j); works on arrays too."""
    idx, xi = locate_segments(grid, xi)
    knots = grid.knots
    out = (knots[idx + 1] - xi) * (xi - knots[idx])
    return float(out) if out.ndim == 0 else out


def dual_distortion(grid, density, nodes: int = 8) -> float:
    """E|X - J(X)|^2 for X with the given density on ``[a, b]``.

    Gauss-Legendre on every segment; exact when ``density`` is a polynomial of
    degree below ``2 * nodes - 2``.
    """
    t, w = np.polynomial.legendre.leggauss(nodes)
    knots = grid.knots
    lo, hi = knots[:-1, None], knots[1:, None]
    half = 0.5 * (hi - lo)
    x = lo + half * (t + 1.0)
    integrand = (hi - x) * (x - lo) * density(x)
    return float(np.sum(half[:, 0] * (integrand @ w)))
