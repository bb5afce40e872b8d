"""Dual quantization grids.

Per-layer grids are derived from the optimal quadratic quantizer of N(0, 1):
its cell midpoints form a dual grid, which is mapped affinely onto the first
two moments of the partial walk and clipped to the hull ``[0, sum alpha]``.
While the exact support of a partial walk is small enough it is used as the
grid instead, which makes those layers error free.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from dqwalk.errors import ConvergenceError
from dqwalk.normal import norm_mass, norm_pdf, norm_ppf

MIN_SPACING = 1e-14  # relative to b - a
SUPPORT_MERGE_TOL = 1e-12
STALL_FLOOR = 1e-9


@dataclass(frozen=True, eq=False)
class PrimalGrid:
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1)
        if pts.size == 0 or np.any(np.diff(pts) <= 0.0):
            raise ValueError("primal grid must be non-empty and strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return int(self.points.size)


@dataclass(frozen=True, eq=False)
class DualGrid:
    """Interior points on ``[a, b]``; ``knots`` adds the endpoints."""

    a: float
    b: float
    interior: np.ndarray
    knots: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not b > a:
            raise ValueError(f"dual grid needs b > a, got [{a}, {b}]")
        interior = np.array(self.interior, dtype=float).reshape(-1)
        knots = np.concatenate(([a], interior, [b]))
        if np.any(np.diff(knots) < MIN_SPACING * (b - a)):
            raise ValueError("dual grid knots must be strictly increasing inside [a, b]")
        interior.setflags(write=False)
        knots.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "interior", interior)
        object.__setattr__(self, "knots", knots)

    @property
    def size(self) -> int:
        """Number of interior points."""
        return int(self.interior.size)

    @property
    def collar(self) -> float:
        return 1e-9 * (self.b - self.a)


# --- optimal quantizer of the standard normal ----------------------------------


def _cells(y):
    mid = 0.5 * (y[:-1] + y[1:])
    lo = np.concatenate(([-np.inf], mid))
    hi = np.concatenate((mid, [np.inf]))
    return lo, hi


def normal_centroids(y):
    """Conditional means of N(0,1) on the Voronoi cells of ``y``."""
    lo, hi = _cells(np.asarray(y, dtype=float))
    mass = norm_mass(lo, hi)
    first = norm_pdf(lo) - norm_pdf(hi)
    return first / mass


def normal_distortion(y) -> float:
    """E min_j (G - y_j)^2 for G ~ N(0, 1)."""
    y = np.asarray(y, dtype=float)
    lo, hi = _cells(y)
    mass = norm_mass(lo, hi)
    flo, fhi = norm_pdf(lo), norm_pdf(hi)
    # x*phi(x) vanishes at +-inf
    with np.errstate(invalid="ignore"):
        lphi = np.where(np.isfinite(lo), lo * flo, 0.0)
        hphi = np.where(np.isfinite(hi), hi * fhi, 0.0)
    second = mass + lphi - hphi
    first = flo - fhi
    return float(np.sum(second - 2.0 * y * first + y * y * mass))


def lloyd_step(y):
    """One Lloyd fixed-point update: every point moves to its cell centroid."""
    return normal_centroids(y)


def _newton_step(y):
    lo, hi = _cells(y)
    mass = norm_mass(lo, hi)
    resid = y * mass - (norm_pdf(lo) - norm_pdf(hi))
    gaps = np.diff(y)
    phi_mid = norm_pdf(0.5 * (y[:-1] + y[1:]))
    coupling = 0.25 * phi_mid * gaps
    diag = mass.copy()
    diag[:-1] -= coupling
    diag[1:] -= coupling
    n = y.size
    ab = np.zeros((3, n))
    ab[0, 1:] = -coupling
    ab[1] = diag
    ab[2, :-1] = -coupling
    return solve_banded((1, 1), ab, -resid)


def _initial_normal_grid(n):
    # asymptotically optimal point density is proportional to phi^(1/3),
    # i.e. the N(0, 3) law
    u = (np.arange(n) + 0.5) / n
    return np.sqrt(3.0) * norm_ppf(u)


def optimal_normal_primal(N: int, tol: float = 1e-12, max_iter: int = 10000,
                          lloyd_iters: int = 20) -> PrimalGrid:
    """N-point optimal quadratic quantizer of N(0, 1).

    A few Lloyd sweeps from the N(0, 3) quantile grid, then damped Newton on
    the centroid equations (tridiagonal Jacobian). Falls back to plain Lloyd
    if a Newton step would break the ordering. Converged when the largest
    point movement drops below ``tol``, or when Newton steps stop shrinking
    below ``STALL_FLOOR`` (the Jacobian's conditioning grows like N**2, so for
    large N rounding noise sits slightly above 1e-12).
    """
    if N < 0:
        raise ValueError(f"grid size must be >= 0, got {N}")
    if N == 1:
        return PrimalGrid([0.0])
    y = _initial_normal_grid(N)
    move = np.inf
    stalled = 0
    for it in range(max_iter):
        if it < lloyd_iters:
            new = lloyd_step(y)
        else:
            delta = _newton_step(y)
            new = y + delta
            step = 1.0
            while np.any(np.diff(new) <= 0.0) and step > 1e-4:
                step *= 0.5
                new = y + step * delta
            if np.any(np.diff(new) <= 0.0):
                new = lloyd_step(y)
        # enforce exact symmetry about 0
        new = 0.5 * (new - new[::-1])
        prev_move, move = move, float(np.max(np.abs(new - y)))
        y = new
        if move < tol:
            return PrimalGrid(y)
        if it >= lloyd_iters and move < STALL_FLOOR and move >= 0.5 * prev_move:
            stalled += 1
            if stalled >= 3:
                return PrimalGrid(y)
    raise ConvergenceError(f"normal quantizer of size {N} did not converge", move)


def write_primal_grid(grid: PrimalGrid) -> str:
    """Two-column ASCII export: index, point (17 significant digits)."""
    return "".join(f"{i} {format(x, '.17g')}\n" for i, x in enumerate(grid.points, start=1))


def read_primal_grid(text: str) -> PrimalGrid:
    pts = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            pts.append(float(line.split()[1]))
    return PrimalGrid(pts)


# --- dual grids ----------------------------------------------------------------


def _clip_interior(x, a, b):
    """Clamp candidate interior points into [a, b] and drop near-duplicates."""
    spacing = MIN_SPACING * (b - a)
    x = np.clip(np.asarray(x, dtype=float), a, b)
    x = x[(x - a >= spacing) & (b - x >= spacing)]
    if x.size > 1:
        keep = np.concatenate(([True], np.diff(x) >= spacing))
        x = x[keep]
    return x


def dualize_midpoints(primal: PrimalGrid, a: float, b: float) -> DualGrid:
    """Dual grid of cell midpoints of ``primal``, restricted to ``[a, b]``."""
    if not b > a:
        raise ValueError(f"need b > a, got [{a}, {b}]")
    y = primal.points
    mids = 0.5 * (y[:-1] + y[1:])
    return DualGrid(a, b, _clip_interior(mids, a, b))


class GridCache:
    """Standard-normal primal grids (and their midpoints) keyed by size.

    Reads are lock-free; inserts are serialized so each size is solved once.
    """

    def __init__(self, tol: float = 1e-12, max_iter: int = 10000):
        self.tol = tol
        self.max_iter = max_iter
        self._grids = {}
        self._lock = threading.Lock()

    def primal(self, size: int) -> PrimalGrid:
        return self._entry(size)[0]

    def midpoints(self, size: int) -> np.ndarray:
        return self._entry(size)[1]

    def _entry(self, size):
        entry = self._grids.get(size)
        if entry is None:
            with self._lock:
                entry = self._grids.get(size)
                if entry is None:
                    grid = optimal_normal_primal(size, self.tol, self.max_iter)
                    mids = 0.5 * (grid.points[:-1] + grid.points[1:])
                    mids.setflags(write=False)
                    entry = (grid, mids)
                    self._grids[size] = entry
        return entry

    def __contains__(self, size):
        return size in self._grids


DEFAULT_CACHE = GridCache()


def _merge_sorted(x, tol):
    x = np.sort(x)
    if x.size > 1:
        x = x[np.concatenate(([True], np.diff(x) > tol))]
    return x


def _extend_support(support, alpha, limit):
    """Support after adding ``alpha * Z``; None once it exceeds ``limit`` points."""
    merged = _merge_sorted(np.concatenate((support, support + alpha)), SUPPORT_MERGE_TOL)
    return merged if merged.size <= limit else None


def _normal_layer_grid(mean, var, b, N, cache):
    mids = cache.midpoints(N + 1)
    return DualGrid(0.0, b, _clip_interior(mids * np.sqrt(var) + mean, 0.0, b))


def layer_grid(spec, k: int, N: int, cache: GridCache | None = None,
               exact_support: bool = True) -> DualGrid:
    """Grid for the partial walk ``X^k = sum_{i<=k} alpha_i Z_i`` (k is 1-based).

    Exact support when it has at most ``N + 2`` points (and ``exact_support``
    is on), otherwise the moment-matched normal dual grid with ``N`` interior
    points before clipping.
    """
    if not 1 <= k <= spec.n:
        raise IndexError(f"layer {k} out of range 1..{spec.n}")
    return next(iter_layer_grids(spec, [k], N, cache, exact_support))


def iter_layer_grids(spec, ends, N: int, cache: GridCache | None = None,
                     exact_support: bool = True):
    """Yield ``layer_grid`` for each cumulative index in ``ends`` (increasing).

    Walks the terms once, tracking the exact support until it outgrows the
    grid size; supports only grow, so tracking never resumes.
    """
    if N < 0:
        raise ValueError(f"grid size must be >= 0, got {N}")
    cache = DEFAULT_CACHE if cache is None else cache
    a, p = spec.alphas, spec.probs
    means = np.cumsum(a * p)
    variances = np.cumsum(a * a * p * (1.0 - p))
    totals = np.cumsum(a)
    support = np.zeros(1) if exact_support else None
    done = 0
    for k in ends:
        if k <= done:
            raise ValueError("layer indices must be strictly increasing")
        for i in range(done, k):
            if support is not None:
                support = _extend_support(support, a[i], N + 2)
        done = k
        b = float(totals[k - 1])
        if support is not None:
            yield DualGrid(0.0, b, support[1:-1])
        else:
            yield _normal_layer_grid(means[k - 1], variances[k - 1], b, N, cache)
