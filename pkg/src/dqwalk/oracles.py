"""Reference values: enumeration, integer-lattice recursion, naive baselines.

None of these share code paths with the quantization scheme; they are the
independent side of every accuracy check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson

from dqwalk.errors import OracleUnavailableError
from dqwalk.normal import norm_cdf, norm_pdf
from dqwalk.walk import MASS_TOL, AtomicDistribution, walk_moments

MAX_BRUTE_FORCE = 25
MAX_LATTICE_STEPS = 10**6
POISSON_TAIL = 1e-15


def brute_force_law(spec) -> AtomicDistribution:
    """Exact law from all 2**n outcomes, equal sums merged at 1e-12."""
    if spec.n > MAX_BRUTE_FORCE:
        raise OracleUnavailableError(
            f"brute-force enumeration refused for n={spec.n} > {MAX_BRUTE_FORCE}"
        )
    sums = np.zeros(1)
    probs = np.ones(1)
    for a, p in zip(spec.alphas, spec.probs):
        sums = np.concatenate((sums, sums + a))
        probs = np.concatenate((probs * (1.0 - p), probs * p))
    order = np.argsort(sums, kind="stable")
    sums, probs = sums[order], probs[order]
    starts = np.flatnonzero(np.concatenate(([True], np.diff(sums) > 1e-12)))
    return AtomicDistribution(sums[starts], np.add.reduceat(probs, starts))


@dataclass(frozen=True, eq=False)
class LatticeLaw:
    """Law on the lattice ``{0, u, 2u, ...}``; ``weights[m] = P(X = m u)``."""

    scale: float
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0.0) or abs(math.fsum(w) - 1.0) > MASS_TOL:
            raise ValueError("lattice weights must be nonnegative and sum to 1")

    @property
    def points(self):
        return self.scale * np.arange(self.weights.size)

    def to_distribution(self, drop_zero: bool = True) -> AtomicDistribution:
        x, w = self.points, self.weights
        if drop_zero:
            keep = w > 0.0
            x, w = x[keep], w[keep]
        return AtomicDistribution(x, w)


def lattice_tree_law(spec, u: float = 1.0) -> LatticeLaw:
    """Recombining-tree recursion on the lattice of pitch ``u``.

    Every ``alpha_i / u`` must be an integer (within 1e-9).
    """
    if not u > 0.0:
        raise ValueError("lattice pitch must be > 0")
    ratios = spec.alphas / u
    steps = np.rint(ratios)
    if np.any(np.abs(ratios - steps) > 1e-9) or np.any(steps < 1):
        raise OracleUnavailableError(f"coefficients are not integer multiples of u={u}")
    steps = steps.astype(np.int64)
    if steps.sum() > MAX_LATTICE_STEPS:
        raise OracleUnavailableError("lattice too large for the recombining tree")
    w = np.ones(1)
    for m, p in zip(steps, spec.probs):
        nxt = np.zeros(w.size + m)
        nxt[: w.size] = (1.0 - p) * w
        nxt[m:] += p * w
        w = nxt
    return LatticeLaw(float(u), w)


def gaussian_baseline(spec, K: float) -> float:
    """E (Y - K)_+ for Y normal with the walk's mean and variance."""
    mu, var = walk_moments(spec)
    if not var > 0.0:
        raise ValueError("gaussian baseline needs positive variance")
    sigma = math.sqrt(var)
    d = (mu - K) / sigma
    return float((mu - K) * norm_cdf(d) + sigma * norm_pdf(d))


def poisson_baseline(spec, K: float) -> float:
    """E (c P - K)_+ for P ~ Poisson(sum p_i), c the common coefficient.

    Only defined for homogeneous walks.
    """
    if spec.n == 0 or np.any(spec.alphas != spec.alphas[0]):
        raise OracleUnavailableError("Poisson baseline needs equal coefficients")
    c = float(spec.alphas[0])
    if c != 1.0:
        return c * poisson_baseline(type(spec)(np.ones(spec.n), spec.probs), K / c)
    lam = math.fsum(spec.probs)
    top = int(poisson.isf(POISSON_TAIL, lam)) + 1
    start = max(int(math.floor(K)) + 1, 0)
    if start > top:
        return 0.0
    j = np.arange(start, top + 1)
    return math.fsum((j - K) * poisson.pmf(j, lam))
