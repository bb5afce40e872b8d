"""Cubature of call payoffs against a discrete law, and Romberg extrapolation."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from dqwalk.normal import norm_cdf, norm_pdf


def call_price(dist, K: float) -> float:
    """E (X - K)_+ with compensated summation in ascending atom order."""
    return math.fsum(np.maximum(dist.points - K, 0.0) * dist.weights)


def put_price(dist, K: float) -> float:
    return math.fsum(np.maximum(K - dist.points, 0.0) * dist.weights)


def smoothed_call(x, eps: float):
    """phi_eps(x) = E (x + eps*Y)_+ with Y ~ N(0, 1).

    For x > 0 the identity ``phi_eps(x) = x + phi_eps(-x)`` keeps the small
    Gaussian correction from being swamped by ``x``.
    """
    x = np.asarray(x, dtype=float)
    s = -np.abs(x) / eps
    tail = eps * (s * norm_cdf(s) + norm_pdf(s))
    return np.where(x > 0.0, x + tail, tail)


def smoothed_call_price(dist, K: float, eps: float) -> float:
    if not eps > 0.0:
        raise ValueError(f"smoothing width must be > 0, got {eps}")
    return math.fsum(smoothed_call(dist.points - K, eps) * dist.weights)


def smoothing_lipschitz(eps: float) -> float:
    """Lipschitz constant of phi_eps', i.e. the peak of the N(0, eps^2) density."""
    return 1.0 / (eps * math.sqrt(2.0 * math.pi))


def romberg_price(price_N1: float, N1: int, price_N2: float, N2: int) -> float:
    """Cancel a leading ``c / N**2`` error term between two grid sizes."""
    if N1 < 1 or N2 < 1:
        raise ValueError("grid sizes must be >= 1")
    if N1 == N2:
        raise ValueError("Romberg extrapolation needs two different grid sizes")
    s1, s2 = float(N1) ** 2, float(N2) ** 2
    return (s1 * price_N1 - s2 * price_N2) / (s1 - s2)


def _suffix_fsum(values):
    """Suffix sums, each accurate like ``math.fsum`` (Neumaier running sums)."""
    out = np.empty(values.size + 1)
    s = c = 0.0
    out[-1] = 0.0
    for i in range(values.size - 1, -1, -1):
        v = float(values[i])
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
        out[i] = s + c
    return out


@dataclass
class PriceTable:
    strikes: np.ndarray
    values: np.ndarray

    def to_csv(self, method: str | None = None, reference=None) -> str:
        """Rows ``strike, value[, abs_error, method]``."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = ["strike", "value"]
        if reference is not None:
            header.append("abs_error")
        if method is not None:
            header.append("method")
        writer.writerow(header)
        for i, (k, v) in enumerate(zip(self.strikes, self.values)):
            row = [format(k, ".17g"), format(v, ".17g")]
            if reference is not None:
                row.append(format(abs(v - reference[i]), ".17g"))
            if method is not None:
                row.append(method)
            writer.writerow(row)
        return buf.getvalue()


def price_table(dist, strikes) -> PriceTable:
    """Call prices for ascending strikes in one pass over the atoms.

    ``E (X - K)_+ = sum_{x_j > K} x_j w_j - K * sum_{x_j > K} w_j`` with the
    two tail sums precomputed once.
    """
    strikes = np.asarray(strikes, dtype=float).reshape(-1)
    if np.any(np.diff(strikes) < 0.0):
        raise ValueError("strikes must be sorted ascending")
    if strikes.size == 0:
        return PriceTable(strikes, np.zeros(0))
    x, w = dist.points, dist.weights
    tail_first = _suffix_fsum(x * w)
    tail_mass = _suffix_fsum(w)
    first = np.searchsorted(x, strikes, side="right")
    values = tail_first[first] - strikes * tail_mass[first]
    # guard against a rounding-level negative price deep out of the money
    return PriceTable(strikes, np.maximum(values, 0.0))
