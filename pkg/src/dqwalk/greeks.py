"""Sensitivities of ``f(alpha, p) = E (sum_i alpha_i Z_i - K)_+``.

Both derivatives only need the law of the walk with term ``l`` left out:

    df/dp_l     = E (X_{-l} - (K - alpha_l))_+ - E (X_{-l} - K)_+
    df/dalpha_l = p_l * P(X_{-l} >= K - alpha_l)

All n skip-laws are propagated together on the full walk's layer grids. At
layer ``l`` the l-th column only receives the ``Z = 0`` branch, so every
column reuses the same two segment lookups per source knot.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from dqwalk.dualquant import split_many
from dqwalk.grids import iter_layer_grids
from dqwalk.pricing import call_price
from dqwalk.propagate import PropagationConfig
from dqwalk.walk import AtomicDistribution

ATOM_SNAP = 1e-12


def _transition(idx, lam, m_new):
    m_prev = idx.size
    rows = np.concatenate((np.arange(m_prev), np.arange(m_prev)))
    cols = np.concatenate((idx, idx + 1))
    vals = np.concatenate((lam, 1.0 - lam))
    return sparse.csr_matrix((vals, (rows, cols)), shape=(m_prev, m_new))


def skip_layer_laws(spec, config: PropagationConfig | None = None, grids=None):
    """Quantized laws of ``sum_{i != l} alpha_i Z_i`` for every l (0-based list)."""
    config = PropagationConfig() if config is None else config
    if config.aggregation != 1:
        raise ValueError("skip-layer propagation works one term per layer (aggregation=1)")
    n = spec.n
    if n == 0:
        return []
    knots = np.zeros(1)
    weights = np.ones((n, 1))
    layers = iter_layer_grids(spec, range(1, n + 1), config.grid_size, grids,
                              config.exact_support)
    for k, grid in enumerate(layers):
        a, p = spec.alphas[k], spec.probs[k]
        m = grid.knots.size
        idx0, lam0, _ = split_many(grid, knots)
        idx1, lam1, _ = split_many(grid, knots + a)
        stay = _transition(idx0, lam0, m)
        step = (1.0 - p) * stay + p * _transition(idx1, lam1, m)
        skipped = weights[k] @ stay
        weights = np.asarray(weights @ step)
        weights[k] = skipped
        knots = grid.knots
    return [AtomicDistribution(knots, w) for w in weights]


def dprice_dp(skip_law, K: float, alpha_l: float) -> float:
    return call_price(skip_law, K - alpha_l) - call_price(skip_law, K)


def dprice_dalpha(skip_law, K: float, alpha_l: float, p_l: float) -> float:
    """``p_l * P(X_{-l} >= K - alpha_l)``; atoms within 1e-12 of the level count."""
    above = skip_law.points >= K - alpha_l - ATOM_SNAP
    return p_l * math.fsum(skip_law.weights[above])


@dataclass
class GreeksReport:
    strike: float
    alphas: np.ndarray
    probs: np.ndarray
    dp: np.ndarray
    dalpha: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["l", "alpha_l", "p_l", "dp", "dalpha"])
        for l, row in enumerate(zip(self.alphas, self.probs, self.dp, self.dalpha), start=1):
            writer.writerow([l] + [format(v, ".17g") for v in row])
        return buf.getvalue()


def greeks_from_laws(spec, laws, K: float) -> GreeksReport:
    dp = np.array([dprice_dp(law, K, a) for law, a in zip(laws, spec.alphas)])
    dalpha = np.array([
        dprice_dalpha(law, K, a, p) for law, a, p in zip(laws, spec.alphas, spec.probs)
    ])
    return GreeksReport(float(K), spec.alphas, spec.probs, dp, dalpha)


def greeks_report(spec, K: float, config: PropagationConfig | None = None,
                  grids=None) -> GreeksReport:
    return greeks_from_laws(spec, skip_layer_laws(spec, config, grids), K)
