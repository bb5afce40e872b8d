"""Synthetic CDO tranches in the one-factor Gaussian copula model.

Given the common factor ``U = u`` the fractional portfolio loss at time t is
the walk ``sum_i alpha_i Z_i`` with ``alpha_i = (1 - R_i) N_i / N`` and
``P(Z_i = 1) = F(P(tau_i <= t), u)``. Default times have flat hazard
marginals ``P(tau_i <= t) = 1 - exp(-h_i t)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from dqwalk.config import get_float, get_float_list, get_int
from dqwalk.errors import ConfigError, NumericalError
from dqwalk.normal import norm_cdf, norm_pdf, norm_ppf
from dqwalk.pricing import call_price
from dqwalk.propagate import PropagationConfig, propagate_walk
from dqwalk.walk import P_CEIL, P_FLOOR, WalkSpec

DEFAULT_U_NODES = 64
DEFAULT_T_NODES = 25
# factor quadrature runs in y = Phi^{-1}(u) over [-8, 8]; Phi(8) < 1 in doubles
FACTOR_HALF_WIDTH = 8.0


@dataclass(frozen=True, eq=False)
class PortfolioSpec:
    notionals: np.ndarray
    recoveries: np.ndarray
    hazards: np.ndarray
    rho: float

    def __post_init__(self):
        notionals = np.asarray(self.notionals, dtype=float).reshape(-1)
        recoveries = np.asarray(self.recoveries, dtype=float).reshape(-1)
        hazards = np.asarray(self.hazards, dtype=float).reshape(-1)
        if not notionals.size == recoveries.size == hazards.size:
            raise ConfigError("notionals, recoveries and hazards must have equal length")
        if notionals.size == 0 or np.any(notionals <= 0.0):
            raise ConfigError("notionals must be positive")
        if np.any((recoveries < 0.0) | (recoveries >= 1.0)):
            raise ConfigError("recoveries must lie in [0, 1)")
        if np.any(hazards < 0.0):
            raise ConfigError("hazard rates must be >= 0")
        if not 0.0 <= self.rho < 1.0:
            raise ConfigError(f"copula correlation must lie in [0, 1), got {self.rho}")
        object.__setattr__(self, "notionals", notionals)
        object.__setattr__(self, "recoveries", recoveries)
        object.__setattr__(self, "hazards", hazards)
        object.__setattr__(self, "rho", float(self.rho))

    @classmethod
    def homogeneous(cls, n, notional=1.0, recovery=0.4, hazard=0.01, rho=0.3):
        return cls(np.full(n, notional), np.full(n, recovery), np.full(n, hazard), rho)

    @classmethod
    def from_mapping(cls, entries) -> "PortfolioSpec":
        """Either per-name lists (``notionals``, ``recoveries``, ``hazards``) or
        ``n_names`` with scalar ``notional``, ``recovery``, ``hazard``."""
        rho = get_float(entries, "rho")
        if "n_names" in entries:
            n = get_int(entries, "n_names")
            if n < 1:
                raise ConfigError("n_names must be >= 1")
            return cls.homogeneous(
                n,
                get_float(entries, "notional", 1.0),
                get_float(entries, "recovery", 0.4),
                get_float(entries, "hazard"),
                rho,
            )
        return cls(
            get_float_list(entries, "notionals"),
            get_float_list(entries, "recoveries"),
            get_float_list(entries, "hazards"),
            rho,
        )

    @property
    def n(self) -> int:
        return int(self.notionals.size)

    @property
    def alphas(self) -> np.ndarray:
        return (1.0 - self.recoveries) * self.notionals / math.fsum(self.notionals)

    def default_probabilities(self, t: float) -> np.ndarray:
        return -np.expm1(-self.hazards * t)


@dataclass(frozen=True)
class TrancheSpec:
    a: float
    b: float
    maturity: float
    rate: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.a < self.b <= 1.0:
            raise ConfigError(f"tranche needs 0 <= a < b <= 1, got [{self.a}, {self.b}]")
        if not self.maturity > 0.0:
            raise ConfigError("maturity must be > 0")
        if self.rate < 0.0:
            raise ConfigError("interest rate must be >= 0")

    @property
    def label(self) -> str:
        return f"{self.a:g}-{self.b:g}"


def gaussian_copula(p, u, rho: float):
    """Conditional default probability given the factor value ``u``."""
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"copula correlation must lie in [0, 1), got {rho}")
    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    if rho == 0.0:
        # avoids 0 * inf at u in {0, 1}
        out = np.broadcast_to(p, np.broadcast(p, u).shape)
    else:
        out = norm_cdf((norm_ppf(p) - rho * norm_ppf(u)) / math.sqrt(1.0 - rho * rho))
    out = np.clip(out, P_FLOOR, P_CEIL)
    return float(out) if out.ndim == 0 else out


def conditional_walk(portfolio: PortfolioSpec, t: float, u: float) -> WalkSpec:
    if not t > 0.0:
        raise ValueError("t must be > 0")
    if not 0.0 < u < 1.0:
        raise ValueError("u must lie in (0, 1)")
    marginal = np.clip(portfolio.default_probabilities(t), P_FLOOR, P_CEIL)
    return WalkSpec(portfolio.alphas, gaussian_copula(marginal, u, portfolio.rho))


def factor_nodes(count: int, probit: bool = True):
    """Quadrature nodes and weights for integrals over the factor ``u`` in (0, 1).

    Conditional default probabilities behave like powers of ``-log u`` near
    the ends of (0, 1), where plain Gauss-Legendre converges only
    algebraically. With ``probit`` on, Gauss-Legendre runs in
    ``y = Phi^{-1}(u)`` on ``[-8, 8]`` against the weight ``phi(y)``, where
    the integrand is smooth; weights are renormalized to sum to one (the cut
    tails hold about 1e-15 of mass). ``probit=False`` gives the plain rule.
    """
    if count < 1:
        raise ValueError("need at least one quadrature node")
    x, w = np.polynomial.legendre.leggauss(count)
    if not probit:
        return 0.5 * (x + 1.0), 0.5 * w
    y = FACTOR_HALF_WIDTH * x
    w = w * norm_pdf(y)
    return norm_cdf(y), w / math.fsum(w)


def tranche_expected_loss(portfolio: PortfolioSpec, tranche: TrancheSpec, t: float,
                          config: PropagationConfig | None = None,
                          u_nodes: int = DEFAULT_U_NODES, grids=None) -> float:
    """E[(l_t - a)_+ - (l_t - b)_+], integrating the factor with ``factor_nodes``."""
    if t <= 0.0:
        return 0.0
    marginal = portfolio.default_probabilities(t)
    # names that cannot have defaulted by t carry no loss
    keep = marginal > 0.0
    if not keep.any():
        return 0.0
    alphas = portfolio.alphas[keep]
    marginal = np.clip(marginal[keep], P_FLOOR, P_CEIL)
    nodes, weights = factor_nodes(u_nodes)
    values = []
    for u in nodes:
        walk = WalkSpec(alphas, gaussian_copula(marginal, u, portfolio.rho))
        law = propagate_walk(walk, config, grids).final
        values.append(call_price(law, tranche.a) - call_price(law, tranche.b))
    return math.fsum(np.asarray(values) * weights)


def spread_from_curve(times, expected_losses, tranche: TrancheSpec) -> float:
    """Fair spread from expected tranche losses sampled on ``times`` (0 .. T)."""
    times = np.asarray(times, dtype=float)
    ef = np.asarray(expected_losses, dtype=float)
    r, T, width = tranche.rate, times[-1], tranche.b - tranche.a
    disc = np.exp(-r * times)
    discounted = float(simpson(disc * ef, x=times))
    if r == 0.0:
        numerator = ef[-1]
        denominator = width * T - discounted
    else:
        numerator = math.exp(-r * T) * ef[-1] + r * discounted
        denominator = width / r * -math.expm1(-r * T) - discounted
    # a fully eroded tranche leaves only rounding noise in the premium leg
    if not denominator > 1e-12 * width * T:
        raise NumericalError(f"tranche {tranche.label} is wiped out: premium leg {denominator!r}")
    return numerator / denominator


def expected_loss_curve(portfolio, tranche, config=None, u_nodes=DEFAULT_U_NODES,
                        t_nodes=DEFAULT_T_NODES, grids=None, threads=1):
    """Equally spaced times on [0, T] and the expected tranche loss at each."""
    if t_nodes < 2:
        raise ValueError("need at least two time nodes")
    times = np.linspace(0.0, tranche.maturity, t_nodes)

    def at(t):
        return tranche_expected_loss(portfolio, tranche, t, config, u_nodes, grids)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            losses = list(pool.map(at, times[1:]))
    else:
        losses = [at(t) for t in times[1:]]
    return times, np.array([0.0] + losses)


def fair_spread(portfolio: PortfolioSpec, tranche: TrancheSpec,
                config: PropagationConfig | None = None, u_nodes: int = DEFAULT_U_NODES,
                t_nodes: int = DEFAULT_T_NODES, grids=None, threads: int = 1) -> float:
    times, losses = expected_loss_curve(portfolio, tranche, config, u_nodes, t_nodes,
                                        grids, threads)
    return spread_from_curve(times, losses, tranche)
