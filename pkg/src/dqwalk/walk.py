"""Walk specifications, discrete laws and the test-scenario generator."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from dqwalk.config import format_kv, get_float, get_int, parse_kv
from dqwalk.errors import ConfigError

P_FLOOR = 1e-12
P_CEIL = 1.0 - 1e-12
MASS_TOL = 1e-12


def _frozen(values):
    arr = np.array(values, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class WalkSpec:
    """Coefficients and success probabilities of ``X = sum_i alpha_i Z_i``.

    An empty walk (``n == 0``) is allowed and stands for the point mass at 0;
    it arises when the only term of a one-term walk is removed.
    """

    alphas: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        alphas = _frozen(self.alphas)
        probs = _frozen(self.probs)
        if alphas.shape != probs.shape:
            raise ValueError(
                f"alphas and probs differ in length ({alphas.size} vs {probs.size})"
            )
        if np.any(~(alphas > 0.0)) or np.any(~np.isfinite(alphas)):
            raise ValueError("every alpha must be finite and > 0")
        if np.any(~((probs > 0.0) & (probs < 1.0))):
            raise ValueError("every p must lie strictly inside (0, 1)")
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "probs", probs)

    @property
    def n(self) -> int:
        return int(self.alphas.size)

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, WalkSpec):
            return NotImplemented
        return np.array_equal(self.alphas, other.alphas) and np.array_equal(
            self.probs, other.probs
        )

    @property
    def total(self) -> float:
        """Upper end of the support, ``sum_i alpha_i``."""
        return float(np.cumsum(self.alphas)[-1]) if self.n else 0.0


def walk_moments(spec: WalkSpec) -> tuple[float, float]:
    """Mean and variance of the walk."""
    a, p = spec.alphas, spec.probs
    mean = math.fsum(a * p)
    var = math.fsum(a * a * p * (1.0 - p))
    return mean, var


def restrict_walk(spec: WalkSpec, skip: int) -> WalkSpec:
    """The walk with term ``skip`` removed (0-based)."""
    if not 0 <= skip < spec.n:
        raise IndexError(f"skip index {skip} out of range for n={spec.n}")
    keep = np.arange(spec.n) != skip
    return WalkSpec(spec.alphas[keep], spec.probs[keep])


@dataclass(frozen=True, eq=False)
class AtomicDistribution:
    """Finitely supported law: strictly increasing points with weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = _frozen(self.points)
        weights = _frozen(self.weights)
        if points.shape != weights.shape or points.size == 0:
            raise ValueError("points and weights must be non-empty and of equal length")
        if np.any(np.diff(points) <= 0.0):
            raise ValueError("points must be strictly increasing")
        if np.any(weights < 0.0):
            raise ValueError("weights must be nonnegative")
        total = float(np.sum(weights))
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"weights sum to {total!r}, not 1")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def point_mass(cls, x=0.0):
        return cls([x], [1.0])

    def __len__(self):
        return int(self.points.size)

    def mass(self) -> float:
        return math.fsum(self.weights)

    def mean(self) -> float:
        return math.fsum(self.points * self.weights)

    def variance(self) -> float:
        m = self.mean()
        return math.fsum((self.points - m) ** 2 * self.weights)

    def expect(self, f) -> float:
        """E f(X) for a vectorized ``f``, compensated summation."""
        return math.fsum(np.asarray(f(self.points), dtype=float) * self.weights)

    def nonzero(self) -> "AtomicDistribution":
        """The same law with zero-weight atoms dropped."""
        keep = self.weights > 0.0
        return AtomicDistribution(self.points[keep], self.weights[keep])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["point", "weight"])
        for x, w in zip(self.points, self.weights):
            writer.writerow([format(x, ".17g"), format(w, ".17g")])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "AtomicDistribution":
        rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
        if rows and rows[0] == ["point", "weight"]:
            rows = rows[1:]
        return cls([float(r[0]) for r in rows], [float(r[1]) for r in rows])


ALPHA_LAWS = ("constant", "uniform_integers", "uniform_real")


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters of a random test scenario.

    ``alpha_law`` is one of ``constant`` (every alpha equals ``alpha_lo``),
    ``uniform_integers`` (inclusive integer range) or ``uniform_real``
    (``(alpha_lo, alpha_hi]``). Probabilities follow
    ``p_i = p0 * exp(sigma * xi_i - sigma**2 / 2)`` with iid standard normal
    ``xi_i``, clamped to ``[1e-12, 1 - 1e-12]``.
    """

    n: int
    p0: float
    sigma: float = 0.5
    alpha_law: str = "constant"
    alpha_lo: float = 1.0
    alpha_hi: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"scenario needs n >= 1, got {self.n}")
        if not 0.0 < self.p0 < 1.0:
            raise ConfigError(f"p0 must lie in (0, 1), got {self.p0}")
        if self.sigma < 0.0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")
        if self.alpha_law not in ALPHA_LAWS:
            raise ConfigError(f"alpha_law must be one of {ALPHA_LAWS}, got {self.alpha_law!r}")
        if self.seed < 0:
            raise ConfigError("seed must be an unsigned integer")
        if self.alpha_law == "constant":
            if self.alpha_lo <= 0.0:
                raise ConfigError("constant alpha must be > 0")
        elif self.alpha_hi < self.alpha_lo or self.alpha_hi <= 0.0:
            raise ConfigError("alpha range must satisfy alpha_lo <= alpha_hi, alpha_hi > 0")
        if self.alpha_law == "uniform_integers" and self.alpha_lo < 1:
            raise ConfigError("uniform_integers needs alpha_lo >= 1")

    def to_mapping(self) -> dict:
        return {
            "n": str(self.n),
            "alpha_law": self.alpha_law,
            "alpha_lo": repr(float(self.alpha_lo)),
            "alpha_hi": repr(float(self.alpha_hi)),
            "p0": repr(float(self.p0)),
            "sigma": repr(float(self.sigma)),
            "seed": str(self.seed),
        }

    def to_text(self) -> str:
        return format_kv(self.to_mapping())

    @classmethod
    def from_mapping(cls, entries) -> "ScenarioConfig":
        law = entries.get("alpha_law", "constant")
        lo = get_float(entries, "alpha_lo", 1.0)
        return cls(
            n=get_int(entries, "n"),
            p0=get_float(entries, "p0"),
            sigma=get_float(entries, "sigma", 0.5),
            alpha_law=law,
            alpha_lo=lo,
            alpha_hi=get_float(entries, "alpha_hi", lo),
            seed=get_int(entries, "seed", 0),
        )

    @classmethod
    def from_text(cls, text: str) -> "ScenarioConfig":
        return cls.from_mapping(parse_kv(text))


def scenario_rng(seed: int) -> np.random.Generator:
    """Philox counter-based stream; the only RNG used by scenario generation."""
    return np.random.Generator(np.random.Philox(seed))


def generate_scenario(config: ScenarioConfig) -> WalkSpec:
    """Draw a walk: all alphas first, then all xi, from one Philox stream."""
    rng = scenario_rng(config.seed)
    n = config.n
    if config.alpha_law == "constant":
        alphas = np.full(n, float(config.alpha_lo))
    elif config.alpha_law == "uniform_integers":
        alphas = rng.integers(int(config.alpha_lo), int(config.alpha_hi), size=n,
                              endpoint=True).astype(float)
    else:
        # 1 - U lies in (0, 1], so alpha never hits a zero lower bound
        u = 1.0 - rng.random(n)
        alphas = config.alpha_lo + (config.alpha_hi - config.alpha_lo) * u
    xi = rng.standard_normal(n)
    s = config.sigma
    probs = np.clip(config.p0 * np.exp(s * xi - 0.5 * s * s), P_FLOOR, P_CEIL)
    return WalkSpec(alphas, probs)
