"""Standard normal density, distribution function and quantile function."""

import math

import numpy as np
from scipy.special import erfc

SQRT2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def norm_pdf(x):
    x = np.asarray(x, dtype=float)
    return INV_SQRT_2PI * np.exp(-0.5 * x * x)


def norm_cdf(x):
    """Phi(x), accurate in both tails (erfc never subtracts from 1)."""
    x = np.asarray(x, dtype=float)
    return 0.5 * erfc(-x / SQRT2)


def norm_sf(x):
    """1 - Phi(x) without cancellation."""
    x = np.asarray(x, dtype=float)
    return 0.5 * erfc(x / SQRT2)


def norm_mass(lo, hi):
    """P(lo <= G <= hi) for G ~ N(0,1), evaluated in the tail it lives in."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    upper = lo > 0.0
    return np.where(upper, norm_sf(lo) - norm_sf(hi), norm_cdf(hi) - norm_cdf(lo))


# Wichura's AS241 (PPND16) rational approximations, relative error ~1e-16.
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _poly(coefs, x):
    acc = np.zeros_like(x) + coefs[-1]
    for c in coefs[-2::-1]:
        acc = acc * x + c
    return acc


def norm_ppf(p):
    """Inverse of Phi on (0, 1); returns -inf/inf at 0/1."""
    p = np.asarray(p, dtype=float)
    scalar = p.ndim == 0
    p = np.atleast_1d(p)
    if np.any((p < 0.0) | (p > 1.0) | np.isnan(p)):
        raise ValueError("norm_ppf requires probabilities in [0, 1]")
    q = p - 0.5
    out = np.empty_like(p)

    central = np.abs(q) <= 0.425
    if central.any():
        qc = q[central]
        r = 0.180625 - qc * qc
        out[central] = qc * _poly(_A, r) / _poly(_B, r)

    tail = ~central
    if tail.any():
        pt = p[tail]
        r = np.minimum(pt, 1.0 - pt)
        with np.errstate(divide="ignore"):
            r = np.sqrt(-np.log(r))
        val = np.empty_like(r)
        near = r <= 5.0
        rn = r[near] - 1.6
        val[near] = _poly(_C, rn) / _poly(_D, rn)
        rf = r[~near] - 5.0
        with np.errstate(invalid="ignore"):
            val[~near] = _poly(_E, rf) / _poly(_F, rf)
        val[np.isinf(r)] = np.inf
        val = np.where(q[tail] < 0.0, -val, val)
        out[tail] = val

    return float(out[0]) if scalar else out
