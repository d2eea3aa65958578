"""Scalar special functions used by the error-rate formulas and the
closed-form power approximations.

All functions accept numpy arrays and broadcast elementwise.
"""
import math

import numpy as np
from scipy.special import erfc

__all__ = ["gaussian_q", "lambert_w0", "lambert_w0_exp", "hyp2f1_special", "h_func"]

_INV_E = math.exp(-1.0)
_SERIES_TOL = 1e-17
_MAX_TERMS = 20000
# Above this z the direct series is slow; switch to the 1 - z connection formula.
_Z_SWITCH = 0.9


def gaussian_q(x):
    """Gaussian tail probability Q(x) = P(N(0,1) > x)."""
    out = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return out if np.ndim(out) else float(out)


def _w0_initial(x):
    # Winitzki's global approximation, replaced by the branch-point series
    # close to -1/e and by the asymptotic logs for large x.
    w = np.empty_like(x)
    near = x < -0.25
    big = x > 3.0
    mid = ~(near | big)

    p = np.sqrt(np.maximum(2.0 * (math.e * x[near] + 1.0), 0.0))
    w[near] = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3

    l1 = np.log(x[big])
    l2 = np.log(l1)
    w[big] = l1 - l2 + l2 / l1

    lx = np.log1p(x[mid])
    w[mid] = lx * (1.0 - np.log1p(lx) / (2.0 + lx))
    return w


def lambert_w0(x):
    """Principal real branch W0 of the Lambert function.

    Solves ``w * exp(w) = x`` for ``w >= -1`` by Halley iteration.

    Raises
    ------
    ValueError
        If any ``x < -1/e``.
    """
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa).astype(float)
    if np.any(np.isnan(xa)):
        raise ValueError("lambert_w0 argument is NaN")
    if np.any(xa < -_INV_E - 1e-15):
        raise ValueError("lambert_w0 is undefined for x < -1/e")
    xa = np.maximum(xa, -_INV_E)

    w = np.zeros_like(xa)
    inf = np.isinf(xa)
    w[inf] = np.inf
    branch = xa == -_INV_E
    w[branch] = -1.0
    work = ~(inf | branch) & (xa != 0.0)
    if np.any(work):
        xv = xa[work]
        wv = _w0_initial(xv)
        for _ in range(60):
            ew = np.exp(wv)
            f = wv * ew - xv
            wp1 = wv + 1.0
            denom = ew * wp1 - (wv + 2.0) * f / (2.0 * wp1)
            # wp1 can vanish only at the branch point, which is excluded above
            step = np.where(denom != 0.0, f / denom, 0.0)
            wv = wv - step
            if np.all(np.abs(step) <= 4e-16 * (1.0 + np.abs(wv))):
                break
        w[work] = wv
    return float(w[0]) if scalar else w


def lambert_w0_exp(log_x):
    """W0(exp(log_x)) without forming exp(log_x).

    Needed when the argument overflows double precision, e.g. when a
    Lagrange multiplier is very small.
    """
    la = np.atleast_1d(np.asarray(log_x, dtype=float))
    out = np.empty_like(la)
    small = la < 600.0
    if np.any(small):
        out[small] = lambert_w0(np.exp(la[small]))
    large = ~small
    if np.any(large):
        # w + log(w) = L, Newton from the asymptotic start
        L = la[large]
        w = L - np.log(L)
        for _ in range(50):
            step = (w + np.log(w) - L) / (1.0 + 1.0 / w)
            w = w - step
            if np.all(np.abs(step) <= 4e-16 * w):
                break
        out[large] = w
    return float(out[0]) if np.ndim(log_x) == 0 else out


def _series_a1(b, c, z):
    """Sum of 2F1(1, b; c; z) for 0 <= z < 1; terms are all positive."""
    z = np.asarray(z, dtype=float)
    term = np.ones_like(z)
    total = np.ones_like(z)
    for n in range(_MAX_TERMS):
        term = term * (b + n) / (c + n) * z
        total = total + term
        if np.all(term <= _SERIES_TOL * total):
            return total
    raise ArithmeticError("hypergeometric series did not converge")


def hyp2f1_special(m, z):
    """Gauss hypergeometric function 2F1(1, m + 1/2; m + 1; z).

    Only this parameter pattern is supported. The direct series is used for
    ``z <= 0.9``; closer to 1 the 1 - z connection formula is used, whose
    second term collapses to ``(1 - z)**(-1/2) * z**(-m)``.

    Parameters
    ----------
    m : float
        Nakagami shape, ``m >= 0.5``.
    z : float or array_like
        Argument in ``[0, 1)``.
    """
    if m < 0.5:
        raise ValueError(f"m must be >= 0.5, got {m}")
    za = np.asarray(z, dtype=float)
    if np.any(za >= 1.0) or np.any(za < 0.0) or np.any(np.isnan(za)):
        raise ValueError("hyp2f1_special requires 0 <= z < 1; the series diverges at z >= 1")
    zf = np.atleast_1d(za)
    out = np.empty_like(zf)
    direct = zf <= _Z_SWITCH
    if np.any(direct):
        out[direct] = _series_a1(m + 0.5, m + 1.0, zf[direct])
    far = ~direct
    if np.any(far):
        zz = zf[far]
        w = 1.0 - zz
        # Gamma(m+1) Gamma(-1/2) / (Gamma(m) Gamma(1/2)) = -2m
        b_coef = math.exp(math.lgamma(m + 1.0) - math.lgamma(m + 0.5)) * math.sqrt(math.pi)
        out[far] = -2.0 * m * _series_a1(m + 0.5, 1.5, w) + b_coef / np.sqrt(w) * zz ** (-m)
    return float(out[0]) if za.ndim == 0 else out


def h_func(x):
    """H(x) = (1 - sqrt(x / (1 + x))) / 2, used by the integer-m BER form."""
    x = np.asarray(x, dtype=float)
    # 1 - sqrt(r) rewritten as (1 - r) / (1 + sqrt(r)) to avoid cancellation
    with np.errstate(invalid="ignore"):
        r = np.where(np.isinf(x), 1.0, x / (1.0 + x))
    out = 0.5 / ((1.0 + x) * (1.0 + np.sqrt(r)))
    return out if out.ndim else float(out)
