"""Closed-form bit error rates of the HP and LP bit pairs of 16-HQAM under
imperfect sensing, for a fixed channel gain and averaged over Nakagami-m
fading.

Every formula is a weighted sum over true state j, sensing decision i and a
small set of Q-function terms whose SNR coefficient depends on the alpha used
under decision i. Powers, gains and variances are linear throughout.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import comb

from .channel import joint_sensing_probs
from .special import gaussian_q, h_func, hyp2f1_special

__all__ = [
    "ModulationCoeffs",
    "ber_hp_instant",
    "ber_lp_instant",
    "ber_lp_upper_instant",
    "ber_hp_nakagami",
    "ber_lp_nakagami",
    "ber_lp_upper_nakagami",
    "ber_integer_m",
    "nakagami_q_average",
    "nakagami_q_average_int",
    "weighted_objective",
]

RHO = (2.0, 1.0)


@dataclass(frozen=True, eq=False)
class ModulationCoeffs:
    """SNR coefficients of the Q-function terms.

    ``c[l, i]`` belong to the HP pair and ``beta[l, i]`` to the LP pair,
    with ``i`` the sensing decision whose alpha is used.
    """

    alpha0: float
    alpha1: float
    c: np.ndarray
    beta: np.ndarray
    rho: tuple = RHO

    @classmethod
    def from_alphas(cls, alpha0, alpha1=None):
        alpha1 = alpha0 if alpha1 is None else alpha1
        a = np.array([alpha0, alpha1], dtype=float)
        if np.any(a <= 0):
            raise ValueError("alpha must be positive")
        den = (a + 1.0) ** 2 + 1.0
        c = np.stack([(a + 2.0) ** 2 / den, a ** 2 / den])
        beta = np.stack([1.0 / den, (2.0 * a + 1.0) ** 2 / den, (2.0 * a + 3.0) ** 2 / den])
        return cls(float(alpha0), float(alpha1), c, beta)

    def terms(self, kind):
        """(weight, coefficient per decision) pairs of the requested BER."""
        if kind == "hp":
            return [(1.0, self.c[0]), (1.0, self.c[1])]
        if kind == "lp":
            return [(2.0, self.beta[0]), (1.0, self.beta[1]), (-1.0, self.beta[2])]
        if kind == "lp_upper":
            return [(2.0, self.beta[0]), (1.0, self.beta[1])]
        raise ValueError(f"unknown BER kind {kind!r}")


def _combine(kind, p0, p1, coeffs, s, env, per_term):
    joint = joint_sensing_probs(s)
    var = env.state_variances
    powers = (p0, p1)
    total = 0.0
    for j in (0, 1):
        for i in (0, 1):
            w = joint[j, i]
            if w == 0.0:
                continue
            for weight, coef in coeffs.terms(kind):
                total = total + w * weight * per_term(coef[i], powers[i], var[j])
    return 0.5 * total


def _instant(kind, p0, p1, h2, alpha0, alpha1, s, env):
    coeffs = ModulationCoeffs.from_alphas(alpha0, alpha1)
    h2 = np.asarray(h2, dtype=float)

    def term(coef, p, var):
        return gaussian_q(np.sqrt(coef * np.asarray(p, dtype=float) * h2 / var))

    return _combine(kind, p0, p1, coeffs, s, env, term)


def ber_hp_instant(p0, p1, h2, alpha0, alpha1, s, env):
    """BER of the HP pair for channel power gain ``h2``."""
    return _instant("hp", p0, p1, h2, alpha0, alpha1, s, env)


def ber_lp_instant(p0, p1, h2, alpha0, alpha1, s, env):
    """BER of the LP pair for channel power gain ``h2``."""
    return _instant("lp", p0, p1, h2, alpha0, alpha1, s, env)


def ber_lp_upper_instant(p0, p1, h2, alpha0, alpha1, s, env):
    """LP BER with the negatively weighted Q term dropped (convex in power)."""
    return _instant("lp_upper", p0, p1, h2, alpha0, alpha1, s, env)


def nakagami_q_average(x, m):
    """E[Q(sqrt(2 m x Z))] for Z ~ Gamma(m, 1/m), in hypergeometric form.

    ``x`` is the per-term ratio ``coef * P * omega / (2 m sigma^2)``.
    """
    x = np.asarray(x, dtype=float)
    xf = np.atleast_1d(x)
    out = np.full(xf.shape, 0.5)
    pos = xf > 0
    if np.any(pos):
        xp = xf[pos]
        pref = math.exp(math.lgamma(m + 0.5) - math.lgamma(m + 1.0)) / (2.0 * math.sqrt(math.pi))
        f = hyp2f1_special(m, 1.0 / (1.0 + xp))
        out[pos] = pref * np.sqrt(xp) * (1.0 + xp) ** (-(m + 0.5)) * f
    return out.reshape(x.shape) if x.ndim else float(out[0])


def nakagami_q_average_int(x, m):
    """Finite-sum form of :func:`nakagami_q_average` for integer ``m``."""
    if int(m) != m or m < 1:
        raise ValueError(f"integer m >= 1 required, got {m}")
    m = int(m)
    hx = h_func(x)
    acc = 0.0
    for r in range(m):
        acc = acc + comb(m - 1 + r, r, exact=True) * (1.0 - hx) ** r
    return hx ** m * acc


def _averaged(kind, p0, p1, alpha0, alpha1, s, env, m, omega, q_avg):
    m = env.h_spec.m if m is None else m
    omega = env.h_spec.omega if omega is None else omega
    coeffs = ModulationCoeffs.from_alphas(alpha0, alpha1)

    def term(coef, p, var):
        x = coef * np.asarray(p, dtype=float) * omega / (2.0 * m * var)
        return q_avg(x, m)

    return _combine(kind, p0, p1, coeffs, s, env, term)


def ber_hp_nakagami(p0, p1, alpha0, alpha1, s, env, m=None, omega=None):
    """HP BER averaged over Nakagami-m fading of the transmission link.

    ``m`` and ``omega`` default to ``env.h_spec``.
    """
    return _averaged("hp", p0, p1, alpha0, alpha1, s, env, m, omega, nakagami_q_average)


def ber_lp_nakagami(p0, p1, alpha0, alpha1, s, env, m=None, omega=None):
    return _averaged("lp", p0, p1, alpha0, alpha1, s, env, m, omega, nakagami_q_average)


def ber_lp_upper_nakagami(p0, p1, alpha0, alpha1, s, env, m=None, omega=None):
    return _averaged("lp_upper", p0, p1, alpha0, alpha1, s, env, m, omega, nakagami_q_average)


def ber_integer_m(kind, p0, p1, alpha0, alpha1, s, env, m=None, omega=None):
    """Averaged BER for integer ``m`` through the H(x) finite sum.

    ``kind`` is ``"hp"``, ``"lp"`` or ``"lp_upper"``. The LP form applies the
    same reduction to each of its three terms (weights +2, +1, -1).
    """
    return _averaged(kind, p0, p1, alpha0, alpha1, s, env, m, omega, nakagami_q_average_int)


def weighted_objective(lam, p0, p1, alpha0, alpha1, s, env, h2=None,
                       use_upper_bound=False, m=None, omega=None):
    """``lam * BER_HP + (1 - lam) * BER_LP``.

    With ``h2`` given the instantaneous BERs are used, otherwise the
    Nakagami-averaged ones.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    lp_kind = "lp_upper" if use_upper_bound else "lp"
    if h2 is None:
        hp = _averaged("hp", p0, p1, alpha0, alpha1, s, env, m, omega, nakagami_q_average)
        lp = _averaged(lp_kind, p0, p1, alpha0, alpha1, s, env, m, omega, nakagami_q_average)
    else:
        hp = _instant("hp", p0, p1, h2, alpha0, alpha1, s, env)
        lp = _instant(lp_kind, p0, p1, h2, alpha0, alpha1, s, env)
    return lam * hp + (1.0 - lam) * lp
