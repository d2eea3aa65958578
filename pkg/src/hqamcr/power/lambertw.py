"""High-SNR closed-form powers in terms of the Lambert W0 function.

Only the dominant Q-term of the HP error rate is kept, which makes the
stationarity condition solvable in closed form. Valid for perfect sensing
and an objective that weights only the HP bits.
"""
import math

import numpy as np

from ..ber import ModulationCoeffs
from ..channel import joint_sensing_probs
from ..special import lambert_w0_exp

__all__ = ["lambertw_power", "approx_lambertw", "require_perfect_sensing"]

_LOG_32PI = math.log(32.0 * math.pi)


def require_perfect_sensing(s, lam):
    if s.p_detect != 1.0 or s.p_false_alarm != 0.0:
        raise ValueError("the Lambert-W approximation assumes perfect sensing (P_d=1, P_f=0)")
    if lam != 1.0:
        raise ValueError("the Lambert-W approximation assumes lambda = 1")


def lambertw_power(i, rhs, h2, coeffs, s, env):
    """Root of ``Pr * exp(-k P / 2) sqrt(k / P) / (4 sqrt(2 pi)) = rhs`` with
    ``k = c[1, i] h2 / sigma_i^2``, i.e. ``P = W0((k Pr)^2 / (32 pi rhs^2)) / k``.

    ``rhs = 0`` gives ``inf`` and ``h2 = 0`` gives 0.
    """
    rhs, h2 = np.broadcast_arrays(np.asarray(rhs, dtype=float), np.asarray(h2, dtype=float))
    weight = joint_sensing_probs(s)[i, i]
    k = coeffs.c[1, i] * h2 / env.state_variances[i]
    out = np.zeros(rhs.shape)
    out[rhs <= 0] = np.inf
    ok = (rhs > 0) & (k > 0) & (weight > 0)
    if np.any(ok):
        log_arg = 2.0 * np.log(k[ok] * weight / rhs[ok]) - _LOG_32PI
        out[ok] = lambert_w0_exp(log_arg) / k[ok]
    return out if out.ndim else float(out)


def approx_lambertw(h2, g2, duals, s, env, constraints, alpha0=1.0, alpha1=None):
    """Closed-form (P0, P1) under perfect sensing for given multipliers.

    Peak mode: ``P0 = P_pk`` and ``P1`` from the interference multiplier,
    clipped to ``P_pk``. Average mode: ``P0`` from ``mu2 Pr{H0}`` and ``P1``
    from ``mu1 |g|^2 + mu2 Pr{H1}``.
    """
    require_perfect_sensing(s, 1.0)
    coeffs = ModulationCoeffs.from_alphas(alpha0, alpha1)
    h2 = np.asarray(h2, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    if constraints.mode == "peak":
        p0 = np.full(np.broadcast(h2, g2).shape, constraints.p_pk)
        p1 = np.minimum(constraints.p_pk, lambertw_power(1, duals.mu1 * g2, h2, coeffs, s, env))
        return p0, p1
    pr = s.decision_probs()
    p0 = lambertw_power(0, duals.mu2 * pr[0] + 0.0 * g2, h2, coeffs, s, env)
    p1 = lambertw_power(1, duals.mu1 * g2 + duals.mu2 * pr[1], h2, coeffs, s, env)
    return p0, p1
