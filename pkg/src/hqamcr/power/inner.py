"""Per-sample powers for fixed Lagrange multipliers."""
import numpy as np

from ..ber import ModulationCoeffs
from .kkt import solve_p_star
from .lambertw import lambertw_power, require_perfect_sensing

__all__ = ["decision_rhs", "inner_powers"]


def decision_rhs(mu1, mu2, gw, s):
    """Right-hand sides of the two stationarity conditions.

    ``gw`` is the interference weight of each sample: ``|g|^2`` with perfect
    CSI, ``|g_hat|^2 + sigma_e^2`` otherwise.
    """
    pr = s.decision_probs()
    gw = np.asarray(gw, dtype=float)
    return (mu1 * (1.0 - s.p_detect) * gw + mu2 * pr[0],
            mu1 * s.p_detect * gw + mu2 * pr[1])


def inner_powers(inner, mu1, mu2, h2, gw, lam, alpha0, alpha1, s, env, cap,
                 silent_threshold=None, p_init=None):
    """(P0, P1) minimizing the per-sample Lagrangian, clipped to ``cap``.

    ``inner`` is ``"exact"`` (stationarity root) or ``"lambertw"``
    (closed-form high-SNR approximation). Samples with ``h2`` below
    ``silent_threshold`` get zero power. ``p_init`` is an optional pair of
    warm starts for the exact solver.
    """
    coeffs = ModulationCoeffs.from_alphas(alpha0, alpha1)
    h2, gw = np.broadcast_arrays(np.asarray(h2, dtype=float), np.asarray(gw, dtype=float))
    rhs = decision_rhs(mu1, mu2, gw, s)
    on = np.ones(h2.shape, dtype=bool) if silent_threshold is None else h2 >= silent_threshold
    out = []
    for i in (0, 1):
        p = np.zeros(h2.shape)
        if np.any(on):
            if inner == "exact":
                init = None if p_init is None else np.asarray(p_init[i])[on]
                p[on] = solve_p_star(i, rhs[i][on], h2[on], lam, coeffs, s, env, p_init=init)
            elif inner == "lambertw":
                require_perfect_sensing(s, lam)
                p[on] = lambertw_power(i, rhs[i][on], h2[on], coeffs, s, env)
            else:
                raise ValueError(f"unknown inner solver {inner!r}")
        out.append(np.minimum(p, cap))
    return out[0], out[1]
