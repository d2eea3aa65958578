"""Constant powers from statistical CSI.

Both averaged error rates decrease in each power, so the optimum lies on the
upper boundary of the feasible (P0, P1) region. That boundary is a
one-dimensional curve parameterized by P0, and is searched exhaustively on a
grid with a golden-section refinement around the best grid point.
"""
import math

import numpy as np

from ..ber import weighted_objective
from .types import InfeasibleError, PowerPolicy

__all__ = ["optimize_statistical", "boundary_p1"]

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _limits(cons, s, omega_g):
    """Linear constraints ``A @ (P0, P1) <= b`` as rows (a0, a1, b)."""
    rows = [((1.0 - s.p_detect) * omega_g, s.p_detect * omega_g, cons.q_avg)]
    if cons.mode == "peak":
        rows += [(1.0, 0.0, cons.p_pk), (0.0, 1.0, cons.p_pk)]
    else:
        pr = s.decision_probs()
        rows.append((pr[0], pr[1], cons.p_avg))
    return rows


def boundary_p1(p0, cons, s, omega_g=1.0):
    """Largest feasible P1 for each P0 (``inf`` if P1 is unconstrained)."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.full(p0.shape, np.inf)
    for a0, a1, b in _limits(cons, s, omega_g):
        if a1 > 0:
            p1 = np.minimum(p1, (b - a0 * p0) / a1)
    return p1


def _p0_max(cons, s, omega_g):
    top = np.inf
    for a0, a1, b in _limits(cons, s, omega_g):
        if a0 > 0:
            top = min(top, b / a0)
    return top


def optimize_statistical(lam, alpha0, alpha1, cons, s, env, m=None, omega_h=None, omega_g=None,
                         grid=2000, refine_iter=80, upper_bound=True):
    """Best constant (P0, P1) for the Nakagami-averaged weighted BER.

    The region is ``(1-P_d) P0 E|g|^2 + P_d P1 E|g|^2 <= Q_avg`` together with
    either the peak limits or ``Pr{H0_hat} P0 + Pr{H1_hat} P1 <= P_avg``.
    ``m`` and ``omega_h`` default to ``env.h_spec`` and ``omega_g`` to
    ``env.g_spec.omega``.

    The returned policy's ``info`` holds the objective value and, with
    ``upper_bound=True``, the optimum of the variant using the convex LP
    upper bound (keys ``"objective"``, ``"upper_bound"``,
    ``"upper_bound_objective"``).
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    alpha1 = alpha0 if alpha1 is None else alpha1
    omega_g = env.g_spec.omega if omega_g is None else omega_g
    if not omega_g > 0:
        raise InfeasibleError("mean interference-link gain must be positive")
    p0_hi = _p0_max(cons, s, omega_g)
    if not math.isfinite(p0_hi):
        raise ValueError("P0 is unbounded by the constraints")
    if p0_hi < 0:
        raise InfeasibleError("constraint region is empty")
    if not np.isfinite(boundary_p1(0.0, cons, s, omega_g)):
        raise ValueError("P1 is unbounded by the constraints")

    def search(use_ub):
        def obj(p0):
            p1 = np.maximum(boundary_p1(p0, cons, s, omega_g), 0.0)
            return weighted_objective(lam, p0, p1, alpha0, alpha1, s, env,
                                      use_upper_bound=use_ub, m=m, omega=omega_h)

        xs = np.linspace(0.0, p0_hi, grid)
        fs = obj(xs)
        k = int(np.argmin(fs))
        best_x, best_f = float(xs[k]), float(fs[k])
        lo, hi = float(xs[max(k - 1, 0)]), float(xs[min(k + 1, grid - 1)])
        c, d = hi - _GOLDEN * (hi - lo), lo + _GOLDEN * (hi - lo)
        fc, fd = float(obj(c)), float(obj(d))
        for _ in range(refine_iter):
            if fc < fd:
                hi, d, fd = d, c, fc
                c = hi - _GOLDEN * (hi - lo)
                fc = float(obj(c))
            else:
                lo, c, fc = c, d, fd
                d = lo + _GOLDEN * (hi - lo)
                fd = float(obj(d))
        for x, fx in ((c, fc), (d, fd)):
            if fx < best_f:
                best_x, best_f = x, fx
        p1 = float(max(boundary_p1(best_x, cons, s, omega_g), 0.0))
        return (best_x, p1), best_f

    pair, value = search(False)
    info = {"objective": value}
    if upper_bound:
        ub_pair, ub_value = search(True)
        info.update(upper_bound=ub_pair, upper_bound_objective=ub_value)
    return PowerPolicy(
        mode="statistical",
        constraints=cons,
        lam=lam,
        alpha0=alpha0,
        alpha1=alpha1,
        sensing=s,
        env=env,
        p_const=pair,
        p_cap=cons.p_pk if cons.p_pk is not None else np.inf,
        method="boundary-search",
        info=info,
    )
