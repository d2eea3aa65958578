"""Dual iterations for the instantaneous-CSI power allocation problems.

For fixed multipliers the Lagrangian separates over channel draws, so each
sample's (P0, P1) is a stationarity root clipped to the power cap. The
multipliers are then driven by the projected subgradient iteration

    mu <- max(0, mu + t * (constraint value - limit))

with the expectations replaced by averages over a frozen :class:`SampleSet`.

The fixed-step iteration is slow or unstable when a multiplier's natural
scale is far from the step size (the average-power multiplier is the
usual culprit). With ``method="auto"`` a stalled subgradient run hands over
to a bracketed root search on the dual optimality conditions, which uses
the fact that each constraint value is continuous and non-increasing in its
own multiplier.
"""
import math

import numpy as np

from .inner import inner_powers
from .types import DualState, NonConvergenceError, PowerPolicy, TraceRow

__all__ = ["optimize_peak_avg", "optimize_avg_avg", "optimize_imperfect_csi", "DEFAULT_P_MAX"]

DEFAULT_P_MAX = 1e6  # 60 dB, cap used when only average constraints are present
_MU_HI = 1e30


class _Problem:
    def __init__(self, samples, lam, alpha0, alpha1, cons, s, env, gw, silent_threshold, inner, cap):
        self.h2 = samples.h2
        self.gw = np.asarray(gw, dtype=float)
        self.lam, self.alpha0, self.alpha1 = lam, alpha0, alpha1
        self.cons, self.s, self.env = cons, s, env
        self.silent_threshold = silent_threshold
        self.inner, self.cap = inner, cap
        self.pr = s.decision_probs()
        self.avg_mode = cons.mode == "avg"
        self.p = None
        self.n_eval = 0

    def evaluate(self, mu1, mu2):
        """Constraint values (interference, average power) at the multipliers."""
        self.p = inner_powers(
            self.inner, mu1, mu2, self.h2, self.gw, self.lam, self.alpha0, self.alpha1,
            self.s, self.env, self.cap, self.silent_threshold, p_init=self.p,
        )
        self.n_eval += 1
        p0, p1 = self.p
        pd = self.s.p_detect
        interference = float(np.mean(((1.0 - pd) * p0 + pd * p1) * self.gw))
        avg_power = float(np.mean(self.pr[0] * p0 + self.pr[1] * p1))
        return interference, avg_power

    def limits(self):
        return self.cons.q_avg, (self.cons.p_avg if self.avg_mode else np.inf)

    def score(self, mu1, mu2, vals, tol):
        """Worst tolerance-normalized violation of the stopping rule (<= 1 is converged).

        The rule is complementary slackness ``|mu (value - limit)|`` plus
        primal feasibility ``value - limit``, both within ``tol * max(1, limit)``.
        """
        worst = 0.0
        for mu, val, lim in zip((mu1, mu2), vals, self.limits()):
            if not math.isfinite(lim):
                continue
            scale = tol * max(1.0, lim)
            worst = max(worst, abs(mu * (val - lim)) / scale, (val - lim) / scale)
        return worst


def _trace_row(it, phase, mu1, mu2, vals, limits):
    q, pav = limits
    cs2 = mu2 * (vals[1] - pav) if math.isfinite(pav) else 0.0
    return TraceRow(it, phase, mu1, mu2, vals[0], vals[1], mu1 * (vals[0] - q), cs2)


def _subgradient(prob, mu, steps, tol, max_iter, stall_window, trace):
    """Projected subgradient iteration. Returns (mu, converged)."""
    mu1, mu2 = mu
    q, pav = prob.limits()
    best, best_it = np.inf, 0
    flips, last_sign, diminishing = 0, 0.0, False
    for n in range(max_iter):
        vals = prob.evaluate(mu1, mu2)
        trace.append(_trace_row(n, "subgradient", mu1, mu2, vals, (q, pav)))
        score = prob.score(mu1, mu2, vals, tol)
        if score <= 1.0:
            return (mu1, mu2), True
        if score < best:
            best, best_it = score, n
        elif stall_window and n - best_it >= stall_window:
            return (mu1, mu2), False
        # oscillation check on the interference residual over windows of 1000 iterations
        sign = math.copysign(1.0, vals[0] - q)
        flips += sign != last_sign and last_sign != 0.0
        last_sign = sign
        if (n + 1) % 1000 == 0:
            diminishing = diminishing or flips > 100
            flips = 0
        scale = 1.0 / math.sqrt(n + 1) if diminishing else 1.0
        mu1 = max(0.0, mu1 + steps[0] * scale * (vals[0] - q))
        if prob.avg_mode:
            mu2 = max(0.0, mu2 + steps[1] * scale * (vals[1] - pav))
    return (mu1, mu2), False


def _decreasing_root(f, start, ftol, utol=1e-13):
    """Root of a continuous non-increasing ``f`` on mu >= 0, or 0 when
    ``f(0) <= 0``.

    The bracket is searched in factors of 100 from ``start`` and refined by
    the Illinois variant of regula falsi in log(mu). Only signs of values
    already computed are used, so evaluation noise near the root cannot
    break the bracket. Stops when ``|f| <= ftol / max(1, mu)`` or the
    bracket is narrower than ``utol`` in log(mu); in the latter case the
    feasible end (f <= 0) is returned.
    """
    x = start if start > 0 else 1e-3
    fx = f(x)
    if abs(fx) <= ftol / max(1.0, x):
        return x
    if fx > 0.0:
        lo, flo = x, fx
        while True:
            hi = lo * 100.0
            if hi > _MU_HI:
                raise NonConvergenceError("could not bracket the Lagrange multiplier")
            fhi = f(hi)
            if fhi <= 0.0:
                break
            lo, flo = hi, fhi
    else:
        f0 = f(0.0)
        if f0 <= 0.0:
            return 0.0
        hi, fhi = x, fx
        while True:
            lo = hi / 100.0
            if lo < 1e-300:
                raise NonConvergenceError("could not bracket the Lagrange multiplier")
            flo = f(lo)
            if flo > 0.0:
                break
            hi, fhi = lo, flo
    a, b = math.log(lo), math.log(hi)
    side = 0
    for _ in range(500):
        if fhi == 0.0 or b - a <= utol:
            break
        u = b - fhi * (b - a) / (fhi - flo)
        if not a < u < b:
            u = 0.5 * (a + b)
        x = math.exp(u)
        fx = f(x)
        if abs(fx) <= ftol / max(1.0, x):
            return x
        if fx > 0.0:
            a, flo = u, fx
            if side == 1:
                fhi *= 0.5
            side = 1
        else:
            b, fhi = u, fx
            if side == -1:
                flo *= 0.5
            side = -1
    return math.exp(b)


def _root_phase(prob, mu, trace, it0, tol):
    q, pav = prob.limits()
    # residual targets well inside the stopping rule
    ftol1 = 1e-3 * tol * max(1.0, q)
    ftol2 = 1e-3 * tol * max(1.0, pav) if math.isfinite(pav) else 0.0
    count = [it0]

    def record(mu1, mu2):
        vals = prob.evaluate(mu1, mu2)
        trace.append(_trace_row(count[0], "bracket", mu1, mu2, vals, (q, pav)))
        count[0] += 1
        return vals

    if not prob.avg_mode:
        mu1 = _decreasing_root(lambda m: record(m, 0.0)[0] - q, mu[0], ftol1)
        return mu1, 0.0

    # nested search: mu2 maximizes the dual for each mu1, and the interference
    # residual along that path is non-increasing in mu1
    mu2_of = {}
    last = [mu[1]]

    def mu2_star(mu1):
        if mu1 not in mu2_of:
            mu2_of[mu1] = _decreasing_root(lambda m: record(mu1, m)[1] - pav, last[0], ftol2)
            if mu2_of[mu1] > 0:
                last[0] = mu2_of[mu1]
        return mu2_of[mu1]

    def outer(mu1):
        m2 = mu2_star(mu1)
        return record(mu1, m2)[0] - q

    mu1 = _decreasing_root(outer, mu[0], ftol1)
    return mu1, mu2_star(mu1)


def _solve(samples, lam, alpha0, alpha1, cons, s, env, gw, mode, steps, tol, max_iter,
           mu_init, method, inner, silent_threshold, p_max, stall_window):
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    if method not in ("auto", "subgradient", "bracket"):
        raise ValueError(f"unknown method {method!r}")
    alpha1 = alpha0 if alpha1 is None else alpha1
    cap = cons.p_pk if cons.mode == "peak" else p_max
    prob = _Problem(samples, lam, alpha0, alpha1, cons, s, env, gw, silent_threshold, inner, cap)
    trace = []
    mu = (float(mu_init[0]), float(mu_init[1]) if prob.avg_mode else 0.0)
    converged = False
    used = method
    if method in ("auto", "subgradient"):
        window = stall_window if method == "auto" else 0
        mu, converged = _subgradient(prob, mu, steps, tol, max_iter, window, trace)
    if not converged and method in ("auto", "bracket"):
        mu = _root_phase(prob, mu, trace, len(trace), tol)
        used = "subgradient+bracket" if method == "auto" else "bracket"
        vals = prob.evaluate(*mu)
        trace.append(_trace_row(len(trace), "final", mu[0], mu[1], vals, prob.limits()))
        converged = prob.score(mu[0], mu[1], vals, tol) <= 1.0
    elif method == "auto":
        used = "subgradient"
    if not converged:
        raise NonConvergenceError(
            f"dual iteration did not meet the stopping rule after {len(trace)} evaluations", trace
        )
    p0, p1 = prob.p
    cap_limited = cons.mode == "avg" and bool(np.any(p0 >= cap) or np.any(p1 >= cap))
    return PowerPolicy(
        mode=mode,
        constraints=cons,
        lam=lam,
        alpha0=alpha0,
        alpha1=alpha1,
        sensing=s,
        env=env,
        duals=DualState(mu[0], mu[1]),
        p_cap=cap,
        silent_threshold=silent_threshold,
        inner=inner,
        cap_limited=cap_limited,
        iterations=len(trace),
        method=used,
        trace=tuple(trace),
    )


def optimize_peak_avg(samples, lam, alpha0, alpha1, cons, s, env, step=1e-3, tol=1e-7,
                      max_iter=20000, mu_init=0.1, method="auto", inner="exact",
                      silent_threshold=None, stall_window=100):
    """Powers under a peak transmit power and an average interference limit.

    Per sample ``P_i = min(P_pk, P_i*(mu1))``; ``mu1`` follows the projected
    subgradient iteration with step ``step`` until
    ``|mu1 (I - Q_avg)| <= tol * max(1, Q_avg)`` and ``I <= Q_avg`` within the
    same tolerance, where ``I`` is the sample-average interference.

    ``method`` is ``"subgradient"`` (plain iteration), ``"bracket"`` (root
    search only) or ``"auto"`` (subgradient, then root search if it stalls
    for ``stall_window`` iterations). ``inner="lambertw"`` replaces the exact
    per-sample solve by the high-SNR closed form.

    Raises
    ------
    NonConvergenceError
        If the stopping rule is not met within ``max_iter`` iterations.
    """
    if cons.mode != "peak":
        raise ValueError("optimize_peak_avg needs constraints with p_pk")
    return _solve(samples, lam, alpha0, alpha1, cons, s, env, samples.g2,
                  "instantaneous-perfect-CSI", (step, step), tol, max_iter, (mu_init, 0.0),
                  method, inner, silent_threshold, np.inf, stall_window)


def optimize_avg_avg(samples, lam, alpha0, alpha1, cons, s, env, steps=(1e-3, 1e-3), tol=1e-7,
                     max_iter=20000, mu_init=(0.1, 0.1), method="auto", inner="exact",
                     silent_threshold=None, p_max=DEFAULT_P_MAX, stall_window=100):
    """Powers under average transmit power and average interference limits.

    Both multipliers are iterated; the average-power constraint uses the
    sensing-decision probabilities ``Pr{H0_hat}``, ``Pr{H1_hat}``. Samples
    with ``|h|^2 < silent_threshold`` get zero power but still count in the
    constraint averages. Powers are capped at ``p_max``; the returned policy
    has ``cap_limited`` set when any sample reaches it.
    """
    if cons.mode != "avg":
        raise ValueError("optimize_avg_avg needs constraints with p_avg")
    return _solve(samples, lam, alpha0, alpha1, cons, s, env, samples.g2,
                  "instantaneous-perfect-CSI", tuple(steps), tol, max_iter, tuple(mu_init),
                  method, inner, silent_threshold, p_max, stall_window)


def optimize_imperfect_csi(samples, lam, alpha0, alpha1, cons, s, env, **kwargs):
    """Either solver above with the interference weight ``|g|^2`` replaced by
    ``|g_hat|^2 + sigma_e^2``; ``samples.g2`` holds the estimates and
    ``env.sigma_e2`` the error variance."""
    gw = samples.g2 + env.sigma_e2
    common = dict(tol=kwargs.pop("tol", 1e-7), max_iter=kwargs.pop("max_iter", 20000),
                  method=kwargs.pop("method", "auto"), inner=kwargs.pop("inner", "exact"),
                  silent_threshold=kwargs.pop("silent_threshold", None),
                  stall_window=kwargs.pop("stall_window", 100))
    if cons.mode == "peak":
        step = kwargs.pop("step", 1e-3)
        mu_init = kwargs.pop("mu_init", 0.1)
        cap, steps, mu = np.inf, (step, step), (mu_init, 0.0)
    else:
        steps = tuple(kwargs.pop("steps", (1e-3, 1e-3)))
        mu = tuple(kwargs.pop("mu_init", (0.1, 0.1)))
        cap = kwargs.pop("p_max", DEFAULT_P_MAX)
    if kwargs:
        raise TypeError(f"unexpected arguments {sorted(kwargs)}")
    return _solve(samples, lam, alpha0, alpha1, cons, s, env, gw, "instantaneous-imperfect-CSI",
                  steps, common["tol"], common["max_iter"], mu, common["method"],
                  common["inner"], common["silent_threshold"], cap, common["stall_window"])
