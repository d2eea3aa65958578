"""Per-realization stationarity condition of the convexified objective and
its root in the transmit power."""
import math

import numpy as np

from ..channel import joint_sensing_probs

__all__ = ["kkt_lhs", "log_kkt_lhs", "solve_p_star", "BracketError", "P_LO", "P_HI"]

P_LO = 1e-12
P_HI = 1e9
_LOG_P_LO = math.log(P_LO)
_LOG_P_HI = math.log(P_HI)


class BracketError(ArithmeticError):
    """The stationarity root search failed to produce a finite answer."""


def _log_terms(i, h2, lam, coeffs, s, env):
    """Return ``(log_amp, k)`` arrays of shape (n_terms, *h2.shape).

    Each term is ``exp(log_amp) * exp(-k P / 2) / sqrt(P)``; the sum of the
    terms is the marginal decrease of the objective per unit of power.
    """
    joint = joint_sensing_probs(s)
    var = env.state_variances
    h2 = np.asarray(h2, dtype=float)
    log_amp, ks = [], []
    for j in (0, 1):
        w = joint[j, i]
        if w == 0.0:
            continue
        base = w / (4.0 * math.sqrt(2.0 * math.pi))
        for l in (0, 1):
            for weight, coef in ((lam, coeffs.c[l, i]), ((1.0 - lam) * coeffs.rho[l], coeffs.beta[l, i])):
                if weight == 0.0:
                    continue
                k = coef * h2 / var[j]
                with np.errstate(divide="ignore"):
                    log_amp.append(math.log(base * weight) + 0.5 * np.log(k))
                ks.append(k)
    if not ks:
        shape = (1,) + h2.shape
        return np.full(shape, -np.inf), np.zeros(shape)
    return np.stack(log_amp), np.stack(ks)


def _lse(t):
    top = t.max(axis=0)
    top = np.where(np.isfinite(top), top, 0.0)
    return top + np.log(np.exp(t - top).sum(axis=0))


def log_kkt_lhs(i, p, h2, lam, coeffs, s, env):
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise ValueError("stationarity condition is defined for P > 0 only")
    h2 = np.broadcast_to(np.asarray(h2, dtype=float), np.broadcast(p, h2).shape)
    log_amp, ks = _log_terms(i, h2, lam, coeffs, s, env)
    return _lse(log_amp - 0.5 * np.log(p) - 0.5 * ks * p)


def kkt_lhs(i, p, h2, lam, coeffs, s, env):
    """Marginal decrease of ``lam*BER_HP + (1-lam)*BER_LP_upper`` with respect
    to the power under sensing decision ``i``, at channel gain ``h2``."""
    out = np.exp(log_kkt_lhs(i, p, h2, lam, coeffs, s, env))
    return out if np.ndim(out) else float(out)


def solve_p_star(i, rhs, h2, lam, coeffs, s, env, p_init=None, tol=1e-12, max_iter=100):
    """Power at which :func:`kkt_lhs` equals ``rhs``.

    Safeguarded Newton on ``log LHS(exp(u)) - log rhs`` inside the bracket
    ``u in [log 1e-12, log 1e9]``; a Newton step leaving the current bracket
    is replaced by bisection. ``p_init`` warm-starts the iteration. The
    relative tolerance on P is ``tol``.

    Elements with ``rhs <= 0`` or a root above 1e9 have no usable finite
    root and return ``inf`` (callers clip to their power cap). Elements
    whose left-hand side vanishes (``h2 == 0`` or a decision of zero
    probability) or whose root is below 1e-12 return 0.
    """
    rhs, h2 = np.broadcast_arrays(np.asarray(rhs, dtype=float), np.asarray(h2, dtype=float))
    shape = rhs.shape
    rhs = rhs.ravel()
    h2 = h2.ravel()
    out = np.empty(rhs.shape)
    inf = rhs <= 0
    out[inf] = np.inf
    zero = ~inf & (h2 <= 0)
    out[zero] = 0.0
    work = ~(inf | zero)
    if np.any(work):
        log_amp, ks = _log_terms(i, h2[work], lam, coeffs, s, env)
        if np.all(np.isneginf(log_amp)):
            out[work] = 0.0
        else:
            u0 = None
            if p_init is not None:
                guess = np.broadcast_to(np.asarray(p_init, dtype=float), shape).ravel()[work]
                u0 = np.log(np.clip(np.nan_to_num(guess, posinf=P_HI), P_LO, P_HI))
            out[work] = _newton_bisect(log_amp, ks, np.log(rhs[work]), u0, tol, max_iter)
    if np.any(np.isnan(out)):
        raise BracketError("stationarity root search produced NaN")
    out = out.reshape(shape)
    return out if out.ndim else float(out)


def _newton_bisect(log_amp, ks, log_rhs, u0, tol, max_iter):
    n = log_rhs.shape[0]
    res = np.empty(n)
    lo_edge = _lse(log_amp - 0.5 * _LOG_P_LO - 0.5 * ks * P_LO) - log_rhs
    hi_edge = _lse(log_amp - 0.5 * _LOG_P_HI - 0.5 * ks * P_HI) - log_rhs
    below = lo_edge <= 0
    above = hi_edge >= 0
    res[below] = 0.0
    res[above & ~below] = np.inf
    act = np.flatnonzero(~(below | above))
    if act.size == 0:
        return res
    la, kk, lr = log_amp[:, act], ks[:, act], log_rhs[act]
    lo = np.full(act.size, _LOG_P_LO)
    hi = np.full(act.size, _LOG_P_HI)
    u = np.clip(u0[act], lo, hi) if u0 is not None else np.full(act.size, math.log(0.1))
    for _ in range(max_iter):
        p = np.exp(u)
        t = la - 0.5 * u - 0.5 * kk * p
        lse = _lse(t)
        f = lse - lr
        # d log LHS / d log P = sum_k w_k (-1/2 - k P / 2)
        df = np.sum(np.exp(t - lse) * (-0.5 - 0.5 * kk * p), axis=0)
        pos = f > 0
        lo = np.where(pos, u, lo)
        hi = np.where(pos, hi, u)
        u_new = u - f / df
        bad = ~((u_new > lo) & (u_new < hi))
        u_new = np.where(bad, 0.5 * (lo + hi), u_new)
        done = (np.abs(u_new - u) <= tol) | (hi - lo <= tol)
        u = u_new
        if np.all(done):
            break
        if np.any(done):
            res[act[done]] = np.exp(u[done])
            keep = ~done
            act, la, kk, lr = act[keep], la[:, keep], kk[:, keep], lr[keep]
            lo, hi, u = lo[keep], hi[keep], u[keep]
    res[act] = np.exp(u)
    return res
