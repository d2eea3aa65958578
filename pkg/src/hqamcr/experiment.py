"""Sweep driver: solve the configured power control at every sweep point,
evaluate the analytic error rates and optionally run link-level sessions."""
import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace

import numpy as np

from .ber import ber_hp_instant, ber_hp_nakagami, ber_lp_instant, ber_lp_nakagami
from .channel import ChannelEnv, FadingSpec, SensingModel
from .linksim import read_image, run_session, synthetic_image
from .power import (
    Constraints,
    SampleSet,
    optimize_avg_avg,
    optimize_imperfect_csi,
    optimize_peak_avg,
    optimize_statistical,
)

__all__ = ["run_experiment", "format_csv", "format_trace_csv", "CSV_SCHEMA", "COLUMNS", "PSNR_CAP"]

log = logging.getLogger(__name__)

CSV_SCHEMA = "# hqamcr results v1"
TRACE_SCHEMA = "# hqamcr dual trace v1"
PSNR_CAP = 99.0
COLUMNS = (
    "sweep_axis", "sweep_value", "constraint", "inner", "csi", "seed", "p0", "p1",
    "ber_hp", "ber_lp", "n_re", "n_silent", "psnr", "energy", "avg_power",
    "mu1", "mu2", "cap_limited", "method",
)
TRACE_COLUMNS = ("sweep_value", "constraint", "inner", "iteration", "phase", "mu1", "mu2",
                 "interference", "avg_power", "cs1", "cs2")


def build_models(cfg, constraint):
    s = SensingModel(cfg.p_d, cfg.p_f, cfg.prior_busy)
    env = ChannelEnv(
        sigma_n2=cfg.sigma_n2,
        sigma_w2=cfg.sigma_w2,
        h_spec=FadingSpec(cfg.m, cfg.omega_h),
        g_spec=FadingSpec(1.0, cfg.omega_g),
        sigma_e2=cfg.sigma_e2 if cfg.csi == "imperfect" else 0.0,
    )
    if constraint == "peak":
        cons = Constraints(q_avg=cfg.q_avg, p_pk=cfg.p_pk)
    else:
        cons = Constraints(q_avg=cfg.q_avg, p_avg=cfg.p_avg)
    return s, env, cons


def solve_policy(cfg, constraint, inner):
    s, env, cons = build_models(cfg, constraint)
    if cfg.csi == "statistical":
        pol = optimize_statistical(cfg.lam, cfg.alpha0, cfg.alpha1, cons, s, env,
                                   upper_bound=cfg.upper_bound)
        if cfg.upper_bound:
            pol = replace(pol, p_const=pol.info["upper_bound"])
        return pol, s, env
    rng = np.random.default_rng(cfg.sample_seed)
    kw = dict(tol=cfg.tol, max_iter=cfg.max_iter, method=cfg.method, inner=inner,
              silent_threshold=cfg.silent_threshold)
    if cfg.csi == "imperfect":
        samples = SampleSet.draw(env, cfg.n_samples, rng, sigma_e2=env.sigma_e2)
        if constraint == "peak":
            kw["step"] = cfg.step
        else:
            kw["steps"] = (cfg.step, cfg.step)
        pol = optimize_imperfect_csi(samples, cfg.lam, cfg.alpha0, cfg.alpha1, cons, s, env, **kw)
    elif constraint == "peak":
        samples = SampleSet.draw(env, cfg.n_samples, rng)
        pol = optimize_peak_avg(samples, cfg.lam, cfg.alpha0, cfg.alpha1, cons, s, env,
                                step=cfg.step, **kw)
    else:
        samples = SampleSet.draw(env, cfg.n_samples, rng)
        pol = optimize_avg_avg(samples, cfg.lam, cfg.alpha0, cfg.alpha1, cons, s, env,
                               steps=(cfg.step, cfg.step), **kw)
    return pol, s, env


def analytic_summary(cfg, pol, s, env):
    """Mean powers and analytic BERs of a policy.

    Constant policies use the fading-averaged closed forms; instantaneous
    ones average the instantaneous BER over an independent evaluation set.
    """
    if pol.p_const is not None:
        p0, p1 = pol.p_const
        hp = ber_hp_nakagami(p0, p1, cfg.alpha0, cfg.alpha1, s, env)
        lp = ber_lp_nakagami(p0, p1, cfg.alpha0, cfg.alpha1, s, env)
        return p0, p1, hp, lp
    ev = SampleSet.draw(env, cfg.eval_samples, np.random.default_rng(cfg.eval_seed),
                        sigma_e2=env.sigma_e2)
    p0, p1 = pol.powers(ev.h2, ev.g2)
    hp = np.mean(ber_hp_instant(p0, p1, ev.h2, cfg.alpha0, cfg.alpha1, s, env))
    lp = np.mean(ber_lp_instant(p0, p1, ev.h2, cfg.alpha0, cfg.alpha1, s, env))
    return float(np.mean(p0)), float(np.mean(p1)), float(hp), float(lp)


def _image(cfg):
    if cfg.image:
        return read_image(cfg.image)
    return synthetic_image(cfg.image_size, cfg.image_size)


def _run_point(args):
    cfg, value, constraint, inner = args
    point = cfg.at(value)
    log.info("solving %s=%g constraint=%s inner=%s", cfg.sweep_axis, value, constraint, inner)
    pol, s, env = solve_policy(point, constraint, inner)
    p0, p1, hp, lp = analytic_summary(point, pol, s, env)
    base = dict(sweep_axis=cfg.sweep_axis, sweep_value=value, constraint=constraint, inner=inner,
                csi=cfg.csi, p0=p0, p1=p1, ber_hp=hp, ber_lp=lp, mu1=pol.duals.mu1,
                mu2=pol.duals.mu2, cap_limited=pol.cap_limited, method=pol.method)
    rows = []
    img = _image(point) if point.link_sim else None
    for seed in cfg.seeds:
        row = dict(base, seed=seed, n_re=math.nan, n_silent=math.nan, psnr=math.nan,
                   energy=math.nan, avg_power=math.nan)
        if img is not None:
            rep = run_session(img, point.n_packets, pol, s, env, point.thr, point.n_upper,
                              np.random.default_rng(seed), mapping=point.mapping)
            row.update(n_re=rep.n_re, n_silent=rep.n_silent, psnr=rep.psnr, energy=rep.energy,
                       avg_power=rep.avg_power)
        rows.append(row)
    trace = [dict(sweep_value=value, constraint=constraint, inner=inner, **asdict(t))
             for t in pol.trace]
    return rows, trace


def run_experiment(cfg, workers=1):
    """Rows (dicts keyed by :data:`COLUMNS`) and dual-trace rows.

    Rows come out ordered by sweep point, then constraint and inner-solver
    variant, then seed, whatever the number of workers.
    """
    tasks = [(cfg, v, c, i) for v in cfg.sweep_values for c in cfg.constraint for i in cfg.inner]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_point, tasks))
    else:
        results = [_run_point(t) for t in tasks]
    rows, trace = [], []
    for r, t in results:
        rows.extend(r)
        trace.extend(t)
    return rows, trace


def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def _write(schema, columns, rows, transform=None):
    buf = io.StringIO()
    buf.write(schema + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        row = transform(row) if transform else row
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def format_csv(rows):
    """CSV text with a schema comment line; infinite PSNR is written as 99."""
    def cap(row):
        if row["psnr"] == math.inf:
            return dict(row, psnr=PSNR_CAP)
        return row
    return _write(CSV_SCHEMA, COLUMNS, rows, cap)


def format_trace_csv(trace):
    return _write(TRACE_SCHEMA, TRACE_COLUMNS, trace)
