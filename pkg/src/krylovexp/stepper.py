"""Restarted propagation w_{j+1} = E(sigma dt_j A) w_j with step-size control.

Each substep builds a fresh Krylov decomposition from the current vector
(the dimension m stays fixed for the whole run), picks dt_j by one of the
controllers below, records the chosen error estimate, and accumulates the
per-substep estimates into a running budget.  With a proven upper bound
and the per-unit-step error model the accumulated budget is <= tol * t by
construction.

Controllers:

  direct_era_global      invert the era bound for era(dt) = tol
  direct_era_local       invert for era(dt) = dt * tol
  direct_era_corrected   same inversions for the corrected bound
  heuristic              first step by direct era inversion, then
                         dt_j = safety * dt_{j-1} * (target/est_{j-1})^(1/m)
  heuristic_iterated     fixed-point refinement of dt on the current
                         decomposition using any estimator
  expokit_first_step_only  the classical a-priori first step, then the
                         heuristic update
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .approximant import Approximant
from .estimators import (ErrorEstimate, era, evaluate, expokit_first_step,
                         fmt_float)
from .krylov import KrylovConfig, build_krylov, extend_krylov
from .sparse import validate_prefactor

CONTROLLER_KINDS = ("direct_era_global", "direct_era_local",
                    "direct_era_corrected", "heuristic", "heuristic_iterated",
                    "expokit_first_step_only")
ERROR_MODELS = ("global_budget", "per_unit_step")

_MAX_SUBSTEPS = 100_000


@dataclass(frozen=True)
class ControllerSpec:
    kind: str
    tol: float
    error_model: str = "per_unit_step"
    iteration_cap: int = 5
    safety: float = None

    def __post_init__(self):
        if self.kind not in CONTROLLER_KINDS:
            raise ValueError(f"unknown controller kind: {self.kind!r}")
        if self.error_model not in ERROR_MODELS:
            raise ValueError(f"unknown error model: {self.error_model!r}")
        if not self.tol > 0.0:
            raise ValueError("tol must be > 0")
        if self.iteration_cap < 1:
            raise ValueError("iteration_cap must be >= 1")
        if self.safety is None:
            default = 1.0 if self.kind.startswith("direct_era") else 0.9
            object.__setattr__(self, "safety", default)
        if not 0.0 < self.safety <= 1.0:
            raise ValueError("safety must lie in (0, 1]")
        if self.kind == "heuristic_iterated" and self.error_model != "per_unit_step":
            raise ValueError("heuristic_iterated implements the per-unit-step target only")


@dataclass(frozen=True)
class StepRecord:
    j: int
    t_start: float
    dt: float
    m_used: int
    estimate: ErrorEstimate
    matvecs: int
    controller_iterations: int = 0


@dataclass(frozen=True)
class PropagationResult:
    w_final: np.ndarray
    records: tuple
    accumulated_bound: float
    total_matvecs: int

    @property
    def total_time(self):
        return float(sum(r.dt for r in self.records))


def _log_tau_gamma(dec, m):
    """log(tau_{m+1} * gamma_m) at dimension m <= dec.m, or None when the
    product is exactly zero (breakdown inside the prefix: the approximant
    is exact there)."""
    if m == dec.m:
        if dec.tau_next <= 0.0:
            return None
        return math.log(dec.tau_next) + dec.log_gamma
    sub = dec.subdiag
    pre = sub[: m - 1]
    tau = sub[m - 1]
    if tau <= 0.0 or (pre <= 0.0).any():
        return None
    return math.log(tau) + float(np.sum(np.log(pre)))


def step_size_direct(dec, sigma, tol, m=None, model="global_budget", p=0,
                     corrected=False, op=None):
    """Invert the era bound (or its corrected variant) for the step size.

    Global model solves era(dt) = tol; per-unit-step solves
    era(dt) = dt * tol.  Breakdown means the bound is identically zero
    and the step is unbounded: +inf is returned.
    """
    validate_prefactor(sigma)
    if model not in ERROR_MODELS:
        raise ValueError(f"unknown error model: {model!r}")
    if not tol > 0.0:
        raise ValueError("tol must be > 0")
    if m is None:
        m = dec.m
    if not 1 <= m <= dec.m:
        raise ValueError("m must lie in [1, dec.m]")
    if corrected and m != dec.m:
        raise ValueError("corrected inversion only at the built dimension")
    log_tg = _log_tau_gamma(dec, m)
    if log_tg is None:
        return math.inf
    if corrected:
        avn = float(np.linalg.norm(dec.a_v_next(op)))
        if avn <= 0.0:
            return math.inf
        num = math.log(tol) + math.lgamma(m + p + 2) - log_tg - math.log(avn)
        exponent = m + 1 if model == "global_budget" else m
    else:
        num = math.log(tol) + math.lgamma(m + p + 1) - log_tg
        exponent = m if model == "global_budget" else m - 1
    if exponent < 1:
        raise ValueError("per-unit-step inversion needs m >= 2")
    return math.exp(num / exponent)


def step_size_heuristic(prev_dt, prev_estimate, tol, m, model="per_unit_step",
                        safety=1.0):
    """dt_j = safety * dt_{j-1} * (target / est_{j-1})^(1/m) with
    target = tol (global) or dt_{j-1} * tol (per-unit-step)."""
    if not prev_estimate > 0.0:
        raise ValueError("prev_estimate must be > 0")
    if not prev_dt > 0.0:
        raise ValueError("prev_dt must be > 0")
    if model not in ERROR_MODELS:
        raise ValueError(f"unknown error model: {model!r}")
    log_target = math.log(tol)
    if model == "per_unit_step":
        log_target += math.log(prev_dt)
    return safety * prev_dt * math.exp((log_target - math.log(prev_estimate)) / m)


def step_size_iterated(dec, sigma, tol, estimator, cap=5, p=0, op=None):
    """Fixed-point refinement dt <- dt * (dt*tol / est(dt))^(1/m) for the
    per-unit-step target est(dt) = dt * tol, started from the direct era
    inversion.  Returns (dt, iterations) where iterations counts the
    updates performed; convergence means successive relative change
    <= 1e-3.  Lanczos mode keeps re-evaluation cheap; with Arnoldi every
    pass re-exponentiates the Hessenberg matrix.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    dt = step_size_direct(dec, sigma, tol, model="per_unit_step", p=p)
    if not math.isfinite(dt):
        return dt, 0
    m = dec.m
    changes = []
    for l in range(1, cap + 1):
        est = evaluate(estimator, dec, sigma, dt, p, op).value
        if est <= 0.0:
            # degenerate estimator; the proven inversion is already in hand
            return step_size_direct(dec, sigma, tol, model="per_unit_step", p=p), l
        new = dt * math.exp((math.log(dt) + math.log(tol) - math.log(est)) / m)
        rel = abs(new - dt) / dt
        changes.append(new - dt)
        dt = new
        if rel <= 1e-3:
            break
    else:
        warnings.warn(f"step-size iteration did not converge within {cap} passes",
                      stacklevel=2)
        l = cap
    if any(a * b < 0.0 for a, b in zip(changes, changes[1:])):
        warnings.warn("step-size iteration was not monotone", stacklevel=2)
    return dt, l


def _raw_step(dec, op, sigma, ctrl, estimator_kind, j, prev_dt, prev_est):
    """One controller decision: (dt before safety/clipping, iterations,
    apply_safety) for substep j."""
    kind = ctrl.kind
    if kind == "direct_era_global":
        return step_size_direct(dec, sigma, ctrl.tol, model="global_budget"), 0, True
    if kind == "direct_era_local":
        return step_size_direct(dec, sigma, ctrl.tol, model="per_unit_step"), 0, True
    if kind == "direct_era_corrected":
        return step_size_direct(dec, sigma, ctrl.tol, model=ctrl.error_model,
                                corrected=True, op=op), 0, True
    if kind == "heuristic_iterated":
        dt, iters = step_size_iterated(dec, sigma, ctrl.tol, estimator_kind,
                                       cap=ctrl.iteration_cap, op=op)
        return dt, iters, True
    # heuristic and expokit_first_step_only differ only in the first step
    if j == 0:
        if kind == "expokit_first_step_only":
            return expokit_first_step(op.norm_inf, dec.m, ctrl.tol), 0, False
        return step_size_direct(dec, sigma, ctrl.tol, model=ctrl.error_model), 0, True
    dt = step_size_heuristic(prev_dt, prev_est, ctrl.tol, dec.m,
                             model=ctrl.error_model, safety=ctrl.safety)
    return dt, 0, False


def _run(op, sigma, v, cfg, ctrl, estimator_kind, t_final=None, n_steps=None):
    s = validate_prefactor(sigma)
    w = np.asarray(v, dtype=complex).copy()
    corrected = (estimator_kind in ("era_corrected", "err1_corrected")
                 or ctrl.kind == "direct_era_corrected")
    records = []
    accumulated = 0.0
    total_matvecs = 0
    t = 0.0
    prev_dt = prev_est = None
    j = 0
    while True:
        if t_final is not None and t >= t_final:
            break
        if n_steps is not None and j >= n_steps:
            break
        if j >= _MAX_SUBSTEPS:
            raise RuntimeError(f"controller stagnated: {j} substeps, t = {t}")
        beta = float(np.linalg.norm(w))
        if beta == 0.0:
            raise RuntimeError("propagated vector vanished")
        dec = build_krylov(op, w / beta, cfg)
        dt, iters, apply_safety = _raw_step(dec, op, s, ctrl, estimator_kind,
                                            j, prev_dt, prev_est)
        if apply_safety:
            dt *= ctrl.safety
        clipped = False
        if t_final is not None and (not math.isfinite(dt) or t + dt >= t_final):
            dt = t_final - t
            clipped = True
        if not math.isfinite(dt):
            raise RuntimeError("unbounded step in a fixed-step run (breakdown)")
        if dt <= 0.0 or t + dt == t:
            raise RuntimeError(f"controller stagnated: dt = {dt} at t = {t}")
        est = evaluate(estimator_kind, dec, s, dt, 0, op)
        appr = Approximant(dec, s, "corrected" if corrected else "standard",
                           0, op=op)
        w = beta * appr.apply(dt)
        step_matvecs = dec.matvecs_used + (1 if "a_v_next" in dec._caches else 0)
        scaled = ErrorEstimate(est.kind, beta * est.value,
                               est.is_proven_upper_bound, est.extra_matvecs)
        records.append(StepRecord(j=j, t_start=t, dt=dt, m_used=dec.m,
                                  estimate=scaled, matvecs=step_matvecs,
                                  controller_iterations=iters))
        accumulated += scaled.value
        total_matvecs += step_matvecs
        prev_dt, prev_est = dt, est.value
        t = t_final if clipped else t + dt
        j += 1
    return PropagationResult(w_final=w, records=tuple(records),
                             accumulated_bound=accumulated,
                             total_matvecs=total_matvecs)


def propagate(op, sigma, v, t_final, cfg, ctrl, estimator_kind="era"):
    """Propagate v to E(sigma t_final A) v in restarted substeps.

    The last step is clipped to land on t_final exactly and its estimate
    is evaluated at the clipped size.  The start vector must have unit
    2-norm; intermediate vectors are re-normalized before each build and
    the recorded estimates carry the norm factor.
    """
    v = np.asarray(v, dtype=complex)
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ValueError("start vector must have unit 2-norm")
    if not t_final > 0.0:
        raise ValueError("t_final must be > 0")
    return _run(op, sigma, v, cfg, ctrl, estimator_kind, t_final=t_final)


def propagate_fixed_steps(op, sigma, v, n_steps, cfg, ctrl, estimator_kind="era"):
    """Run exactly n_steps substeps with no target time (the benchmark
    protocol: the reached total time is the figure of merit)."""
    v = np.asarray(v, dtype=complex)
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ValueError("start vector must have unit 2-norm")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    return _run(op, sigma, v, cfg, ctrl, estimator_kind, n_steps=n_steps)


def early_stop_dimension(op, v, t, tol, m_max, sigma, p=0):
    """Grow the Krylov space one column at a time until the era bound
    satisfies era(m, t) <= tol * t, then stop.

    Returns the decomposition at the smallest such m (or at m_max with
    the attribute early_stop_satisfied set False when the tolerance was
    not met).  Costs exactly m matvecs.
    """
    s = validate_prefactor(sigma)
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    if t < 0.0:
        raise ValueError("t must be >= 0")
    cfg = KrylovConfig(m_max=m_max)
    dec = build_krylov(op, v, cfg, steps=1)
    while True:
        bound = era(dec, s, t, p).value
        if bound <= tol * t or dec.breakdown or dec.m >= m_max:
            break
        dec = extend_krylov(dec, op, 1)
    dec.early_stop_satisfied = bool(bound <= tol * t)
    return dec


BENCH_COLUMNS = ("controller", "estimator", "m", "tol", "N", "total_t",
                 "total_matvecs", "accumulated_bound", "oracle_error_per_unit_t")


def write_bench_csv(path, rows):
    """Controller benchmark table, one row per run, sorted for
    byte-identical output across repeats."""
    def key(r):
        return (r["controller"], r["estimator"], r["m"], r["tol"])

    lines = [",".join(BENCH_COLUMNS)]
    for r in sorted(rows, key=key):
        lines.append(",".join([
            r["controller"], r["estimator"], str(r["m"]), fmt_float(r["tol"]),
            str(r["N"]), fmt_float(r["total_t"]), str(r["total_matvecs"]),
            fmt_float(r["accumulated_bound"]),
            fmt_float(r["oracle_error_per_unit_t"]),
        ]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
