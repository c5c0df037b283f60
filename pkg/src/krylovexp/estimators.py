"""A-posteriori error bounds and estimates for the Krylov approximants.

The family, at Krylov dimension m with subdiagonal product gamma and
next subdiagonal entry tau (all evaluated in log-domain so m up to a
couple hundred cannot overflow or underflow):

  era                 tau * gamma * t^m / (m+p)!          proven bound (nonexpansive)
  era_corrected       ||A v_next|| * tau * gamma * t^(m+1) / (m+p+1)!
  err1                tau * t * |e_m^* phi_{p+1}(sigma t T) e_1|
  err1_corrected      ||A v_next|| * tau * t^2 * |e_m^* phi_{p+2}(sigma t T) e_1|
  hermite_quad        tau * (t/m) * |delta(t)|
  improved_hermite_quad  two-point Hermite rule using the defect derivative
  trapezoid_quad      tau * (t/2) * |delta(t)|
  effective_order_quad   tau * t/(rho(t)+1) * |delta(t)|  (guarded)

is_proven_upper_bound is set exactly when the mathematics guarantees the
value dominates the true error: always for the era family under the
nonexpansiveness flag, and for err1 / trapezoid_quad additionally only
in the hermitian nonexpansive case with real sigma.
"""

import math
from dataclasses import dataclass

import numpy as np

from .approximant import (Approximant, DefectRoundoffError, effective_order,
                          small_eval)
from .sparse import validate_prefactor


@dataclass(frozen=True)
class ErrorEstimate:
    kind: str
    value: float
    is_proven_upper_bound: bool
    extra_matvecs: int = 0


def _hermitian_real_sigma(dec, sigma):
    return (dec.symmetry == "hermitian"
            and abs(sigma.imag) <= 1e-12
            and abs(abs(sigma.real) - 1.0) <= 1e-12)


def _era_value(dec, t, p, order_shift=0, scale_log=None):
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0.0 or dec.tau_next <= 0.0 or scale_log == -math.inf:
        return 0.0
    m = dec.m
    arg = (math.log(dec.tau_next) + dec.log_gamma
           + (m + order_shift) * math.log(t)
           - math.lgamma(m + p + 1 + order_shift))
    if scale_log is not None:
        arg += scale_log
    try:
        return math.exp(arg)
    except OverflowError:
        return math.inf


def era(dec, sigma, t, p=0):
    """Proven error bound tau*gamma*t^m/(m+p)! for the standard approximant."""
    validate_prefactor(sigma)
    kind = "era" if p == 0 else "era_phi"
    return ErrorEstimate(kind, _era_value(dec, t, p),
                         is_proven_upper_bound=bool(dec.nonexpansive),
                         extra_matvecs=0)


def era_corrected(dec, op, sigma, t, p=0):
    """Bound ||A v_next|| * tau*gamma*t^(m+1)/(m+p+1)! for the corrected approximant.

    Costs one extra matvec the first time (cached on the decomposition).
    """
    validate_prefactor(sigma)
    if dec.breakdown:
        return ErrorEstimate("era_corrected", 0.0,
                             is_proven_upper_bound=bool(dec.nonexpansive),
                             extra_matvecs=0)
    avn = float(np.linalg.norm(dec.a_v_next(op)))
    scale_log = math.log(avn) if avn > 0.0 else -math.inf
    return ErrorEstimate("era_corrected",
                         _era_value(dec, t, p, order_shift=1, scale_log=scale_log),
                         is_proven_upper_bound=bool(dec.nonexpansive),
                         extra_matvecs=1)


def err1(dec, sigma, t, p=0, corrected=False, op=None):
    """Asymptotically correct estimate from the next phi corner entry.

    Standard: tau*t*|e_m^* phi_{p+1}(sigma t T) e_1|.  Corrected:
    ||A v_next|| * tau*t^2*|e_m^* phi_{p+2}(sigma t T) e_1| (needs op for
    the one cached extra matvec).  A proven upper bound only in the
    hermitian nonexpansive case with real sigma (and only uncorrected).
    """
    s = validate_prefactor(sigma)
    if t < 0:
        raise ValueError("t must be >= 0")
    if corrected:
        if dec.breakdown:
            return ErrorEstimate("err1_corrected", 0.0, False, 0)
        if op is None and "a_v_next" not in dec._caches:
            raise ValueError("err1 corrected needs the operator for ||A v_next||")
        avn = float(np.linalg.norm(dec.a_v_next(op)))
        corner = small_eval(dec, s).corner_phi(p + 2, t) if t > 0.0 else 0.0
        value = avn * dec.tau_next * t * t * abs(corner)
        return ErrorEstimate("err1_corrected", value, False, 1)
    kind = "err1" if p == 0 else "err1_phi"
    corner = small_eval(dec, s).corner_phi(p + 1, t) if t > 0.0 else 0.0
    value = dec.tau_next * t * abs(corner)
    proven = bool(dec.nonexpansive) and _hermitian_real_sigma(dec, s)
    return ErrorEstimate(kind, value, proven, 0)


def _order_probe(appr, t, factors=(0.5, 0.75, 1.0)):
    """rho sampled on a short grid ending at t, or None when rho(t) is
    unreliable, the resolvable samples are not nonincreasing, or
    rho(t) < 1 (outside the rule's assumptions).

    Probe points below the defect round-off floor are skipped: there the
    defect is far inside the asymptotic regime and carries no slope
    information (rho(t) itself must still resolve).
    """
    rhos = []
    for f in factors:
        try:
            rhos.append(effective_order(appr, t * f))
        except DefectRoundoffError:
            if f == factors[-1]:
                return None
    for a, b in zip(rhos, rhos[1:]):
        if b > a + 1e-9 * (1.0 + abs(a)):
            return None
    if rhos[-1] < 1.0 - 1e-12:
        return None
    return rhos[-1]


def quad_estimates(appr, t):
    """Quadrature-style estimates of the defect integral at time t.

    Returns hermite_quad and trapezoid_quad always, improved_hermite_quad
    when the operator is available for the one extra (cached) matvec, and
    effective_order_quad only when the sampled rho is reliable,
    nonincreasing, and at least 1.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    dec = appr.dec
    m = dec.m
    tau = dec.tau_next
    sigma = appr.sigma
    sample = appr.defect(t)
    ad = abs(sample.delta)
    herm_proven = bool(dec.nonexpansive) and _hermitian_real_sigma(dec, sigma)

    out = [ErrorEstimate("hermite_quad", tau * (t / m) * ad, False, 0)]

    can_improve = (not dec.breakdown) and (appr.op is not None or "a_v_next" in dec._caches)
    if can_improve:
        av = dec.a_v_next(appr.op)
        ddot = np.conj(sigma) * sample.delta_prime  # T[m-1,m-1]u_m + T[m-1,m-2]u_{m-1}
        vec = (sigma * tau * (2.0 * t / (m + 1)) * sample.delta) * dec.v_next \
            - (sigma * sigma * tau * (t * t / (m * (m + 1)))) * (ddot * dec.v_next - sample.delta * av)
        out.append(ErrorEstimate("improved_hermite_quad", float(np.linalg.norm(vec)), False, 1))

    out.append(ErrorEstimate("trapezoid_quad", tau * (t / 2.0) * ad, herm_proven, 0))

    if t > 0.0 and tau > 0.0:
        rho = _order_probe(appr, t)
        if rho is not None:
            out.append(ErrorEstimate("effective_order_quad",
                                     tau * (t / (rho + 1.0)) * ad, False, 0))
    return out


def expokit_first_step(op_norm_inf, m, tol):
    """A-priori first step size, the rule historically shipped with phipade codes:

        dt = (1/||A||_inf) * (tol * ((m+1)/e)^(m+1) * sqrt(2 pi (m+1))
              / (4 ||A||_inf))^(1/m)
    """
    if op_norm_inf <= 0.0:
        raise ValueError("op_norm_inf must be > 0")
    if not (0.0 < tol < 1.0):
        raise ValueError("tol must be in (0, 1)")
    mp1 = m + 1
    inner = (math.log(tol) + mp1 * (math.log(mp1) - 1.0)
             + 0.5 * math.log(2.0 * math.pi * mp1)
             - math.log(4.0 * op_norm_inf))
    return math.exp(inner / m - math.log(op_norm_inf))


_QUAD_KINDS = ("hermite_quad", "improved_hermite_quad", "trapezoid_quad",
               "effective_order_quad")


def evaluate(kind, dec, sigma, t, p=0, op=None):
    """Evaluate one named estimator; the controller loop goes through here.

    For "effective_order_quad" the guarded rho may be unavailable, in
    which case the trapezoid value (which dominates it) is returned under
    the same request so the controller always gets a usable number.
    """
    if kind == "era":
        return era(dec, sigma, t, p)
    if kind == "era_corrected":
        return era_corrected(dec, op, sigma, t, p)
    if kind == "err1":
        return err1(dec, sigma, t, p)
    if kind == "err1_corrected":
        return err1(dec, sigma, t, p, corrected=True, op=op)
    if kind in _QUAD_KINDS:
        appr = Approximant(dec, sigma, "standard", p, op=op)
        if dec.m < 2:
            raise ValueError("quadrature estimators need m >= 2")
        wanted = quad_estimates(appr, t)
        by_kind = {e.kind: e for e in wanted}
        if kind in by_kind:
            return by_kind[kind]
        if kind == "effective_order_quad":
            return by_kind["trapezoid_quad"]
        raise ValueError(f"estimator {kind!r} unavailable here (operator not supplied?)")
    raise ValueError(f"unknown estimator kind: {kind!r}")


def fmt_float(x):
    """Shortest round-trip decimal form; used everywhere CSV is written."""
    return repr(float(x))


def fmt_sigma(sigma):
    s = complex(sigma)
    if s.imag == 0.0:
        return repr(s.real)
    if s.real == 0.0:
        return f"{s.imag!r}j"
    return f"{s.real!r}{s.imag:+}j"


SWEEP_COLUMNS = ("problem", "m", "sigma", "p", "t", "estimator", "value",
                 "extra_matvecs", "oracle_error")


def write_sweep_csv(path, rows):
    """Long-format estimator sweep: one row per (problem, m, t, estimator).

    Rows are sorted so identical inputs produce byte-identical files.
    """
    def key(r):
        return (r["problem"], r["m"], r["p"], r["t"], r["estimator"])

    lines = [",".join(SWEEP_COLUMNS)]
    for r in sorted(rows, key=key):
        lines.append(",".join([
            r["problem"], str(r["m"]), fmt_sigma(r["sigma"]), str(r["p"]),
            fmt_float(r["t"]), r["estimator"], fmt_float(r["value"]),
            str(r["extra_matvecs"]), fmt_float(r["oracle_error"]),
        ]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
