"""Krylov approximants for exp(sigma*t*A)v and phi_p(sigma*t*A)v, plus defect diagnostics.

The standard approximant projects through the m-dimensional decomposition,

    S(t) v = V phi_p(sigma t T) e_1,

while the corrected one works with the (m+1) x (m+1) augmented matrix

    Tbar = [[T, 0], [tau e_m^*, 0]]

and the extended basis [V, v_next], buying one extra order of accuracy.
The defect scalar delta(t) = (e^{sigma t T})_{m,1} and its exact time
derivative feed the quadrature-style error estimates and the effective
order rho(t) = t |delta|' / |delta|.
"""

from dataclasses import dataclass

import numpy as np

from .dense import expm_dense, phi_dense, phi_scalar, symtrid_eig
from .sparse import validate_prefactor

_EPS = float(np.finfo(np.float64).eps)


class DefectRoundoffError(ValueError):
    """The defect magnitude sits at the round-off floor; derived quantities are unreliable."""


@dataclass(frozen=True)
class DefectSample:
    """Defect corner entry and its exact t-derivative at one time point."""
    t: float
    delta: complex
    delta_prime: complex


class _SmallEval:
    """Evaluations of e^{sigma t T} e_1 and corner phi entries for one (dec, sigma).

    Lanczos decompositions reuse a single symmetric tridiagonal
    eigendecomposition across all t; Arnoldi ones pay one Pade call per
    requested t.
    """

    def __init__(self, dec, sigma):
        self.dec = dec
        self.sigma = sigma
        self._u_cache = {}
        if dec.mode == "lanczos":
            alpha, beta = dec.tridiag()
            self.lam, self.Q = symtrid_eig(alpha, beta)
            self.q1 = self.Q[0].copy()
            self.qm = self.Q[dec.m - 1].copy()
        else:
            self.lam = None

    def u(self, t):
        """e^{sigma t T} e_1 as a length-m complex vector."""
        hit = self._u_cache.get(t)
        if hit is not None:
            return hit
        if self.lam is not None:
            val = self.Q @ (np.exp(self.sigma * t * self.lam) * self.q1)
        else:
            val = expm_dense(self.dec.T, self.sigma * t)[:, 0]
        if len(self._u_cache) > 256:
            self._u_cache.clear()
        self._u_cache[t] = val
        return val

    def corner_phi(self, q, t):
        """e_m^* phi_q(sigma t T) e_1."""
        if q == 0:
            return complex(self.u(t)[self.dec.m - 1])
        if self.lam is not None:
            return complex(self.qm @ (phi_scalar(self.sigma * t * self.lam, q) * self.q1))
        return complex(phi_dense(self.dec.T, self.sigma * t, q)[self.dec.m - 1])

    def phi_column(self, p, t):
        """phi_p(sigma t T) e_1 as a length-m vector (p = 0 gives u)."""
        if p == 0:
            return self.u(t)
        if self.lam is not None:
            return self.Q @ (phi_scalar(self.sigma * t * self.lam, p) * self.q1)
        return phi_dense(self.dec.T, self.sigma * t, p)


def small_eval(dec, sigma):
    """Shared per-(decomposition, sigma) evaluation cache."""
    key = ("small", sigma)
    if key not in dec._caches:
        dec._caches[key] = _SmallEval(dec, sigma)
    return dec._caches[key]


def corrected_matrix(dec):
    """The augmented (m+1) x (m+1) matrix [[T, 0], [tau e_m^*, 0]]."""
    m = dec.m
    Tb = np.zeros((m + 1, m + 1), dtype=complex)
    Tb[:m, :m] = dec.T
    Tb[m, m - 1] = dec.tau_next
    return Tb


class Approximant:
    """Callable wrapper: kind "standard" or "corrected", phi index p >= 0.

    op is only needed by estimators that touch A v_next (the corrected
    and improved-quadrature ones); pass it when those will be used.
    """

    def __init__(self, dec, sigma, kind="standard", p=0, op=None):
        if kind not in ("standard", "corrected"):
            raise ValueError(f"unknown approximant kind: {kind!r}")
        if p < 0:
            raise ValueError("p must be >= 0")
        self.dec = dec
        self.sigma = validate_prefactor(sigma)
        self.kind = kind
        self.p = p
        self.op = op

    @property
    def small(self):
        return small_eval(self.dec, self.sigma)

    def apply(self, t):
        """Evaluate the approximant at time t >= 0; returns a length-n vector."""
        if t < 0:
            raise ValueError("t must be >= 0")
        dec = self.dec
        if self.kind == "standard" or dec.breakdown:
            # on breakdown the correction term carries tau = 0 and drops out
            return dec.V @ self.small.phi_column(self.p, t)
        col = phi_dense(corrected_matrix(dec), self.sigma * t, self.p)
        return dec.V @ col[: dec.m] + dec.v_next * col[dec.m]

    def defect(self, t):
        """Corner entry delta(t) of e^{sigma t T} and its exact derivative."""
        dec = self.dec
        if dec.m < 2:
            raise ValueError("defect needs m >= 2 (the derivative uses the last two rows of T)")
        u = self.small.u(t)
        T = dec.T
        m = dec.m
        delta = complex(u[m - 1])
        delta_prime = self.sigma * (T[m - 1, m - 1] * u[m - 1] + T[m - 1, m - 2] * u[m - 2])
        return DefectSample(t=float(t), delta=delta, delta_prime=complex(delta_prime))

    @property
    def has_analytic_order(self):
        """True when rho(t) comes from the exact derivative formula.

        That path covers the hermitian (sigma = +-1) and skew-hermitian
        (sigma = +-i) Lanczos cases; anything else falls back to a
        centered log-log finite difference.
        """
        s = self.sigma
        near = any(abs(s - ref) <= 1e-12 for ref in (1.0, -1.0, 1j, -1j))
        return self.dec.mode == "lanczos" and near


def _check_floor(sample, u):
    floor = 1e3 * _EPS * float(np.linalg.norm(u))
    if abs(sample.delta) < floor:
        raise DefectRoundoffError(
            f"|delta({sample.t})| = {abs(sample.delta):.3e} is below the round-off floor {floor:.3e}")


def effective_order(appr, t):
    """Local log-log slope rho(t) = t |delta|'(t) / |delta(t)|.

    Tends to m-1 as t -> 0+ and decreases from there.  Raises
    DefectRoundoffError when |delta| is too close to the round-off floor
    to differentiate meaningfully.
    """
    if t <= 0:
        raise ValueError("effective_order needs t > 0")
    sample = appr.defect(t)
    u = appr.small.u(t)
    _check_floor(sample, u)
    if appr.has_analytic_order:
        return float(t * np.real(np.conj(sample.delta) * sample.delta_prime)
                     / abs(sample.delta) ** 2)
    # general fallback: centered difference of log|delta| against log t
    h = 5e-3
    lo = appr.defect(t * np.exp(-h))
    hi = appr.defect(t * np.exp(h))
    _check_floor(lo, appr.small.u(lo.t))
    _check_floor(hi, appr.small.u(hi.t))
    return float((np.log(abs(hi.delta)) - np.log(abs(lo.delta))) / (2 * h))
