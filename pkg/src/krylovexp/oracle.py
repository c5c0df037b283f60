"""Independent reference solutions used to validate the Krylov results.

Nothing here touches the Krylov or small-matrix code paths: the
exponential action is recomputed from scratch by scaled Taylor
summation with a rigorous remainder bound, and the quarter-scaled
Laplacian additionally gets an analytic eigen-expansion through the
orthonormal sine transform.  Operators only need matvec / norm_1 /
norm_inf / n, so any SparseOperator (or compatible object) works.

Accuracy statements assume the propagation is nonexpansive (true for
every shipped problem); the per-substep tolerances cannot drop below
the floating-point floor of roughly s * eps.
"""

import math

import numpy as np
import scipy.fft
import scipy.sparse as sp

_TERM_CAP = 400
_MIN_TARGET = 1e-14


def oracle_laplacian(n, sigma, t, v):
    """exp(sigma t H) v for H = (1/4) tridiag(-1, 2, -1) via the type-I
    discrete sine transform (orthonormal, self-inverse).  Eigenvalues are
    sin^2(k pi / (2(n+1)))."""
    v = np.asarray(v, dtype=complex)
    if v.shape != (n,):
        raise ValueError("vector length does not match n")
    k = np.arange(1, n + 1)
    lam = np.sin(k * np.pi / (2.0 * (n + 1))) ** 2
    coeff = scipy.fft.dst(v, type=1, norm="ortho")
    return scipy.fft.dst(np.exp(sigma * t * lam) * coeff, type=1, norm="ortho")


def _series_exp_apply(matvec, w, tol_abs):
    """e^M w for ||M||_2 <= 1 by direct Taylor summation.  After adding
    term k the remaining tail is at most 2 ||term_k|| / (k+1) in 2-norm,
    so the loop stops once that is below tol_abs."""
    out = w.astype(complex).copy()
    term = out.copy()
    floor = 2.0 * np.finfo(float).eps * float(np.linalg.norm(w))
    stop = max(tol_abs, floor)
    for k in range(1, _TERM_CAP + 1):
        term = matvec(term) / k
        out += term
        if 2.0 * float(np.linalg.norm(term)) / (k + 1) <= stop:
            return out
    raise RuntimeError("exponential series did not converge within the term cap")


def _series_phi_apply(matvec, v, q, tol_abs):
    """phi_q(M) v for ||M||_2 <= 1: sum of M^j v / (j+q)!."""
    term = np.asarray(v, dtype=complex) / math.factorial(q)
    out = term.copy()
    floor = 2.0 * np.finfo(float).eps * float(np.linalg.norm(v))
    stop = max(tol_abs, floor)
    for j in range(1, _TERM_CAP + 1):
        term = matvec(term) / (j + q)
        out += term
        if 2.0 * float(np.linalg.norm(term)) / (j + q + 1) <= stop:
            return out
    raise RuntimeError("phi series did not converge within the term cap")


def _substep_count(sigma, t, norm_1, norm_inf):
    """Smallest s with ||sigma t A / s|| <= 1 in both the 1- and inf-norm
    (hence also in the 2-norm)."""
    scale = abs(sigma) * t * max(norm_1, norm_inf)
    return max(1, math.ceil(scale))


def oracle_series(op, sigma, t, v, target_accuracy=1e-13):
    """e^{sigma t A} v by s equal substeps of scaled Taylor summation."""
    if target_accuracy < _MIN_TARGET:
        raise ValueError(f"target_accuracy must be >= {_MIN_TARGET}")
    if t < 0:
        raise ValueError("t must be >= 0")
    v = np.asarray(v, dtype=complex)
    if t == 0.0:
        return v.copy()
    s = _substep_count(sigma, t, op.norm_1, op.norm_inf)
    z = sigma * t / s

    def matvec(x):
        return z * op.matvec(x)

    w = v.copy()
    per_tol = target_accuracy * float(np.linalg.norm(v)) / (2.0 * s)
    for _ in range(s):
        w = _series_exp_apply(matvec, w, per_tol)
    return w


def _augmented_phi(op, sigma, t, v, p, target_accuracy):
    """phi_p(sigma t A) v as a block of one big exponential: append p
    auxiliary rows whose chain feeds v into the system, exponentiate with
    the substepped series, read off the first n entries."""
    n = op.n
    A = op.csr if hasattr(op, "csr") else sp.csr_matrix(op)
    C = sp.csr_matrix((v, (np.arange(n), np.zeros(n, dtype=int))), shape=(n, p))
    if p > 1:
        J = sp.diags([np.ones(p - 1)], [1], shape=(p, p))
    else:
        J = sp.csr_matrix((p, p))
    aug = sp.bmat([[sigma * t * A, C], [None, J]], format="csr")
    a1 = float(abs(aug).sum(axis=0).max())
    ainf = float(abs(aug).sum(axis=1).max())
    s = max(1, math.ceil(max(a1, ainf)))
    scaled = aug / s

    w = np.zeros(n + p, dtype=complex)
    w[n + p - 1] = 1.0
    per_tol = target_accuracy * max(1.0, float(np.linalg.norm(v))) / (3.0 * s)
    for _ in range(s):
        w = _series_exp_apply(scaled.dot, w, per_tol)
    return w[:n]


def _recurrence_phi(op, sigma, t, v, p, target_accuracy):
    """phi_p via u' = sigma A u + t^{p-1}/(p-1)! v, u(0) = 0, advanced in s
    substeps of width h:

        u(t+h) = e^{h sigma A} u(t)
                 + sum_{k=1..p} t^{p-k} h^k / (p-k)! phi_k(h sigma A) v

    and finally phi_p(sigma t A) v = u(t) / t^p."""
    s = _substep_count(sigma, t, op.norm_1, op.norm_inf)
    h = t / s
    z = sigma * h

    def matvec(x):
        return z * op.matvec(x)

    vnorm = float(np.linalg.norm(v))
    share = target_accuracy * vnorm / (2.0 * (p + 1) * math.factorial(p))
    pieces = [_series_phi_apply(matvec, v, k, share) for k in range(1, p + 1)]
    u = np.zeros_like(np.asarray(v, dtype=complex))
    exp_tol = share * t ** p / s
    for j in range(s):
        tj = j * h
        u = _series_exp_apply(matvec, u, exp_tol)
        for k in range(1, p + 1):
            u += (tj ** (p - k) * h ** k / math.factorial(p - k)) * pieces[k - 1]
    return u / t ** p


def oracle_phi(op, sigma, t, v, p, target_accuracy=1e-13, method=None):
    """phi_p(sigma t A) v, independent of the projection code.

    Two routes that cross-check each other: the augmented-system
    exponential (default for n <= 500) and the substepped integral
    recurrence (default above).  method forces "augmented" or
    "recurrence".
    """
    if p < 0:
        raise ValueError("p must be >= 0")
    if target_accuracy < _MIN_TARGET:
        raise ValueError(f"target_accuracy must be >= {_MIN_TARGET}")
    if t < 0:
        raise ValueError("t must be >= 0")
    v = np.asarray(v, dtype=complex)
    if p == 0:
        return oracle_series(op, sigma, t, v, target_accuracy)
    if t == 0.0:
        return v / math.factorial(p)
    if method is None:
        method = "augmented" if op.n <= 500 else "recurrence"
    if method == "augmented":
        return _augmented_phi(op, sigma, t, v, p, target_accuracy)
    if method == "recurrence":
        return _recurrence_phi(op, sigma, t, v, p, target_accuracy)
    raise ValueError(f"unknown method: {method!r}")
