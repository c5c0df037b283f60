"""Dense small-matrix kernels.

Everything in here operates on the small projected matrices (m x m with
m <= a few hundred), not on the large sparse operator: the matrix
exponential via diagonal Pade with scaling and squaring, phi-function
actions on the first unit vector through an augmented matrix, scalar
phi evaluation, and the symmetric tridiagonal eigensolve used by the
Lanczos fast path.
"""

import math

import numpy as np
import scipy.linalg


# degree-13 diagonal Pade coefficients (numerator; denominator uses the
# alternating signs) and the matching 1-norm scaling threshold
_PADE13_B = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
_PADE13_THETA = 5.371920351148152


def _pade13(M):
    b = _PADE13_B
    n = M.shape[0]
    ident = np.eye(n, dtype=M.dtype)
    M2 = M @ M
    M4 = M2 @ M2
    M6 = M2 @ M4
    U = M @ (M6 @ (b[13] * M6 + b[11] * M4 + b[9] * M2)
             + b[7] * M6 + b[5] * M4 + b[3] * M2 + b[1] * ident)
    V = (M6 @ (b[12] * M6 + b[10] * M4 + b[8] * M2)
         + b[6] * M6 + b[4] * M4 + b[2] * M2 + b[0] * ident)
    return np.linalg.solve(V - U, V + U)


def _is_real_symmetric_tridiagonal(T):
    if T.shape[0] != T.shape[1]:
        return False
    if np.iscomplexobj(T) and np.any(T.imag != 0.0):
        return False
    Tr = T.real
    m = Tr.shape[0]
    if m > 2:
        band = np.tril(Tr, -2)
        if np.any(band != 0.0) or np.any(np.triu(Tr, 2) != 0.0):
            return False
    if m > 1 and not np.array_equal(np.diag(Tr, -1), np.diag(Tr, 1)):
        return False
    return True


def expm_dense(T, z=1.0):
    """Compute e^{zT} for a small dense matrix T.

    Real symmetric tridiagonal T (the Lanczos case) goes through the
    eigendecomposition, which is exact up to roundoff for any complex z.
    Everything else uses degree-13 diagonal Pade with scaling chosen so
    the scaled 1-norm stays below 5.4, followed by repeated squaring.
    """
    T = np.asarray(T)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ValueError("expm_dense needs a square matrix")
    if not np.all(np.isfinite(T)) or not np.isfinite(z):
        raise ValueError("expm_dense: non-finite input")
    if _is_real_symmetric_tridiagonal(T):
        d = np.ascontiguousarray(np.diag(T.real))
        e = np.ascontiguousarray(np.diag(T.real, -1))
        lam, Q = symtrid_eig(d, e)
        with np.errstate(over="ignore", invalid="ignore"):
            E = (Q * np.exp(z * lam)) @ Q.T
        if not np.all(np.isfinite(E)):
            raise OverflowError("expm_dense: result overflowed")
        return E

    M = np.asarray(z * T, dtype=complex)
    nrm = np.linalg.norm(M, 1)
    s = 0
    if nrm > _PADE13_THETA:
        s = int(math.ceil(math.log2(nrm / _PADE13_THETA)))
        M = M / (2.0 ** s)
    E = _pade13(M)
    for _ in range(s):
        E = E @ E
    if not np.all(np.isfinite(E)):
        raise OverflowError("expm_dense: result overflowed")
    return E


def phi_dense(T, z, p):
    """Action phi_p(zT) e_1 for a small dense matrix T.

    For p >= 1 the column is read off the exponential of the augmented
    matrix

        [[zT,  e_1, 0, ...],
         [ 0,   0,  I_{p-1}],
         [ 0,   0,  0     ]]

    of size (m+p) x (m+p): column m+p of its exponential carries
    phi_p(zT) e_1 in the top block. p = 0 reduces to e^{zT} e_1.
    """
    T = np.asarray(T)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ValueError("phi_dense needs a square matrix")
    if p < 0:
        raise ValueError("phi_dense: p must be >= 0")
    m = T.shape[0]
    if p == 0:
        return expm_dense(T, z)[:, 0]
    aug = np.zeros((m + p, m + p), dtype=complex)
    aug[:m, :m] = z * T
    aug[0, m] = 1.0
    for k in range(p - 1):
        aug[m + k, m + k + 1] = 1.0
    return expm_dense(aug)[:m, m + p - 1]


def phi_scalar(z, p):
    """Scalar phi_p evaluated elementwise on a complex array.

    phi_p(z) = sum_k z^k / (k+p)!.  Small arguments (|z| < 1) use the
    Taylor sum directly; larger ones walk the recurrence
    phi_q(z) = (phi_{q-1}(z) - 1/(q-1)!) / z up from phi_0 = exp, where
    the cancellation is harmless.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if p == 0:
        return np.exp(z)
    out = np.empty_like(z)
    small = np.abs(z) < 1.0
    if np.any(small):
        zs = z[small]
        acc = np.full_like(zs, 1.0 / math.factorial(29 + p))
        for k in range(28, -1, -1):
            acc = acc * zs + 1.0 / math.factorial(k + p)
        out[small] = acc
    if np.any(~small):
        zl = z[~small]
        val = np.exp(zl)
        for q in range(1, p + 1):
            val = (val - 1.0 / math.factorial(q - 1)) / zl
        out[~small] = val
    return out


def symtrid_eig(diag, offdiag):
    """Eigendecomposition of a real symmetric tridiagonal matrix.

    Returns (lam, Q) with eigenvalues ascending and orthonormal columns,
    so that T = Q diag(lam) Q^T.
    """
    diag = np.asarray(diag, dtype=float)
    offdiag = np.asarray(offdiag, dtype=float)
    if diag.ndim != 1 or offdiag.shape != (max(diag.size - 1, 0),):
        raise ValueError("symtrid_eig: need diagonal of length m and off-diagonal of length m-1")
    if diag.size == 1:
        return diag.copy(), np.ones((1, 1))
    try:
        lam, Q = scipy.linalg.eigh_tridiagonal(diag, offdiag)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure path
        raise RuntimeError("symtrid_eig: tridiagonal eigensolve did not converge") from exc
    return lam, Q
