"""The four test operators used throughout the experiments.

Each builder returns a SparseOperator (plus the natural propagation
prefactor where one is canonical):

  schrodinger_free      H = (1/4) tridiag(-1, 2, -1), sigma = -i
  heat                  same H, sigma = -1
  hubbard               8-site fermionic chain at half filling, n = 4900
  convection_diffusion  3D centered-difference stencil, sigma = +1

The Laplacian scaling puts spec(H) inside (0, 1), so -iH generates a
unitary group and -H a contraction semigroup; the convection-diffusion
operator has negative-definite Hermitian part for any mu, so sigma = +1
is nonexpansive as well.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import scipy.sparse as sp

from .sparse import SparseOperator

PROBLEM_KINDS = ("schrodinger_free", "heat", "hubbard", "convection_diffusion")

_DEFAULT_PARAMS = {
    "schrodinger_free": {"n": 1000},
    "heat": {"n": 200},
    "hubbard": {"omega": 0.123, "U": 5.0},
    "convection_diffusion": {"n": 15, "mu1": 0.9, "mu2": 1.1},
}


@dataclass(frozen=True)
class ProblemSpec:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in PROBLEM_KINDS:
            raise ValueError(f"unknown problem kind: {self.kind!r}")
        known = _DEFAULT_PARAMS[self.kind]
        extra = set(self.params) - set(known)
        if extra:
            raise ValueError(f"unknown parameters for {self.kind}: {sorted(extra)}")
        merged = dict(known)
        merged.update(self.params)
        object.__setattr__(self, "params", merged)

    def build(self):
        """Return (operator, prefactor) for this problem."""
        p = self.params
        if self.kind == "schrodinger_free":
            return build_schrodinger(p["n"])
        if self.kind == "heat":
            return build_heat(p["n"])
        if self.kind == "hubbard":
            return build_hubbard(p["omega"], p["U"]), -1j
        return build_convection_diffusion(p["n"], p["mu1"], p["mu2"])


def _quarter_laplacian(n):
    if n < 2:
        raise ValueError("n must be >= 2")
    main = np.full(n, 0.5)
    off = np.full(n - 1, -0.25)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr").astype(complex)


def build_schrodinger(n):
    """Free-particle Hamiltonian (1/4) tridiag(-1, 2, -1) with prefactor -i.

    Eigenvalues are sin^2(k pi / (2(n+1))), all inside (0, 1), so the
    2-norm approaches 1 from below as n grows.
    """
    op = SparseOperator(_quarter_laplacian(n), symmetry="hermitian",
                        nonexpansive=True)
    return op, -1j


def build_heat(n):
    """The same quarter-scaled Laplacian driven as a contraction: sigma = -1
    against a positive-definite matrix."""
    op = SparseOperator(_quarter_laplacian(n), symmetry="hermitian",
                        nonexpansive=True)
    return op, -1.0


_SITES = 8
_FILL = 4


def _hubbard_basis():
    """All occupation states with 4 up and 4 down fermions on 8 sites,
    encoded as 16-bit integers (bits 0..7 up, bits 8..15 down), sorted
    ascending by the packed integer value."""
    singles = [sum(1 << b for b in bits)
               for bits in combinations(range(_SITES), _FILL)]
    states = sorted(u | (d << _SITES) for u in singles for d in singles)
    return states


def build_hubbard(omega, U=5.0):
    """8-site Hubbard chain at half filling on the 4900-state sector.

    Nearest-neighbour hopping amplitude -cos(omega) + i sin(omega), on-site
    potential -1.75 at the chain ends and -2 elsewhere, interaction U per
    doubly occupied site.  Fermionic signs follow the Jordan-Wigner string
    over the 16 bit positions; with spin-major bit layout every allowed
    hop swaps adjacent bits, so all string factors are +1.

    Hermitian; the nonexpansive flag is asserted for the unit-modulus
    imaginary prefactors (+/-i) this Hamiltonian is propagated with.
    """
    states = _hubbard_basis()
    index = {s: i for i, s in enumerate(states)}
    nstates = len(states)
    hop = complex(-np.cos(omega) + 1j * np.sin(omega))
    site_pot = np.full(_SITES, -2.0)
    site_pot[0] = site_pot[-1] = -1.75

    rows, cols, vals = [], [], []
    for a, x in enumerate(states):
        diag = 0.0
        for j in range(_SITES):
            n_up = (x >> j) & 1
            n_dn = (x >> (_SITES + j)) & 1
            diag += site_pot[j] * (n_up + n_dn)
            if n_up and n_dn:
                diag += U
        rows.append(a)
        cols.append(a)
        vals.append(complex(diag))
        for base in (0, _SITES):
            for j in range(_SITES - 1):
                p = base + j
                q = p + 1
                bp = (x >> p) & 1
                bq = (x >> q) & 1
                if bp == bq:
                    continue
                y = x ^ ((1 << p) | (1 << q))
                b = index[y]
                # hop towards lower site carries the amplitude, the
                # reverse hop its conjugate
                rows.append(b)
                cols.append(a)
                vals.append(hop if bq else np.conj(hop))
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(nstates, nstates)).tocsr()
    mat.eliminate_zeros()
    return SparseOperator(mat, symmetry="hermitian", nonexpansive=True)


def build_convection_diffusion(n, mu1, mu2):
    """3D convection-diffusion stencil on an n^3 grid, h = 1/(n+1):

        A = B (+) C1 (+) C2   (Kronecker sum)

    with B = h^-2 tridiag(1, -2, 1) and
    C_i = h^-2 tridiag(1 + mu_i, -2, 1 - mu_i).  Non-normal whenever some
    mu_i is nonzero, but the Hermitian part stays negative definite, so
    sigma = +1 is returned as the (nonexpansive) prefactor.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    h = 1.0 / (n + 1)
    scale = 1.0 / (h * h)

    def trid(lo, hi):
        return sp.diags([np.full(n - 1, lo * scale),
                         np.full(n, -2.0 * scale),
                         np.full(n - 1, hi * scale)], [-1, 0, 1])

    B = trid(1.0, 1.0)
    C1 = trid(1.0 + mu1, 1.0 - mu1)
    C2 = trid(1.0 + mu2, 1.0 - mu2)
    eye = sp.identity(n)
    A = (sp.kron(sp.kron(B, eye), eye)
         + sp.kron(sp.kron(eye, C1), eye)
         + sp.kron(sp.kron(eye, eye), C2)).tocsr()
    symmetric = mu1 == 0.0 and mu2 == 0.0
    op = SparseOperator(A, symmetry="hermitian" if symmetric else "general",
                        nonexpansive=True)
    return op, 1.0


def problem_dimension(spec):
    if spec.kind == "hubbard":
        return len(_hubbard_basis())
    if spec.kind == "convection_diffusion":
        return spec.params["n"] ** 3
    return spec.params["n"]


def starting_vector(spec, seed=None):
    """Problem-conventional start vector of unit 2-norm.

    Convection-diffusion uses the all-ones vector; the others draw a
    complex standard-normal vector from the given seed (defaulting to
    spec.seed) and normalize it.
    """
    n = problem_dimension(spec)
    if spec.kind == "convection_diffusion":
        return np.full(n, 1.0 + 0.0j) / np.sqrt(n)
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)
