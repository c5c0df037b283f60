"""Growing the Krylov space one vector at a time until the bound is met.

For a fixed target (t, tol) there is no need to guess the dimension in
advance: the decomposition is extended step by step and the proven bound
is re-evaluated after each new basis vector.  On the fermion chain at
t = 0.3 the loop stops well below the m_max = 30 cap.
"""

import numpy as np

from krylovexp import (Approximant, KrylovConfig, ProblemSpec, build_krylov,
                       early_stop_dimension, era, extend_krylov,
                       starting_vector)
from krylovexp.oracle import oracle_series

spec = ProblemSpec("hubbard", seed=0)
op, sigma = spec.build()
v = starting_vector(spec)

t, tol = 0.3, 1e-8
dec = early_stop_dimension(op, v, t, tol, 30, sigma)
err = np.linalg.norm(Approximant(dec, sigma).apply(t)
                     - oracle_series(op, sigma, t, v))
print(f"target: t = {t}, tol = {tol}")
print(f"stopped at m = {dec.m} ({dec.matvecs_used} matvecs), "
      f"bound = {era(dec, sigma, t).value:.3e}, error/t = {err / t:.3e}")

# the same decision trail, made explicit with extend_krylov
dec = build_krylov(op, v, KrylovConfig(m_max=30), steps=2)
print(f"\n{'m':>3s} {'bound at t=0.3':>15s}")
while True:
    bound = era(dec, sigma, t).value
    print(f"{dec.m:3d} {bound:15.4e}")
    if bound <= tol * t or dec.m == 30 or dec.breakdown:
        break
    dec = extend_krylov(dec, op, 1)
