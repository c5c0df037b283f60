"""Step-size control: the direct inversions and their round trips, the
heuristic update rule on paper examples, the iterated controller, the
propagation loop accounting, and early stopping."""

import math

import numpy as np
import pytest
import scipy.sparse as sp

import krylovexp as kx
from krylovexp import (ControllerSpec, KrylovConfig, SparseOperator,
                       build_krylov, era, era_corrected, expokit_first_step,
                       propagate, propagate_fixed_steps, step_size_direct,
                       step_size_heuristic, step_size_iterated,
                       early_stop_dimension)
from krylovexp.stepper import BENCH_COLUMNS, write_bench_csv

from conftest import random_unit


def test_direct_inversion_round_trip(heat_pair):
    op, sigma, v = heat_pair
    dec = build_krylov(op, v, KrylovConfig(m_max=10))
    tol = 1e-8
    dt_g = step_size_direct(dec, sigma, tol, model="global_budget")
    assert era(dec, sigma, dt_g).value == pytest.approx(tol, rel=1e-12)
    dt_l = step_size_direct(dec, sigma, tol, model="per_unit_step")
    assert era(dec, sigma, dt_l).value == pytest.approx(dt_l * tol, rel=1e-12)


def test_direct_inversion_tol_scaling(heat_pair):
    """Scaling tol by 2^m doubles the global-budget step exactly."""
    op, sigma, v = heat_pair
    dec = build_krylov(op, v, KrylovConfig(m_max=10))
    tol = 1e-9
    dt1 = step_size_direct(dec, sigma, tol, model="global_budget")
    dt2 = step_size_direct(dec, sigma, tol * 2.0 ** dec.m, model="global_budget")
    assert dt2 == pytest.approx(2.0 * dt1, rel=1e-13)


def test_direct_inversion_corrected_round_trip(heat_pair):
    op, sigma, v = heat_pair
    dec = build_krylov(op, v, KrylovConfig(m_max=10))
    tol = 1e-8
    dt = step_size_direct(dec, sigma, tol, model="global_budget",
                          corrected=True, op=op)
    assert era_corrected(dec, op, sigma, dt).value == pytest.approx(tol, rel=1e-12)


def test_direct_inversion_smaller_m_prefix(heat_pair):
    """Inverting at a prefix dimension m < dec.m must agree with a fresh
    build of that dimension."""
    op, sigma, v = heat_pair
    dec = build_krylov(op, v, KrylovConfig(m_max=12))
    small = build_krylov(op, v, KrylovConfig(m_max=7))
    tol = 1e-7
    a = step_size_direct(dec, sigma, tol, m=7, model="global_budget")
    b = step_size_direct(small, sigma, tol, model="global_budget")
    assert a == pytest.approx(b, rel=1e-12)


def test_direct_inversion_breakdown_is_unbounded():
    lam = np.array([1.0, 2.0, 3.0])
    op = SparseOperator(sp.diags(lam).tocsr(), symmetry="hermitian",
                        nonexpansive=True)
    v = np.array([0.6, 0.8, 0.0])
    dec = build_krylov(op, v, KrylovConfig(m_max=3))
    assert dec.breakdown
    assert step_size_direct(dec, -1.0, 1e-8) == math.inf


def test_direct_inversion_validation(heat_pair):
    op, sigma, v = heat_pair
    dec = build_krylov(op, v, KrylovConfig(m_max=5))
    with pytest.raises(ValueError):
        step_size_direct(dec, sigma, 0.0)
    with pytest.raises(ValueError):
        step_size_direct(dec, sigma, 1e-8, m=9)
    with pytest.raises(ValueError):
        step_size_direct(dec, sigma, 1e-8, m=3, corrected=True, op=op)
    one = build_krylov(op, v, KrylovConfig(m_max=1))
    with pytest.raises(ValueError):
        step_size_direct(one, sigma, 1e-8, model="per_unit_step")


def test_heuristic_update_rule():
    """The two pencil-and-paper cases: an estimate exactly on target keeps
    the step (times safety); an estimate 2^m over target halves it."""
    tol, m = 1e-6, 10
    # global target: tol itself
    dt = step_size_heuristic(0.5, tol, tol, m, model="global_budget", safety=1.0)
    assert dt == pytest.approx(0.5, rel=1e-13)
    dt = step_size_heuristic(0.5, tol * 2.0 ** m, tol, m,
                             model="global_budget", safety=1.0)
    assert dt == pytest.approx(0.25, rel=1e-13)
    # per-unit-step target: prev_dt * tol
    dt = step_size_heuristic(0.5, 0.5 * tol, tol, m, model="per_unit_step",
                             safety=0.9)
    assert dt == pytest.approx(0.45, rel=1e-13)
    with pytest.raises(ValueError):
        step_size_heuristic(0.5, 0.0, tol, m)
    with pytest.raises(ValueError):
        step_size_heuristic(0.0, tol, tol, m)


def test_iterated_with_era_estimator_converges_immediately(heat_pair):
    """The fixed point of the era estimator IS the direct inversion, so
    one pass must close the loop."""
    op, sigma, v = heat_pair
    dec = build_krylov(op, v, KrylovConfig(m_max=10))
    tol = 1e-8
    dt, iters = step_size_iterated(dec, sigma, tol, "era")
    assert iters == 1
    direct = step_size_direct(dec, sigma, tol, model="per_unit_step")
    assert dt == pytest.approx(direct, rel=1e-12)


def test_iterated_err1_converges_and_respects_budget(hubbard_op, hubbard_vec):
    dec = build_krylov(hubbard_op, hubbard_vec, KrylovConfig(m_max=10))
    tol = 1e-8
    dt, iters = step_size_iterated(dec, -1j, tol, "err1", op=hubbard_op)
    assert 1 <= iters <= 5
    assert math.isfinite(dt) and dt > 0


def test_iterated_on_breakdown_returns_inf():
    lam = np.array([1.0, 2.0, 3.0])
    op = SparseOperator(sp.diags(lam).tocsr(), symmetry="hermitian",
                        nonexpansive=True)
    v = np.array([0.6, 0.8, 0.0])
    dec = build_krylov(op, v, KrylovConfig(m_max=3))
    dt, iters = step_size_iterated(dec, -1.0, 1e-8, "era")
    assert dt == math.inf and iters == 0


def test_controller_spec_defaults_and_validation():
    direct = ControllerSpec("direct_era_local", 1e-8)
    assert direct.safety == 1.0
    heur = ControllerSpec("heuristic", 1e-8)
    assert heur.safety == 0.9
    explicit = ControllerSpec("heuristic", 1e-8, safety=0.8)
    assert explicit.safety == 0.8
    for bad in (
        dict(kind="pid", tol=1e-8),
        dict(kind="heuristic", tol=0.0),
        dict(kind="heuristic", tol=1e-8, error_model="rms"),
        dict(kind="heuristic", tol=1e-8, iteration_cap=0),
        dict(kind="heuristic", tol=1e-8, safety=1.5),
    ):
        with pytest.raises(ValueError):
            ControllerSpec(**bad)


def test_propagate_reaches_t_final_exactly(heat_pair):
    op, sigma, v = heat_pair
    ctrl = ControllerSpec("direct_era_local", 1e-6)
    res = propagate(op, sigma, v, 1.0, KrylovConfig(m_max=30), ctrl)
    assert res.total_time == pytest.approx(1.0, rel=1e-14)
    # steps tile [0, 1] without gaps
    t = 0.0
    for r in res.records:
        assert r.t_start == pytest.approx(t, rel=1e-13, abs=1e-15)
        t += r.dt


def test_propagate_heat_matches_transform_oracle(heat_pair):
    op, sigma, v = heat_pair
    tol = 1e-6
    ctrl = ControllerSpec("direct_era_local", tol)
    res = propagate(op, sigma, v, 1.0, KrylovConfig(m_max=30), ctrl)
    ref = kx.oracle_laplacian(op.n, sigma, 1.0, v)
    err = float(np.linalg.norm(res.w_final - ref))
    assert err <= tol * 1.0
    # proven bounds all the way down, so the budget inequality is exact
    assert all(r.estimate.is_proven_upper_bound for r in res.records)
    assert err <= res.accumulated_bound * (1 + 1e-9) + 1e-13
    assert res.accumulated_bound <= tol * 1.0 * (1 + 1e-9)


def test_propagate_deterministic(heat_pair):
    op, sigma, v = heat_pair
    ctrl = ControllerSpec("direct_era_local", 1e-7)
    a = propagate(op, sigma, v, 0.7, KrylovConfig(m_max=20), ctrl)
    b = propagate(op, sigma, v, 0.7, KrylovConfig(m_max=20), ctrl)
    assert np.array_equal(a.w_final, b.w_final)
    assert [r.dt for r in a.records] == [r.dt for r in b.records]


def test_propagate_single_clipped_step(heat_pair):
    """t_final below the first predicted step: one clipped substep whose
    estimate is re-evaluated at the clipped width."""
    op, sigma, v = heat_pair
    ctrl = ControllerSpec("direct_era_local", 1e-6)
    res = propagate(op, sigma, v, 1e-4, KrylovConfig(m_max=30), ctrl)
    assert len(res.records) == 1
    r = res.records[0]
    assert r.dt == pytest.approx(1e-4, rel=1e-15)
    dec = build_krylov(op, v, KrylovConfig(m_max=30))
    assert r.estimate.value == pytest.approx(era(dec, sigma, 1e-4).value, rel=1e-12)


def test_propagate_matvec_accounting(heat_pair):
    op, sigma, v = heat_pair
    m = 12
    ctrl = ControllerSpec("direct_era_local", 1e-7)
    res = propagate(op, sigma, v, 0.5, KrylovConfig(m_max=m), ctrl)
    assert all(r.matvecs == m for r in res.records)
    assert res.total_matvecs == m * len(res.records)


def test_corrected_controller_costs_one_extra_matvec(heat_pair):
    """At equal total cost the corrected run uses dimension m-1 plus the
    one extra product: the accounting must show exactly m per substep."""
    op, sigma, v = heat_pair
    m = 12
    ctrl = ControllerSpec("direct_era_corrected", 1e-7)
    res = propagate(op, sigma, v, 0.5, KrylovConfig(m_max=m - 1), ctrl,
                    estimator_kind="era_corrected")
    assert all(r.matvecs == m for r in res.records)
    assert all(r.m_used == m - 1 for r in res.records)


def test_propagate_fixed_steps_runs_exact_count(heat_pair):
    op, sigma, v = heat_pair
    ctrl = ControllerSpec("direct_era_local", 1e-8)
    res = propagate_fixed_steps(op, sigma, v, 7, KrylovConfig(m_max=15), ctrl)
    assert len(res.records) == 7
    assert res.total_time == pytest.approx(sum(r.dt for r in res.records))


def test_heuristic_controller_first_step_is_direct(heat_pair):
    op, sigma, v = heat_pair
    tol = 1e-7
    ctrl = ControllerSpec("heuristic", tol)
    res = propagate_fixed_steps(op, sigma, v, 3, KrylovConfig(m_max=10), ctrl)
    dec = build_krylov(op, v, KrylovConfig(m_max=10))
    expected_first = ctrl.safety * step_size_direct(dec, sigma, tol,
                                                    model="per_unit_step")
    assert res.records[0].dt == pytest.approx(expected_first, rel=1e-12)


def test_expokit_controller_first_step(heat_pair):
    op, sigma, v = heat_pair
    tol = 1e-7
    ctrl = ControllerSpec("expokit_first_step_only", tol)
    res = propagate_fixed_steps(op, sigma, v, 2, KrylovConfig(m_max=10), ctrl)
    assert res.records[0].dt == pytest.approx(
        expokit_first_step(op.norm_inf, 10, tol), rel=1e-12)
    # from the second step onward the plain heuristic takes over
    assert res.records[1].dt != res.records[0].dt


def test_iterated_controller_rejects_global_model():
    with pytest.raises(ValueError):
        ControllerSpec("heuristic_iterated", 1e-7, "global_budget")


def test_propagate_input_validation(heat_pair):
    op, sigma, v = heat_pair
    ctrl = ControllerSpec("direct_era_local", 1e-8)
    cfg = KrylovConfig(m_max=10)
    with pytest.raises(ValueError):
        propagate(op, sigma, 2.0 * v, 1.0, cfg, ctrl)
    with pytest.raises(ValueError):
        propagate(op, sigma, v, 0.0, cfg, ctrl)
    with pytest.raises(ValueError):
        propagate_fixed_steps(op, sigma, v, 0, cfg, ctrl)


def test_early_stop_trivial_operator():
    """A scalar multiple of the identity saturates at m = 1."""
    op = SparseOperator(sp.identity(8, format="csr") * 0.3,
                        symmetry="hermitian", nonexpansive=True)
    v = random_unit(8, seed=80)
    dec = early_stop_dimension(op, v, 1.0, 1e-10, 20, -1.0)
    assert dec.m == 1
    assert dec.breakdown
    assert dec.early_stop_satisfied


def test_early_stop_loose_tolerance_stops_at_one(heat_pair):
    op, sigma, v = heat_pair
    dec = early_stop_dimension(op, v, 1e-3, 1e6, 20, sigma)
    assert dec.m == 1
    assert dec.early_stop_satisfied


def test_early_stop_unreachable_tolerance_reports_failure(heat_pair):
    op, sigma, v = heat_pair
    dec = early_stop_dimension(op, v, 50.0, 1e-14, 5, sigma)
    assert dec.m == 5
    assert not dec.early_stop_satisfied


def test_early_stop_matches_fresh_build_of_same_size(heat_pair):
    """Same m_max cap, so the auto-resolved policies agree and the
    incremental growth is bitwise reproducible."""
    op, sigma, v = heat_pair
    dec = early_stop_dimension(op, v, 1.0, 1e-8, 30, sigma)
    fresh = build_krylov(op, v, KrylovConfig(m_max=30), steps=dec.m)
    assert np.array_equal(dec.T, fresh.T)
    assert dec.matvecs_used == dec.m


def test_write_bench_csv_deterministic(tmp_path):
    rows = [
        {"controller": "b", "estimator": "era", "m": 10, "tol": 1e-8, "N": 3,
         "total_t": 1.0, "total_matvecs": 30, "accumulated_bound": 1e-9,
         "oracle_error_per_unit_t": 1e-10},
        {"controller": "a", "estimator": "era", "m": 10, "tol": 1e-8, "N": 2,
         "total_t": 2.0, "total_matvecs": 20, "accumulated_bound": 2e-9,
         "oracle_error_per_unit_t": 2e-10},
    ]
    p1, p2 = tmp_path / "x.csv", tmp_path / "y.csv"
    write_bench_csv(p1, rows)
    write_bench_csv(p2, list(reversed(rows)))
    assert p1.read_bytes() == p2.read_bytes()
    lines = p1.read_text().splitlines()
    assert lines[0] == ",".join(BENCH_COLUMNS)
    assert lines[1].startswith("a,")
