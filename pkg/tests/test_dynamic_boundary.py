import logging
import math

import numpy as np
import pytest

from blowup_lab.dynamic_boundary import (FluxMap, blowup_time_quadrature, boundary_grid,
                                         check_envelopes, evolve_controlled, evolve_uncontrolled,
                                         flux_within_bound, rate_diagnostics)
from blowup_lab.errors import DominationFailed, OutOfRange
from blowup_lab.nonlinearity import AbsorptionLaw, ForcingLaw, Regime
from blowup_lab.scalar_blowup import closed_trajectory

from oracles import radial_flux

LAMBDA_0 = math.sqrt(0.5)


@pytest.mark.parametrize("b", [2.0, 10.0])
def test_flux_map_matches_shooting(cubic_absorption, b):
    flux = FluxMap(cubic_absorption, boundary_grid(1.0, 3))
    assert flux(b) == pytest.approx(radial_flux(cubic_absorption, 3, 1.0, b), rel=1e-5)
    assert flux_within_bound(flux(b), flux.bound(b), b)


def test_flux_vanishes_without_absorption():
    flux = FluxMap(AbsorptionLaw.zero(), boundary_grid(1.0, 3))
    assert flux(5.0) == 0.0 and flux(1e4) == 0.0


def test_strong_blowup_time_matches_quadrature(strong_run):
    oracle = blowup_time_quadrature(strong_run.f, strong_run.flux_map, 2.0)
    assert oracle == pytest.approx(0.149908678969, rel=1e-9)
    assert strong_run.T_inf_est == pytest.approx(oracle, rel=1e-7)


def test_strong_run_certificates(strong_run, cubic_large):
    assert strong_run.psi_bound == pytest.approx(math.sqrt(2) / 2, rel=1e-12)
    assert strong_run.within_psi_bound
    assert strong_run.flux_violations == 0
    assert np.all(np.diff(strong_run.boundary_values) >= 0)
    env = check_envelopes(strong_run, cubic_large)
    assert env.ok, env


def test_weak_run_certificates(weak_run):
    assert weak_run.report.regime == Regime.WEAK
    assert weak_run.flux_violations == 0
    assert weak_run.within_psi_bound


def test_strong_rate_upper_envelope(strong_run):
    diag = rate_diagnostics(strong_run)
    gap = strong_run.T_inf_est - diag.times[-1]
    scaled = diag.b[-1] * math.sqrt(gap)
    assert scaled <= math.sqrt(0.5) * 1.05
    checks = diag.checks(1.0)
    assert checks["phi_lower"] and checks["phi_inv_upper"]


def test_weak_two_sided_rate(weak_run):
    diag = rate_diagnostics(weak_run)
    ell = math.sqrt(2)
    assert diag.kappa == pytest.approx((2 * ell - 1) / ell, rel=1e-10)
    assert diag.terminal["two_sided"] == pytest.approx(1.0, abs=0.05)
    assert diag.checks(2.0)["two_sided"]


def test_decoupled_limit_is_scalar():
    evo = evolve_uncontrolled(ForcingLaw.power(2.0), AbsorptionLaw.zero(), u0=1.0)
    assert evo.T_inf_est == pytest.approx(1.0, abs=1e-5)
    assert np.all(evo.fluxes == 0.0)
    assert math.isinf(evo.psi_bound)
    diag = rate_diagnostics(evo)
    assert diag.terminal["phi_inv"] == pytest.approx(1.0, abs=1e-6)
    assert "psi_lower" not in diag.checks(1.0)


def test_gate_threshold(cubic_absorption):
    quad = lambda lam: ForcingLaw.power(2.0, lam=lam)  # noqa: E731
    with pytest.raises(DominationFailed):
        evolve_uncontrolled(quad(0.9 * LAMBDA_0), cubic_absorption, u0=2.0, cap=1e2)
    with pytest.raises(DominationFailed):
        evolve_uncontrolled(quad(0.1), cubic_absorption, u0=2.0, cap=1e2)
    evo = evolve_uncontrolled(quad(1.1 * LAMBDA_0), cubic_absorption, u0=2.0, cap=1e2)
    assert math.isfinite(evo.T_inf_est)


def test_forced_gate_logs_warning(cubic_absorption, caplog):
    with caplog.at_level(logging.WARNING):
        with pytest.raises(DominationFailed):
            # forced past the gate, the small initial datum still decreases
            evolve_uncontrolled(ForcingLaw.power(2.0, lam=0.1), cubic_absorption, u0=2.0,
                                cap=1e2, force=True)
    assert "overridden" in caplog.text


def test_rejects_nonpositive_datum(cubic_absorption):
    with pytest.raises(OutOfRange):
        evolve_uncontrolled(ForcingLaw.power(3.0), cubic_absorption, u0=0.0)


def test_refinement_changes_blowup_time_little(strong_run, cubic_absorption):
    fine = evolve_uncontrolled(ForcingLaw.power(3.0), cubic_absorption, u0=2.0, rtol=1e-11,
                               grid=boundary_grid(1.0, 3).refined())
    assert fine.T_inf_est == pytest.approx(strong_run.T_inf_est, rel=1e-4)


def test_controlled_decoupled_limit():
    f = ForcingLaw.power(2.0)
    ctl = evolve_controlled(f, AbsorptionLaw.zero(), u0=1.0, eps=0.125, horizon=4.0)
    assert ctl.coincidence() <= 1e-6
    assert ctl.coincidence_uncontrolled() <= 1e-6
    assert ctl.flux_violations == 0 and ctl.comparison_violations == 0
    assert ctl.interior_finite
    traj = ctl.trajectory
    assert traj(2.0) == pytest.approx(1.0, rel=1e-6)
    per = traj.l1_norm_per_period()
    assert per[0] == pytest.approx(per[1], rel=0.01)
    closed = closed_trajectory(f, 1.0)
    # between solver steps the trajectory is piecewise linear
    assert traj(0.5) == pytest.approx(float(closed(0.5)), rel=1e-3)
