import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blowup_lab.errors import KellerOssermanFails, NonConvergedGrid, OutOfRange
from blowup_lab.nonlinearity import AbsorptionLaw
from blowup_lab.radial_elliptic import (RadialGrid, distance_grid, large_solution, solve_dirichlet,
                                        subsolution_eval)

from oracles import large_centre_value, shoot_radial

CUBIC = AbsorptionLaw.power(3.0)


@pytest.fixture(scope="module")
def shooting_centre():
    return shoot_radial(CUBIC, 3, 1.0, 10.0)


def test_shooting_oracle_frozen_value(shooting_centre):
    assert shooting_centre == pytest.approx(2.242751261611122, abs=1e-10)


def test_dirichlet_matches_shooting_after_refinement(shooting_centre):
    grid = RadialGrid.build(1.0, 3)
    errors = []
    for _ in range(3):
        errors.append(abs(solve_dirichlet(CUBIC, grid, 10.0).u[0] - shooting_centre))
        grid = grid.refined()
    assert errors[-1] <= 2e-5
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    np.testing.assert_allclose(orders, 2.0, atol=0.15)


def test_richardson_estimate_accepts_default_grid():
    prof = solve_dirichlet(CUBIC, RadialGrid.build(1.0, 3), 10.0, refinement_tol=1e-4)
    assert prof.boundary_value == 10.0


def test_richardson_estimate_rejects_coarse_grid():
    coarse = RadialGrid.build(1.0, 3, h_int=0.2, h_bdry=0.05)
    with pytest.raises(NonConvergedGrid):
        solve_dirichlet(CUBIC, coarse, 10.0, refinement_tol=1e-9)


def test_profile_shape():
    prof = solve_dirichlet(CUBIC, RadialGrid.build(1.0, 3), 10.0)
    assert prof.nondecreasing and prof.gradient_bound_ok
    assert prof.boundary_flux > 0
    assert prof.u_prime[0] == 0.0


def test_zero_data_gives_zero_solution():
    prof = solve_dirichlet(CUBIC, RadialGrid.build(1.0, 3), 0.0)
    assert np.max(np.abs(prof.u)) == 0.0


def test_negative_data_rejected():
    with pytest.raises(OutOfRange):
        solve_dirichlet(CUBIC, RadialGrid.build(1.0, 3), -1.0)


def test_grid_validation():
    with pytest.raises(OutOfRange):
        RadialGrid(1.0, 3, np.array([0.0, 0.6, 0.5, 1.0]))
    with pytest.raises(OutOfRange):
        RadialGrid.build(1.0, 1)
    fine = RadialGrid.build(1.0, 3).refined()
    assert fine.nodes[0] == 0.0 and fine.nodes[-1] == 1.0


@given(st.floats(0.5, 30.0), st.sampled_from([2, 3, 5]))
def test_dirichlet_properties(beta, N):
    prof = solve_dirichlet(CUBIC, RadialGrid.build(1.0, N), beta)
    assert prof.nondecreasing and prof.gradient_bound_ok
    assert 0.0 < prof.u[0] <= beta


@given(st.floats(0.5, 20.0), st.floats(1.01, 2.0))
def test_comparison_in_boundary_data(beta, factor):
    grid = RadialGrid.build(1.0, 3)
    low = solve_dirichlet(CUBIC, grid, beta).u
    high = solve_dirichlet(CUBIC, grid, beta * factor).u
    assert np.all(high >= low - 1e-12)


# -- large solutions ------------------------------------------------------------------


def test_large_solution_matches_blowup_radius_oracle(cubic_large):
    assert cubic_large.profile.u[0] == pytest.approx(large_centre_value(3.0, 3, 1.0), rel=5e-4)


def test_large_solution_boundary_ratio(cubic_large):
    d, ratio = cubic_large.boundary_ratio()
    assert d.size > 10
    assert np.all((ratio > 0.98) & (ratio < 1.02))
    # the ratio tends to one at the boundary
    assert abs(ratio[np.argmin(d)] - 1.0) < abs(ratio[np.argmax(d)] - 1.0) + 1e-12


def test_large_solution_increments_shrink(cubic_large):
    inc = np.array(cubic_large.increments)
    assert inc[-1] < 1e-6 and np.all(np.diff(inc) < 0)


def test_large_solution_dominates_dirichlet(cubic_large):
    prof = solve_dirichlet(CUBIC, RadialGrid.build(1.0, 3), 10.0)
    assert np.all(cubic_large(prof.r[prof.r < 0.99]) >= prof(prof.r[prof.r < 0.99]))
    assert math.isinf(cubic_large(1.0))


def test_exponential_large_solution_ratio():
    sol = large_solution(AbsorptionLaw.exp())
    _, ratio = sol.boundary_ratio()
    assert np.all((ratio > 0.98) & (ratio < 1.02))


def test_linear_absorption_has_no_large_solution():
    with pytest.raises(KellerOssermanFails):
        large_solution(AbsorptionLaw.power(1.0))


def test_distance_grid_is_graded():
    d = distance_grid(1.0, 1e-2, 1.03, 1e-7)
    assert d[0] == pytest.approx(1e-7) and d[-1] == pytest.approx(1.0)
    assert np.all(np.diff(d) > 0)
    assert np.max(np.diff(d)) <= 1e-2 * (1 + 1e-9)


# -- subsolution ---------------------------------------------------------------------


def test_subsolution_value_and_sign():
    val = subsolution_eval(CUBIC, 1.5, 1.0, 1.0, 0.0, 1.0)
    assert val.value == pytest.approx(math.sqrt(2) / 1.5, rel=1e-12)
    assert val.residual < 0 and val.is_subsolution
    assert val.residual_fd == pytest.approx(val.residual, rel=1e-3)


def test_subsolution_rejects_small_nu():
    with pytest.raises(OutOfRange):
        subsolution_eval(CUBIC, 1.0, 1.0, 1.0, 0.0, 0.5)


@given(st.floats(1.05, 3.0), st.floats(0.05, 0.99), st.floats(0.0, 0.9))
def test_subsolution_residual_negative(nu, r, t):
    val = subsolution_eval(CUBIC, nu, 1.0, 1.0, t, r)
    assert val.residual < 0
    assert val.residual_fd == pytest.approx(val.residual, rel=1e-3, abs=1e-6)
