import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from blowup_lab.alekseev import (VectorField, flow, gronwall_check, power_flow, sensitivity,
                                 solve_perturbed, verify_representation)
from blowup_lab.errors import BlowupInsideInterval, NonMonotonePerturbation
from blowup_lab.nonlinearity import ForcingLaw, truncate

from oracles import rk4_richardson

QUADRATIC = VectorField.from_law(ForcingLaw.power(2.0))
ROTATION = np.array([[0.0, 1.0], [-1.0, 0.0]])


def test_quadratic_flow_value():
    assert flow(QUADRATIC, 0.5, 0.0, [1.0])[0] == pytest.approx(2.0, rel=1e-12)


def test_zero_field_is_stationary():
    zero = VectorField.from_callable(lambda y: 0.0 * y, dim=2)
    np.testing.assert_array_equal(flow(zero, 3.0, 0.0, [1.5, -2.0]), [1.5, -2.0])


def test_sine_flow_against_richardson_oracle():
    h = VectorField.from_callable(np.sin)
    ref = rk4_richardson(lambda _t, y: np.sin(y), [0.3], 0.0, 1.0, n=1000)
    assert flow(h, 1.0, 0.0, [0.3])[0] == pytest.approx(ref[0], abs=1e-9)


def test_flow_at_initial_time_is_identity():
    h = VectorField.from_callable(np.sin)
    np.testing.assert_array_equal(flow(h, 0.7, 0.7, [0.3]), [0.3])


def test_flow_detects_blowup():
    with pytest.raises(BlowupInsideInterval):
        flow(QUADRATIC, 1.5, 0.0, [1.0])


def test_power_flow_closed_form_and_knee():
    law = ForcingLaw.power(2.0)
    assert power_flow(law, 0.5, 1.0) == pytest.approx(2.0)
    assert math.isinf(power_flow(law, 1.5, 1.0))
    tr = truncate(law, 2.0)
    # reaches the knee at t = 1/2, then grows linearly at rate 4
    assert power_flow(tr, 1.0, 1.0) == pytest.approx(2.0 + 4.0 * 0.5)


@given(st.floats(0.0, 0.4), st.floats(0.0, 0.4), st.floats(0.1, 1.0))
def test_semigroup_property(a, b, xi):
    h = VectorField.from_callable(lambda y: np.sin(y) + 0.5 * y ** 2)
    s, t = sorted((a, a + b))
    once = flow(h, t, 0.0, [xi])
    twice = flow(h, t, s, flow(h, s, 0.0, [xi]))
    np.testing.assert_allclose(twice, once, rtol=1e-9, atol=1e-11)


def test_quadratic_sensitivity_value():
    assert sensitivity(QUADRATIC, 0.5, 0.0, [1.0])[0, 0] == pytest.approx(4.0, rel=1e-9)


def test_sensitivity_is_identity_at_start():
    h = VectorField.linear(ROTATION)
    np.testing.assert_array_equal(sensitivity(h, 1.0, 1.0, [1.0, 0.0]), np.eye(2))


def test_linear_sensitivity_is_matrix_exponential():
    h = VectorField.linear(ROTATION)
    S = sensitivity(h, math.pi / 2, 0.0, [1.0, 0.0])
    np.testing.assert_allclose(S, expm(ROTATION * math.pi / 2), atol=1e-9)
    np.testing.assert_allclose(S, [[0.0, 1.0], [-1.0, 0.0]], atol=1e-9)


@pytest.mark.parametrize("field,xi", [
    (VectorField.from_callable(np.sin), [0.3]),
    (VectorField.from_callable(lambda y: np.array([y[1], -np.sin(y[0])]), dim=2), [0.5, 0.1]),
    (VectorField.from_law(ForcingLaw.power(3.0, k=0.5)), [0.2]),
])
def test_sensitivity_matches_finite_differences(field, xi):
    xi = np.asarray(xi, dtype=float)
    S = sensitivity(field, 0.6, 0.0, xi)
    for j in range(len(xi)):
        d = 1e-6 * (1 + abs(xi[j]))
        e = np.zeros_like(xi)
        e[j] = d
        fd = (flow(field, 0.6, 0.0, xi + e) - flow(field, 0.6, 0.0, xi - e)) / (2 * d)
        np.testing.assert_allclose(S[:, j], fd, rtol=1e-5, atol=1e-8)


def test_gronwall_bound():
    h = VectorField.from_callable(lambda y: np.array([y[1], -np.sin(y[0])]), dim=2)
    norm, bound = gronwall_check(h, 2.0, 0.0, [0.5, 0.1])
    assert norm <= bound


def test_unperturbed_solution_is_the_flow():
    sol = solve_perturbed(QUADRATIC, lambda _t, y: 0.0 * y, 0.0, [1.0], 0.5)
    assert sol(0.5)[0] == pytest.approx(2.0, rel=1e-10)


def test_truncated_perturbed_against_richardson_oracle():
    h = VectorField.from_law(truncate(ForcingLaw.power(2.0), 10.0))
    sol = solve_perturbed(h, lambda _t, y: y, 0.0, [1.0], 1.0)
    ref = rk4_richardson(lambda _t, y: np.minimum(y, 10.0) ** 2 - y, [1.0], 0.0, 1.0, n=2000)
    assert sol(1.0)[0] == pytest.approx(ref[0], rel=1e-8)


def test_decreasing_perturbation_rejected():
    with pytest.raises(NonMonotonePerturbation):
        solve_perturbed(QUADRATIC, lambda _t, y: -y, 0.0, [0.5], 0.5)


def test_representation_without_perturbation():
    rep = verify_representation(QUADRATIC, lambda _t, y: 0.0 * y, 0.0, [1.0], 0.5)
    assert rep.residual <= 1e-10


def test_representation_with_time_forcing():
    rep = verify_representation(QUADRATIC, lambda t, y: np.array([-math.sin(t)]), 0.0, [1.0], 0.5)
    assert rep.residual <= 1e-6


def test_representation_linear_duhamel():
    eps = 0.3
    A = ROTATION
    h = VectorField.linear(A)
    xi = np.array([1.0, 0.5])
    rep = verify_representation(h, lambda _t, y: eps * y, 0.0, xi, 2.0)
    assert rep.residual <= 1e-8
    # the perturbed solution itself is exp((A - eps I) t) xi
    np.testing.assert_allclose(rep.lhs[-1], expm((A - eps * np.eye(2)) * 2.0) @ xi, atol=1e-9)


def test_representation_truncated_quadratic_with_absorption():
    h = VectorField.from_law(truncate(ForcingLaw.power(2.0), 10.0))
    rep = verify_representation(h, lambda _t, y: y, 0.0, [1.0], 1.0)
    assert rep.residual <= 1e-6
