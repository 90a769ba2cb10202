import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blowup_lab.errors import InvalidLaw, KellerOssermanFails, NotSuperlinear, OutOfRange
from blowup_lab.nonlinearity import (AbsorptionLaw, ForcingLaw, Regime, TruncatedLaw,
                                     domination_report, g_over_s_increasing, phi, phi_inv, psi,
                                     psi_inv, superlinearity_gap, truncate)

mp.mp.dps = 30


def cubic_shifted():
    return ForcingLaw.custom(lambda s: (1.0 + s) ** 3)


# -- oracles --------------------------------------------------------------------


def phi_oracle(f, r):
    return float(mp.quad(lambda s: 1 / f(s), [r, mp.inf]))


def psi_oracle(G, delta):
    return float(mp.quad(lambda s: 1 / mp.sqrt(2 * G(s)), [delta, mp.inf]))


# -- Phi ----------------------------------------------------------------------------


@pytest.mark.parametrize("p,r,expected", [(2.0, 1.0, 1.0), (3.0, 2.0, 0.125)])
def test_phi_power_closed_form(p, r, expected):
    assert phi(ForcingLaw.power(p), r) == pytest.approx(expected, rel=1e-15)


def test_phi_custom_law_by_quadrature():
    value = phi(cubic_shifted(), 0.0)
    assert value == pytest.approx(0.5, rel=1e-10)
    assert value == pytest.approx(phi_oracle(lambda s: (1 + s) ** 3, 0), rel=1e-10)


def test_phi_custom_matches_oracle_away_from_zero():
    law = ForcingLaw.custom(lambda s: math.exp(s) + s * s)
    for r in (0.1, 1.0, 5.0):
        oracle = phi_oracle(lambda s: mp.exp(s) + s * s, r)
        assert law.phi(r) == pytest.approx(oracle, rel=1e-9)


@pytest.mark.parametrize("p,z,expected", [(2.0, 0.25, 4.0), (3.0, 0.125, 2.0)])
def test_phi_inv_power(p, z, expected):
    assert phi_inv(ForcingLaw.power(p), z) == pytest.approx(expected, rel=1e-14)


def test_phi_inv_custom_at_top_of_range():
    assert phi_inv(cubic_shifted(), 0.5) == pytest.approx(0.0, abs=1e-9)


def test_phi_inv_custom_interior_roundtrip():
    law = cubic_shifted()
    for r in (0.3, 2.0, 30.0):
        assert law.phi_inv(law.phi(r)) == pytest.approx(r, rel=1e-10)


def test_phi_inv_rejects_out_of_range():
    with pytest.raises(OutOfRange):
        cubic_shifted().phi_inv(0.7)
    with pytest.raises(OutOfRange):
        ForcingLaw.power(2.0).phi_inv(-1.0)


@pytest.mark.parametrize("law", [ForcingLaw.power(1.0), ForcingLaw.power(0.5),
                                  ForcingLaw.custom(lambda s: 1.0 + s)])
def test_sublinear_laws_have_no_phi(law):
    with pytest.raises(NotSuperlinear):
        law.phi(1.0)


def test_quadrature_agrees_with_closed_form_on_log_grid():
    for p in (1.5, 2.0, 3.0):
        exact = ForcingLaw.power(p)
        numeric = ForcingLaw.custom(lambda s, p=p: s ** p)
        for r in np.logspace(-1, 3, 9):
            assert numeric.phi(r) == pytest.approx(exact.phi(r), rel=1e-10)


@given(st.floats(1e-3, 1e6), st.sampled_from([1.5, 2.0, 3.0, 4.5]), st.floats(0.0, 3.0))
def test_phi_inverse_roundtrip_property(r, p, k):
    law = ForcingLaw.power(p, k=k)
    assert law.phi_inv(law.phi(r)) == pytest.approx(r, rel=1e-11, abs=1e-12)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_phi_strictly_decreasing_property(a, b):
    if a == b:
        return
    law = ForcingLaw.exponential()
    lo, hi = sorted((a, b))
    if hi - lo < 1e-9 or hi > 700:
        return
    assert law.phi(lo) > law.phi(hi)


def test_forcing_rejects_decreasing_function():
    with pytest.raises(InvalidLaw):
        ForcingLaw.custom(lambda s: math.exp(-s))


def test_forcing_rejects_bad_parameters():
    with pytest.raises(InvalidLaw):
        ForcingLaw.power(2.0, lam=0.0)
    with pytest.raises(InvalidLaw):
        ForcingLaw.power(-1.0)


# -- Psi ----------------------------------------------------------------------------


def test_psi_power_closed_form():
    g = AbsorptionLaw.power(3.0)
    assert psi(g, 1.0) == pytest.approx(math.sqrt(2.0), rel=1e-15)
    assert psi_inv(g, math.sqrt(2.0)) == pytest.approx(1.0, rel=1e-14)


def test_psi_exp_matches_quadrature_oracle():
    g = AbsorptionLaw.exp()
    oracle = psi_oracle(lambda s: mp.expm1(s), 1)
    assert psi(g, 1.0) == pytest.approx(oracle, rel=1e-12)
    assert g.psi_inv(oracle) == pytest.approx(1.0, rel=1e-12)


def test_psi_sexp2s_matches_quadrature_oracle():
    g = AbsorptionLaw.sexp2s()
    G = lambda s: mp.quad(lambda x: x * mp.exp(2 * x), [0, s])  # noqa: E731
    for delta in (0.5, 2.0):
        assert g.psi(delta) == pytest.approx(psi_oracle(G, delta), rel=1e-8)


def test_psi_custom_quadrature_agrees_with_power():
    exact = AbsorptionLaw.power(3.0)
    numeric = AbsorptionLaw.custom(lambda s: s ** 3, primitive=lambda s: s ** 4 / 4)
    for delta in np.logspace(-1, 2, 6):
        assert numeric.psi(delta) == pytest.approx(exact.psi(delta), rel=1e-10)


def test_keller_osserman_failure_detected():
    linear = AbsorptionLaw.power(1.0)
    with pytest.raises(KellerOssermanFails):
        linear.psi(1.0)


@pytest.mark.parametrize("g", [AbsorptionLaw.power(3.0), AbsorptionLaw.power(5.0),
                               AbsorptionLaw.exp()])
def test_psi_inverse_derivative_identities(g):
    """First derivative -sqrt(2G), second derivative g; second-order in h."""
    z = 0.8
    errs1, errs2 = [], []
    for h in (1e-2, 5e-3):
        plus, mid, minus = g.psi_inv(z + h), g.psi_inv(z), g.psi_inv(z - h)
        errs1.append(abs((plus - minus) / (2 * h) + float(g.slope_bound(mid))))
        errs2.append(abs((plus - 2 * mid + minus) / h ** 2 - float(g(mid))))
    for errs in (errs1, errs2):
        order = math.log2(errs[0] / errs[1])
        assert order == pytest.approx(2.0, abs=0.3)


@given(st.floats(1e-3, 1e4), st.sampled_from([1.5, 3.0, 7.0]))
def test_psi_roundtrip_property(delta, m):
    g = AbsorptionLaw.power(m)
    assert g.psi_inv(g.psi(delta)) == pytest.approx(delta, rel=1e-11)


# -- truncation ---------------------------------------------------------------------


def test_truncation_plateau_values():
    tr = truncate(ForcingLaw.power(2.0), 7.0 / 8.0)
    assert tr(0.5) == pytest.approx(0.25)
    assert tr(2.0) == pytest.approx(49.0 / 64.0)
    assert TruncatedLaw(AbsorptionLaw.power(3.0), 10.0)(15.0) == pytest.approx(1000.0)


@given(st.floats(0.0, 100.0), st.floats(0.1, 20.0))
def test_truncation_is_base_of_min_property(u, M):
    base = ForcingLaw.power(2.5, k=0.5)
    assert float(truncate(base, M)(u)) == pytest.approx(float(base(min(u, M))), rel=1e-15)


def test_truncation_lipschitz_bound():
    base = ForcingLaw.power(2.0)
    tr = truncate(base, 3.0)
    u = np.linspace(0.0, 10.0, 4001)
    slopes = np.abs(np.diff(tr(u))) / np.diff(u)
    assert slopes.max() <= float(base.derivative(3.0)) * (1 + 1e-9)


def test_truncation_rejects_nonpositive_knee():
    with pytest.raises(InvalidLaw):
        truncate(ForcingLaw.power(2.0), 0.0)


# -- domination ---------------------------------------------------------------------


def test_balanced_powers_are_weakly_dominated():
    rep = domination_report(ForcingLaw.power(2.0), AbsorptionLaw.power(3.0))
    assert rep.regime == Regime.WEAK
    assert rep.L_at_infinity == pytest.approx(math.sqrt(2.0), rel=1e-12)
    assert rep.lambda_0 == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-10)
    assert rep.lambda_0 * rep.L_zero == pytest.approx(1.0)


def test_steeper_source_is_strongly_dominating():
    rep = domination_report(ForcingLaw.power(3.0), AbsorptionLaw.power(3.0))
    assert rep.regime == Regime.STRONG
    assert math.isinf(rep.L_at_infinity)


def test_weaker_source_is_not_dominating():
    rep = domination_report(ForcingLaw.power(1.5), AbsorptionLaw.power(3.0))
    assert rep.regime == Regime.NONE


@pytest.mark.parametrize("m", [3.0, 5.0, 9.0])
def test_balanced_ratio_is_constant(m):
    f, g = ForcingLaw.power((m + 1) / 2), AbsorptionLaw.power(m)
    tau = np.logspace(-6, 8, 200)
    ratio = np.asarray(f(tau)) / np.asarray(g.slope_bound(tau))
    np.testing.assert_allclose(ratio, math.sqrt((m + 1) / 2), rtol=1e-12)
    rep = domination_report(f, g)
    assert rep.lambda_0 == pytest.approx(math.sqrt(2 / (m + 1)), abs=1e-10)


# -- monotonicity probes -------------------------------------------------------------


def test_superlinearity_gap_signs():
    law = ForcingLaw.power(3.0, k=1.0, monotonicity_exponent=2.0)
    zetas = np.logspace(-6, -2, 10)
    for nu in (1.5, 2.0, 4.0):
        assert np.all(superlinearity_gap(law, nu, zetas) >= -1e-12)
    for nu in (0.25, 0.5):
        assert np.all(superlinearity_gap(law, nu, zetas) <= 1e-12)


def test_superlinearity_gap_vanishes_for_pure_power():
    law = ForcingLaw.power(3.0)
    gap = superlinearity_gap(law, 2.0, np.logspace(-6, -2, 5))
    np.testing.assert_allclose(gap, 0.0, atol=1e-9)


def test_g_over_s_increasing():
    assert g_over_s_increasing(AbsorptionLaw.power(3.0), np.linspace(0.1, 10, 50))
    assert g_over_s_increasing(AbsorptionLaw.sexp2s(), np.linspace(0.1, 10, 50))
