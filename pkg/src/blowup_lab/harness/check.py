"""Self-test: a fast battery of invariants across all modules."""
from __future__ import annotations

import math
import traceback

import numpy as np

from ..alekseev import VectorField, verify_representation
from ..dynamic_boundary import check_envelopes, evolve_uncontrolled
from ..errors import BlowupLabError, DominationFailed
from ..neutral_control import build_kernel
from ..nonlinearity import AbsorptionLaw, ForcingLaw, domination_report, truncate
from ..radial_elliptic import RadialGrid, large_solution, solve_dirichlet
from ..scalar_blowup import blowup_time, integrate_until_blowup
from ..selfsimilar import SelfSimilarSolution, residual_check, scaling_invariance


def _power_times():
    worst = 0.0
    for p in (1.5, 2.0, 3.0):
        for u0 in (0.5, 1.0, 4.0):
            law = ForcingLaw.power(p)
            T = 1.0 / ((p - 1.0) * u0 ** (p - 1.0))
            worst = max(worst, abs(integrate_until_blowup(law, u0).T_est - T) / T)
    return worst <= 1e-6, f"worst relative error {worst:.3g}"


def _phi_roundtrip():
    worst = 0.0
    for law in (ForcingLaw.power(2.0), ForcingLaw.power(3.0, k=1.0), ForcingLaw.exponential()):
        for r in (0.5, 2.0, 10.0):
            worst = max(worst, abs(law.phi_inv(law.phi(r)) - r) / r)
    return worst <= 1e-10, f"worst relative error {worst:.3g}"


def _truncation():
    law = ForcingLaw.power(2.0)
    tr = truncate(law, 7.0 / 8.0)
    gap = abs(float(tr(7.0 / 8.0 * (1 - 1e-12))) - float(tr(7.0 / 8.0 * (1 + 1e-12))))
    frozen = float(tr(100.0)) == float(law(7.0 / 8.0))
    return gap < 1e-10 and frozen, f"jump {gap:.3g}, frozen above knee {frozen}"


def _representation():
    h = VectorField.from_law(ForcingLaw.power(2.0))
    rep = verify_representation(h, lambda _s, y: 0.1 * y, 0.0, [0.5], 1.0)
    return rep.residual <= 1e-6, f"residual {rep.residual:.3g}"


def _domination():
    lam0 = domination_report(ForcingLaw.power(2.0), AbsorptionLaw.power(3.0)).lambda_0
    err = abs(lam0 - math.sqrt(0.5))
    return err <= 1e-10, f"lambda_0 {lam0!r}, error {err:.3g}"


def _kernel():
    k = build_kernel(2.0, 1.0, 0.2, 0.125, 1.0)
    s = np.linspace(0.0, k.t_star, 50)[1:-1]
    ok = abs(float(k.B(0.0))) < 1e-12 and bool(np.all(k.dB(s) > 0))
    return ok, f"B(0)={float(k.B(0.0)):.3g}"


def _elliptic():
    prof = solve_dirichlet(AbsorptionLaw.power(3.0), RadialGrid.build(1.0, 3), 10.0)
    return prof.nondecreasing and prof.gradient_bound_ok, \
        f"monotone {prof.nondecreasing}, gradient bound {prof.gradient_bound_ok}"


def _large():
    _, ratio = large_solution(AbsorptionLaw.power(3.0)).boundary_ratio()
    lo, hi = float(ratio.min()), float(ratio.max())
    return 0.98 <= lo and hi <= 1.02, f"ratio in [{lo:.6f}, {hi:.6f}]"


def _dynbc():
    f, g = ForcingLaw.power(3.0), AbsorptionLaw.power(3.0)
    evo = evolve_uncontrolled(f, g, u0=2.0)
    env = check_envelopes(evo)
    ok = evo.flux_violations == 0 and evo.within_psi_bound and env.ok
    return ok, (f"T={evo.T_inf_est:.9g}, bound={evo.psi_bound:.9g}, "
                f"flux violations {evo.flux_violations}, envelopes ok {env.ok}")


def _gate():
    g = AbsorptionLaw.power(3.0)
    lam0 = math.sqrt(0.5)
    try:
        evolve_uncontrolled(ForcingLaw.power(2.0, lam=0.9 * lam0), g, u0=2.0, cap=1e2)
    except DominationFailed:
        return True, "refused below lambda_0"
    return False, "accepted lambda below lambda_0"


def _selfsim():
    sol = SelfSimilarSolution(3.0)
    rep = residual_check(sol)
    scale = scaling_invariance(sol, 2.0)
    ok = (max(rep.interior, rep.profile_boundary, rep.shifted_defect) <= 1e-8
          and rep.forms_agree <= 1e-12 and scale <= 1e-12
          and abs(blowup_time(ForcingLaw.power(2.0), 1.0) - 1.0) < 1e-15
          and abs(sol.blowup_time(1.0) - (math.sqrt(2) + 1)) <= 1e-12)
    return ok, f"interior {rep.interior:.3g}, scaling {scale:.3g}"


CHECKS = [
    ("power_blowup_times", _power_times),
    ("phi_roundtrip", _phi_roundtrip),
    ("truncation_continuity", _truncation),
    ("variation_of_constants", _representation),
    ("domination_threshold", _domination),
    ("kernel_shape", _kernel),
    ("dirichlet_profile", _elliptic),
    ("large_solution_profile", _large),
    ("boundary_evolution", _dynbc),
    ("domination_gate", _gate),
    ("self_similar", _selfsim),
]


def run_checks(names=None) -> list[tuple[str, str, str]]:
    """(name, 'pass' | 'fail' | 'error', detail) for every check."""
    results = []
    for name, fn in CHECKS:
        if names is not None and name not in names:
            continue
        try:
            ok, detail = fn()
            results.append((name, "pass" if ok else "fail", detail))
        except BlowupLabError as exc:
            results.append((name, "error", f"{type(exc).__name__}: {exc}"))
        except Exception as exc:  # noqa: BLE001 - a crashing check is a failed check
            tb = traceback.format_exception_only(type(exc), exc)[-1].strip()
            results.append((name, "error", tb))
    return results
