"""One function per experiment kind.

Each returns an :class:`Outcome`: named tables, a flat summary (the row a
sweep records for the cell) and the list of failed post-conditions.  Nothing
here touches the filesystem.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..dynamic_boundary import (check_envelopes, evolve_controlled, evolve_uncontrolled,
                                rate_diagnostics)
from ..errors import InsufficientDecade
from ..neutral_control import coincidence_check, controlled_explosion
from ..nonlinearity import AbsorptionLaw, ForcingLaw, Regime, domination_report
from ..radial_elliptic import RadialGrid, large_solution, solve_dirichlet
from ..scalar_blowup import closed_trajectory, integrate_until_blowup
from ..selfsimilar import SelfSimilarSolution, random_samples, residual_check, scaling_invariance
from .config import ExperimentConfig

TRAJECTORY_HEADER = ("t", "u", "segment", "singular_endpoint")
PROFILE_HEADER = ("r", "u", "du_dr", "psi_inv_distance", "ratio")


@dataclass
class Table:
    name: str  # suffix of the CSV file; "" is the main table
    header: tuple
    rows: list
    singular: tuple = ()


@dataclass
class Outcome:
    tables: list[Table] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    def require(self, ok: bool, what: str):
        if not ok:
            self.failures.append(what)


def forcing_law(cfg: ExperimentConfig) -> ForcingLaw:
    spec = cfg.forcing
    if spec.kind == "exponential":
        return ForcingLaw.exponential(spec.lam)
    return ForcingLaw.power(spec.p, spec.k, spec.lam)


def absorption_law(cfg: ExperimentConfig) -> AbsorptionLaw:
    spec = cfg.absorption
    return {"power": lambda: AbsorptionLaw.power(spec.m), "exp": AbsorptionLaw.exp,
            "sexp2s": AbsorptionLaw.sexp2s, "zero": AbsorptionLaw.zero}[spec.kind]()


def _kw(**kwargs):
    return {k: v for k, v in kwargs.items() if v is not None}


# ---------------------------------------------------------------------------


def run_ode(cfg: ExperimentConfig, force: bool = False) -> Outcome:
    law = forcing_law(cfg)
    run = integrate_until_blowup(law, cfg.initial.u0, **_kw(cap=cfg.numerics.cap,
                                                            rtol=cfg.numerics.rtol,
                                                            horizon=cfg.numerics.horizon))
    T_closed = run.T_closed if run.T_closed is not None else math.nan
    rel = abs(run.T_est - T_closed) / T_closed if run.T_closed else math.nan
    out = Outcome()
    out.summary = {"T_est": run.T_est, "T_closed": T_closed, "rel_error": rel,
                   "fitted_rate": run.fitted_rate}
    out.tables.append(Table("", tuple(out.summary), [tuple(out.summary.values())]))
    out.tables.append(Table("trajectory", TRAJECTORY_HEADER, list(run.trajectory.rows()),
                            singular=("u",)))
    out.require(not rel > 1e-6, f"blow-up time off the closed form by {rel:.3g} (relative)")
    return out


def run_control_ode(cfg: ExperimentConfig, force: bool = False) -> Outcome:
    law = forcing_law(cfg)
    u0, c = cfg.initial.u0, cfg.control
    closed = closed_trajectory(law, u0)
    T = closed.T_inf
    eps = T / 8.0 if c.eps is None else c.eps
    ce = controlled_explosion(law, u0, eps, c.gamma, c.a, c.q, **_kw(
        knee=c.knee, horizon=cfg.numerics.horizon, n_uniform=cfg.numerics.n_uniform,
        cap=cfg.numerics.cap))
    l1 = ce.l1_per_period
    spread = (max(l1) - min(l1)) / max(l1) if l1 else math.nan
    coincidence = coincidence_check(ce.u_alpha, closed, eps)
    out = Outcome()
    out.summary = {
        "T_inf": T, "T_est": ce.T_est, "controlled_T_est": ce.controlled_T_est,
        "knee": ce.knee, "gamma_fit": ce.exponent.gamma, "prefactor": ce.exponent.prefactor,
        "periods": len(l1), "l1_first_period": l1[0] if l1 else math.nan,
        "l1_spread": spread, "positive": ce.positive, "coincidence": coincidence,
        "picard_iterations": ce.neutral.iterations,
    }
    out.tables.append(Table("", tuple(out.summary), [tuple(out.summary.values())]))
    out.tables.append(Table("trajectory", TRAJECTORY_HEADER, list(ce.trajectory.rows()),
                            singular=("u",)))
    out.require(ce.positive, "controlled trajectory is not positive")
    out.require(coincidence <= 1e-7, f"coincidence with the uncontrolled solution {coincidence:.3g}")
    out.require(abs(ce.controlled_T_est - T) <= 1e-5,
                f"controlled blow-up time {ce.controlled_T_est!r} differs from {T!r}")
    out.require(len(l1) >= 1 and all(map(math.isfinite, l1)) and spread <= 0.01,
                f"per-period L1 norms not finite and equal: {l1}")
    return out


def run_elliptic(cfg: ExperimentConfig, force: bool = False) -> Outcome:
    g = absorption_law(cfg)
    grid = RadialGrid.build(cfg.geometry.R, cfg.geometry.N)
    prof = solve_dirichlet(g, grid, cfg.initial.beta)
    out = Outcome()
    out.summary = {"u_origin": float(prof.u[0]), "boundary_value": prof.boundary_value,
                   "boundary_flux": prof.boundary_flux, "newton_iterations": prof.newton_iterations,
                   "nondecreasing": prof.nondecreasing, "gradient_bound_ok": prof.gradient_bound_ok}
    out.tables.append(Table("", PROFILE_HEADER, list(prof.rows())))
    out.require(prof.nondecreasing, "profile is not nondecreasing in r")
    out.require(prof.gradient_bound_ok, "gradient exceeds sqrt(2 G(u))")
    return out


def run_large(cfg: ExperimentConfig, force: bool = False) -> Outcome:
    g = absorption_law(cfg)
    large = large_solution(g, cfg.geometry.R, cfg.geometry.N)
    prof = large.profile
    _, ratio = large.boundary_ratio()
    out = Outcome()
    out.summary = {"u_origin": float(prof.u[0]), "closest_distance": large.distances[-1],
                   "last_increment": large.increments[-1] if large.increments else math.nan,
                   "ratio_min": float(np.min(ratio)), "ratio_max": float(np.max(ratio)),
                   "gradient_bound_ok": prof.gradient_bound_ok}
    out.tables.append(Table("", PROFILE_HEADER, list(prof.rows(large.R))))
    out.require(prof.gradient_bound_ok, "gradient exceeds sqrt(2 G(u))")
    return out


def _rate_rows(evo, report):
    """Per-step ratios against the three envelopes (nan at and past T)."""
    f, g, T = evo.f, evo.g, evo.T_inf_est
    lam = f.lam
    weak = report.regime == Regime.WEAK and math.isfinite(report.L_at_infinity)
    kappa = (lam * report.L_at_infinity - 1.0) / report.L_at_infinity if weak else lam
    rows = []
    for t, b, c in zip(evo.times, evo.boundary_values, evo.fluxes):
        gap = T - t
        if gap > 0:
            r_phi = f.phi(b) / gap
            r_psi = b / g.psi_inv(gap) if not g.is_zero else math.nan
            r_two = b / f.phi_inv(kappa * gap) if weak and kappa > 0 else math.nan
        else:
            r_phi = r_psi = r_two = math.nan
        rows.append((float(t), float(b), float(c), T, r_phi, r_psi, r_two))
    return rows


def run_dynbc(cfg: ExperimentConfig, force: bool = False) -> Outcome:
    f, g = forcing_law(cfg), absorption_law(cfg)
    geo = cfg.geometry
    evo = evolve_uncontrolled(f, g, geo.R, geo.N, cfg.initial.u0, force=force,
                              **_kw(cap=cfg.numerics.cap, rtol=cfg.numerics.rtol))
    out = Outcome()
    out.tables.append(Table("", ("t", "b", "c", "T_inf_est", "ratio_phi", "ratio_psi",
                                 "ratio_two_sided"), _rate_rows(evo, evo.report)))
    summary = {"T_inf_est": evo.T_inf_est, "psi_bound": evo.psi_bound,
               "fitted_rate": evo.fitted_rate, "regime": evo.report.regime.value,
               "lambda_0": evo.report.lambda_0, "steps": len(evo.times),
               "flux_violations": evo.flux_violations}
    try:
        diag = rate_diagnostics(evo)
        term = diag.terminal
        summary.update({f"terminal_{k}": term.get(k, math.nan)
                        for k in ("phi", "phi_inv", "psi", "two_sided")})
        summary.update({f"rate_{k}": v for k, v in diag.checks(f.lam).items()})
    except InsufficientDecade as exc:
        summary["rate_note"] = str(exc)
    if not g.is_zero:
        env = check_envelopes(evo, nus=tuple(cfg.numerics.nu))
        summary.update({"interior_violations": env.interior_violations,
                        "locality_violations": env.locality_violations,
                        "subsolution_violations": sum(env.subsolution_violations.values())})
        out.require(env.ok, f"envelope violations: {env}")
    out.summary = summary
    if cfg.output.snapshots:
        rows = [(t, r, u) for t, prof in evo.snapshots for r, u in zip(prof.r, prof.u)]
        out.tables.append(Table("snapshots", ("t", "r", "u"), rows))
    out.require(evo.flux_violations == 0, f"{evo.flux_violations} steps break 0 <= c <= sqrt(2G(b))")
    out.require(evo.within_psi_bound,
                f"blow-up time {evo.T_inf_est!r} exceeds the bound {evo.psi_bound!r}")
    return out


def run_control_pde(cfg: ExperimentConfig, force: bool = False) -> Outcome:
    f, g = forcing_law(cfg), absorption_law(cfg)
    geo, c = cfg.geometry, cfg.control
    ce = evolve_controlled(f, g, geo.R, geo.N, cfg.initial.u0, c.eps, c.gamma, c.a, c.q,
                           c.knee, force=force, **_kw(horizon=cfg.numerics.horizon,
                                                      cap=cfg.numerics.cap))
    out = Outcome()
    rows = [(float(t), float(y), float(v), float(cc), float(bd)) for t, y, v, cc, bd in
            zip(ce.window_t, ce.boundary, ce.comparison, ce.fluxes, ce.flux_bounds)]
    out.tables.append(Table("", ("t", "y", "V", "c", "flux_bound"), rows, singular=("y", "V")))
    out.tables.append(Table("trajectory", TRAJECTORY_HEADER, list(ce.trajectory.rows()),
                            singular=("u",)))
    out.summary = {"T_inf_est": ce.base.T_inf_est, "knee": ce.knee, "K_R": ce.K_R,
                   "K_R_boundary": ce.K_R_boundary, "interior_finite": ce.interior_finite,
                   "comparison_violations": ce.comparison_violations,
                   "flux_violations": ce.flux_violations,
                   "coincidence": ce.coincidence_uncontrolled()}
    if g.is_zero:
        out.summary["coincidence_scalar"] = ce.coincidence()
    out.require(ce.interior_finite, "interior became infinite")
    out.require(ce.comparison_violations == 0,
                f"{ce.comparison_violations} nodes above the comparison function")
    out.require(ce.flux_violations == 0, f"{ce.flux_violations} flux bound violations")
    return out


def run_selfsim(cfg: ExperimentConfig, force: bool = False) -> Outcome:
    sol = SelfSimilarSolution.from_exponents(cfg.absorption.m, cfg.forcing.p)
    samples = random_samples(sol, cfg.numerics.samples, dim=cfg.geometry.N, seed=cfg.seed)
    rep = residual_check(sol, samples, R=cfg.geometry.R)
    scaling = scaling_invariance(sol, 2.0, samples)
    T1 = sol.blowup_time(1.0)
    rows = []
    x_grid = np.linspace(0.0, 2.0, 21)
    t_grid = np.linspace(0.0, 2.0 * T1, 21)
    for xn in x_grid:
        Tx = sol.blowup_time(xn)
        for t in t_grid:
            x = np.zeros(cfg.geometry.N)
            x[-1] = xn
            rows.append((float(xn), float(t), float(sol.solution(x, t)), Tx))
    out = Outcome()
    out.tables.append(Table("", ("x_N", "t", "u_or_flag", "T_inf_of_xN"), rows,
                            singular=("u_or_flag",)))
    out.summary = {"k": sol.k, "C": sol.C, "K": sol.K, "T_inf_at_1": T1,
                   "interior_residual": rep.interior, "profile_boundary": rep.profile_boundary,
                   "shifted_defect": rep.shifted_defect, "gamma_mismatch": rep.gamma_mismatch,
                   "forms_agree": rep.forms_agree, "scaling_invariance": scaling}
    out.require(rep.interior <= 1e-8, f"interior residual {rep.interior:.3g}")
    out.require(rep.profile_boundary <= 1e-8, f"profile boundary residual {rep.profile_boundary:.3g}")
    out.require(rep.shifted_defect <= 1e-8, f"boundary defect {rep.shifted_defect:.3g}")
    out.require(rep.forms_agree <= 1e-12, f"solution forms differ by {rep.forms_agree:.3g}")
    out.require(scaling <= 1e-12, f"scaling invariance {scaling:.3g}")
    return out


def run_domination(cfg: ExperimentConfig) -> dict:
    rep = domination_report(forcing_law(cfg), absorption_law(cfg))
    return {"regime": rep.regime.value, "L_at_infinity": rep.L_at_infinity,
            "lambda_0": rep.lambda_0}


RUNNERS = {
    "ode": run_ode,
    "control-ode": run_control_ode,
    "elliptic": run_elliptic,
    "large": run_large,
    "dynbc": run_dynbc,
    "control-pde": run_control_pde,
    "selfsim": run_selfsim,
}
