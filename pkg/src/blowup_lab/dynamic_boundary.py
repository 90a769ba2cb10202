"""Elliptic interior with a dynamic boundary condition on a ball.

The interior is quasi-static: for boundary value ``b`` the radial Dirichlet
problem fixes the outward flux ``c = C(b) = u_r(R)``.  The boundary value then
obeys the scalar ODE ``b' = lam f(b) - C(b)``, which is stepped with an
embedded Runge-Kutta pair while every right-hand side evaluation re-solves
the interior (warm-started Newton).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DominationFailed, InsufficientDecade, NewtonStalled, OutOfRange
from .neutral_control import (History, SingularKernel, build_kernel, coincidence_check,
                              periodic_extend, reflect_and_extend, solve_neutral_direct)
from .nonlinearity import (AbsorptionLaw, DominationReport, ForcingLaw, Regime,
                           TruncatedLaw, domination_report, truncate)
from .radial_elliptic import LargeSolution, RadialGrid, RadialProfile, large_solution, solve_dirichlet
from .scalar_blowup import closed_trajectory, fit_blowup_time, last_decade
from .trajectory import PiecewiseTrajectory, Segment, SegmentTag

log = logging.getLogger(__name__)

DEFAULT_CAP = 1e4
WEAK_MARGIN = 0.01
RATE_TOL = 0.05
MIN_DECADE_SAMPLES = 10
FLUX_RTOL = 1e-9
N_SNAPSHOTS = 40


def boundary_grid(R: float, N: int, h_bdry: float | None = None,
                  ratio: float = 1.01) -> RadialGrid:
    """Fine boundary grading: near blow-up the flux sits within O(1/b) of
    sqrt(2G(b)), so the layer must be resolved to better than that."""
    return RadialGrid.build(R, N, h_int=1e-2 * R, h_bdry=1e-7 * R if h_bdry is None else h_bdry,
                            ratio=ratio)


class FluxMap:
    """``b -> C(b)``, the boundary flux of the quasi-static interior."""

    def __init__(self, g, grid: RadialGrid):
        self.g = g
        self.grid = grid
        self._last: RadialProfile | None = None
        self._cache: dict[float, RadialProfile] = {}

    def profile(self, b: float) -> RadialProfile:
        b = float(b)
        hit = self._cache.get(b)
        if hit is not None:
            return hit
        start = None
        if self._last is not None and self._last.boundary_value > 0:
            start = self._last.u * (b / self._last.boundary_value)
        try:
            prof = solve_dirichlet(self.g, self.grid, b, u_init=start)
        except NewtonStalled:
            if start is None:
                raise
            prof = solve_dirichlet(self.g, self.grid, b)  # constant start: a supersolution
        self._last = prof
        if len(self._cache) > 4096:
            self._cache.clear()
        self._cache[b] = prof
        return prof

    def __call__(self, b: float) -> float:
        return self.profile(b).boundary_flux

    def bound(self, b: float) -> float:
        return float(self.g.slope_bound(b))


def flux_within_bound(c: float, bound: float, b: float) -> bool:
    """``0 <= c <= sqrt(2 G(b))`` up to roundoff."""
    slack = FLUX_RTOL * max(1.0, abs(b))
    return -slack <= c <= bound * (1.0 + FLUX_RTOL) + slack


# ---------------------------------------------------------------------------
# uncontrolled evolution


@dataclass
class BoundaryEvolution:
    f: ForcingLaw
    g: AbsorptionLaw
    R: float
    N: int
    u0: float
    times: np.ndarray
    boundary_values: np.ndarray
    fluxes: np.ndarray
    flux_bounds: np.ndarray
    snapshots: list[tuple[float, RadialProfile]]
    T_inf_est: float
    fitted_rate: float
    report: DominationReport
    psi_bound: float  # Psi(u0); the blow-up time may not exceed it
    dense: object = field(default=None, repr=False)
    flux_map: FluxMap | None = field(default=None, repr=False)

    @property
    def flux_violations(self) -> int:
        return int(sum(not flux_within_bound(c, bd, b) for c, bd, b in
                       zip(self.fluxes, self.flux_bounds, self.boundary_values)))

    @property
    def within_psi_bound(self) -> bool:
        return self.T_inf_est <= self.psi_bound + 1e-3

    def b(self, t):
        return self.dense(t)[0]


def _gate(f: ForcingLaw, g: AbsorptionLaw, force: bool) -> DominationReport:
    report = domination_report(f, g)
    lam = f.lam
    if report.regime == Regime.STRONG:
        ok, why = True, ""
    elif report.regime == Regime.WEAK:
        ok = lam > report.lambda_0 * (1.0 + WEAK_MARGIN)
        why = f"lambda={lam:g} not above lambda_0={report.lambda_0:.6g} by {WEAK_MARGIN:.0%}"
    else:
        ok, why = False, "forcing does not dominate the absorption at infinity"
    if not ok:
        if not force:
            raise DominationFailed(why, "forcing.lam")
        log.warning("domination gate overridden: %s", why)
    return report


def evolve_uncontrolled(f: ForcingLaw, g: AbsorptionLaw, R: float = 1.0, N: int = 3,
                        u0: float = 2.0, cap: float = DEFAULT_CAP, force: bool = False,
                        rtol: float = 1e-10, h_bdry: float | None = None,
                        grid: RadialGrid | None = None) -> BoundaryEvolution:
    """Integrate ``b' = lam f(b) - C(b)`` from ``b(0) = u0`` until ``b = cap``."""
    if not u0 > 0:
        raise OutOfRange("initial value must be positive", "initial.u0")
    report = _gate(f, g, force)
    grid = grid or boundary_grid(R, N, h_bdry)
    flux = FluxMap(g, grid)
    lam = f.lam
    if lam * float(f(u0)) < flux(u0) and not force:
        raise DominationFailed("initial datum too small: the boundary value would decrease",
                               "initial.u0")

    def rhs(_t, y):
        return [lam * float(f(y[0])) - flux(y[0])]

    def hit_cap(_t, y):
        return y[0] - cap

    hit_cap.terminal, hit_cap.direction = True, 1
    horizon = 10.0 * f.phi(u0) / lam if f.superlinear else 1e3
    sol = solve_ivp(rhs, (0.0, horizon), [u0], method="RK45", rtol=rtol, atol=1e-12,
                    events=hit_cap, dense_output=True)
    if sol.status != 1:
        raise DominationFailed(f"boundary value stayed below cap {cap:g}", "numerics.cap")
    t, b = sol.t, sol.y[0]
    c = np.array([flux(v) for v in b])
    bounds = np.array([flux.bound(v) for v in b])

    td, bd = last_decade(t, b, cap)
    if td.size < MIN_DECADE_SAMPLES:
        td = np.linspace(t[np.searchsorted(b, cap / 10.0)], t[-1], 4 * MIN_DECADE_SAMPLES)
        bd = sol.sol(td)[0]
    T_est, rate = fit_blowup_time(td, [f.phi(v) for v in bd])

    picks = np.unique(np.searchsorted(b, np.geomspace(b[0], b[-1], N_SNAPSHOTS)).clip(0, b.size - 1))
    snapshots = [(float(t[i]), flux.profile(b[i])) for i in picks]
    psi_bound = g.psi(u0) if g.keller_osserman else math.inf
    return BoundaryEvolution(f, g, R, N, u0, t, b, c, bounds, snapshots, float(T_est),
                             float(rate), report, psi_bound, sol.sol, flux)


def blowup_time_quadrature(f: ForcingLaw, flux, u0: float, cap: float = 1e5) -> float:
    """``T = int_{u0}^inf db / (lam f(b) - C(b))`` by adaptive quadrature in log b.

    The tail beyond ``cap`` uses ``C(b) ~ sqrt(2G(b))`` at its last value ratio.
    """
    from scipy.integrate import quad

    lam = f.lam

    def integrand(x):
        b = math.exp(x)
        return b / (lam * float(f(b)) - flux(b))

    val, _ = quad(integrand, math.log(u0), math.log(cap), limit=400, epsrel=1e-12)
    ratio = flux(cap) / (lam * float(f(cap)))
    return val + f.phi(cap) / (lam * (1.0 - ratio))


# ---------------------------------------------------------------------------
# envelopes and diagnostics


@dataclass(frozen=True)
class EnvelopeCheck:
    interior_violations: int  # u(r, t) > U_inf(r)
    locality_violations: int  # max_{r <= 0.9R} u(r, t) >= U_inf(0.9R)
    subsolution_violations: dict  # nu -> count of nodes with U_sub > u

    @property
    def ok(self) -> bool:
        return (self.interior_violations == 0 and self.locality_violations == 0
                and all(v == 0 for v in self.subsolution_violations.values()))


def check_envelopes(evo: BoundaryEvolution, large: LargeSolution | None = None,
                    nus=(1.1, 1.5, 2.0)) -> EnvelopeCheck:
    g, R = evo.g, evo.R
    large = large or large_solution(g, R, evo.N)
    U_ref = large.profile
    U_09 = float(large(0.9 * R))
    T = evo.psi_bound
    interior = locality = 0
    sub = {nu: 0 for nu in nus}
    for t, prof in evo.snapshots:
        r, u = prof.r, prof.u
        inside = r <= U_ref.r[-1]
        ceiling = np.interp(r[inside], U_ref.r, U_ref.u)
        interior += int(np.sum(u[inside] > ceiling * (1 + 1e-9)))
        locality += int(np.max(u[r <= 0.9 * R]) >= U_09)
        if t < T:
            for nu in nus:
                lower = np.array([g.psi_inv(nu * (T - t + R - x)) for x in r])
                sub[nu] += int(np.sum(lower > u * (1 + 1e-9) + 1e-12))
    return EnvelopeCheck(interior, locality, sub)


@dataclass(frozen=True)
class RateDiagnostics:
    times: np.ndarray
    b: np.ndarray
    phi_ratio: np.ndarray  # Phi(b) / (T - t)
    phi_inv_ratio: np.ndarray  # b / Phi^{-1}(kappa (T - t))
    psi_ratio: np.ndarray  # b / Psi^{-1}(T - t)
    two_sided_ratio: np.ndarray | None  # b / Phi^{-1}(((lam l - 1)/l)(T - t))
    kappa: float
    regime: Regime

    @property
    def terminal(self) -> dict:
        out = {"phi": float(self.phi_ratio[-1]), "phi_inv": float(self.phi_inv_ratio[-1]),
               "psi": float(self.psi_ratio[-1])}
        if self.two_sided_ratio is not None:
            out["two_sided"] = float(self.two_sided_ratio[-1])
        return out

    def checks(self, lam: float, tol: float = RATE_TOL) -> dict[str, bool]:
        term = self.terminal
        out = {
            "phi_lower": term["phi"] >= self.kappa * (1.0 - tol),
            "phi_inv_upper": term["phi_inv"] <= 1.0 + tol,
        }
        if not math.isnan(term["psi"]):
            out["psi_lower"] = term["psi"] >= 1.0 - tol
        if "two_sided" in term:
            out["two_sided"] = abs(term["two_sided"] - 1.0) <= tol
        return out


def rate_diagnostics(evo: BoundaryEvolution, f: ForcingLaw | None = None,
                     g: AbsorptionLaw | None = None,
                     report: DominationReport | None = None,
                     T_inf: float | None = None) -> RateDiagnostics:
    """Ratio series over the last decade of growth before the blow-up time."""
    f = f or evo.f
    g = g or evo.g
    report = report or evo.report
    T = evo.T_inf_est if T_inf is None else T_inf
    cap = float(evo.boundary_values[-1])
    t, b = last_decade(evo.times, evo.boundary_values, cap)
    if t.size < MIN_DECADE_SAMPLES:
        raise InsufficientDecade(f"{t.size} samples in the last decade (need "
                                 f"{MIN_DECADE_SAMPLES})")
    keep = t < T
    t, b = t[keep], b[keep]
    gap = T - t
    lam = f.lam
    if report.regime == Regime.WEAK and math.isfinite(report.L_at_infinity):
        L = report.L_at_infinity
        kappa = (lam * L - 1.0) / L
    else:
        L, kappa = math.inf, lam
    phi_r = np.array([f.phi(v) for v in b]) / gap
    phi_inv_r = b / np.array([f.phi_inv(kappa * s) for s in gap])
    if g.keller_osserman:
        psi_r = b / np.array([g.psi_inv(s) for s in gap])
    else:  # no large solutions, so no boundary envelope to compare with
        psi_r = np.full(b.shape, math.nan)
    two = None
    if report.regime == Regime.WEAK and L > 1:
        two = phi_inv_r.copy()
    return RateDiagnostics(t, b, phi_r, phi_inv_r, psi_r, two, kappa, report.regime)


# ---------------------------------------------------------------------------
# controlled evolution


@dataclass
class ControlledEvolution:
    base: BoundaryEvolution
    kernel: SingularKernel
    knee: float
    window_t: np.ndarray  # original time
    boundary: np.ndarray  # y on the window (inf at T)
    comparison: np.ndarray  # scalar controlled V on the window
    fluxes: np.ndarray
    flux_bounds: np.ndarray
    K_R: float  # sup c / sqrt(V); 0 when V has already blown up before the window
    K_R_boundary: float  # sup c / sqrt(y) >= K_R since y <= V
    trajectory: PiecewiseTrajectory
    interior_finite: bool
    comparison_violations: int
    interior_samples: int

    @property
    def flux_violations(self) -> int:
        return int(sum(not flux_within_bound(c, bd, y) for c, bd, y in
                       zip(self.fluxes, self.flux_bounds, self.boundary)))

    def coincidence(self) -> float:
        """Deviation from the scalar closed form; meaningful only when g = 0."""
        closed = closed_trajectory(self.base.f, self.base.u0)
        return coincidence_check(self.trajectory, closed, self.kernel.t_star)

    def coincidence_uncontrolled(self) -> float:
        """sup |y - b| on [0, T - eps] against the uncontrolled boundary value."""
        t, y = self.trajectory.t, self.trajectory.u
        mask = (t <= self.kernel.tau) & np.isfinite(y)
        if not np.any(mask):
            return 0.0
        return float(np.max(np.abs(y[mask] - self.base.b(t[mask]))))


def evolve_controlled(f: ForcingLaw, g: AbsorptionLaw, R: float = 1.0, N: int = 3,
                      u0: float = 2.0, eps: float | None = None, gamma: float = 0.2,
                      a: float = 1.0, q: float = 2.0, knee: float | None = None,
                      horizon: float | None = None, cap: float = DEFAULT_CAP,
                      force: bool = False, n_window: int = 200,
                      n_interior: int = 24) -> ControlledEvolution:
    """Controlled boundary value through the neutral equation with the
    extra loss ``-C_M(y)`` (interior absorption truncated at the knee)."""
    base = evolve_uncontrolled(f, g, R, N, u0, cap=cap, force=force)
    T = base.T_inf_est
    eps = 0.1 * T if eps is None else eps
    kernel = build_kernel(q, a, gamma, eps, T)
    tau = kernel.tau
    M = float(base.b(tau)) if knee is None else float(knee)
    lam = f.lam
    flux_full = base.flux_map
    history = History.from_solution(
        tau, lambda s: base.dense(np.asarray(s, float))[0],
        lambda s: np.vectorize(lambda v: lam * float(f(v)) - flux_full(v))(
            base.dense(np.asarray(s, float))[0]))
    f_M = truncate(f, M)
    g_M = TruncatedLaw(g, M)
    flux_M = FluxMap(g_M, base.flux_map.grid)

    gap = 1e-12
    ts = np.concatenate([np.linspace(0.0, kernel.t_star, n_window, endpoint=False),
                         kernel.t_star - np.geomspace(1e-3 * kernel.t_star, 1e-8, 30)])
    ts = np.unique(ts[ts < kernel.t_star - gap])
    y = solve_neutral_direct(f_M, history, kernel, ts, loss=flux_M)

    # scalar controlled comparison V with V(0) = u0, same control
    closed = closed_trajectory(f, u0)
    if closed.T_inf > tau:
        V_start = float(closed(tau))
        V = solve_neutral_direct(f_M, history, kernel, ts, initial=V_start)
    else:
        V = np.full(ts.shape, math.inf)

    c = np.array([flux_M(v) for v in y])
    bounds = np.array([flux_M.bound(v) for v in y])
    with np.errstate(divide="ignore", invalid="ignore"):
        K_R = float(np.nanmax(np.where(np.isfinite(V), c / np.sqrt(V), 0.0)))
        K_R_boundary = float(np.max(c / np.sqrt(y)))

    # interior reconstruction and the comparison certificate
    t_orig = ts + tau
    violations, finite, count = 0, True, 0
    picks = np.unique(np.linspace(0, ts.size - 1, n_interior).astype(int))
    for i in picks:
        prof = flux_M.profile(y[i])
        count += 1
        finite &= bool(np.all(np.isfinite(prof.u)))
        violations += int(np.sum(prof.u > V[i] * (1 + 1e-9)))
    for tb, bb in zip(base.times, base.boundary_values):
        if tb <= tau:
            prof = base.flux_map.profile(bb)
            finite &= bool(np.all(np.isfinite(prof.u)))
            violations += int(np.sum(prof.u > float(closed(tb)) * (1 + 1e-9)))
            count += 1

    mask = base.times < tau
    t_orig_seg = np.append(base.times[mask], tau)
    b_orig = np.append(base.boundary_values[mask], float(base.b(tau)))
    original = Segment(t_orig_seg, b_orig, SegmentTag.ORIGINAL)
    growth_t = np.append(t_orig[t_orig > tau], T)
    growth_u = np.append(y[t_orig > tau], math.inf)
    growth = Segment(np.concatenate([[tau], growth_t]), np.concatenate([[b_orig[-1]], growth_u]),
                     SegmentTag.SINGULAR_GROWTH, singular_end=True)
    u_alpha = PiecewiseTrajectory()
    u_alpha.append(original)
    u_alpha.append(growth)
    template = PiecewiseTrajectory(period=2 * T)
    for seg in (original, growth, reflect_and_extend(u_alpha, T)):
        template.append(seg)
    trajectory = periodic_extend(template, 3.0 * T if horizon is None else horizon)
    window_t = np.append(t_orig, T)
    return ControlledEvolution(base, kernel, M, window_t, np.append(y, math.inf),
                               np.append(V, math.inf), c, bounds, K_R, K_R_boundary,
                               trajectory, finite,
                               violations, count)
