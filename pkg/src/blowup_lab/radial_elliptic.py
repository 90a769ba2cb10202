"""Radial semilinear elliptic problems on a ball.

Steady problem ``-(r^{N-1} u')' / r^{N-1} + g(u) = 0`` on ``(0, R)`` with
``u'(0) = 0`` and a Dirichlet value at ``R``; the large solution that is
infinite on the boundary; and the explicit traveling subsolution
``Psi^{-1}(nu (T - t + R - r))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import KellerOssermanFails, NewtonStalled, NonConvergedGrid, OutOfRange
from .nonlinearity import AbsorptionLaw, g_over_s_increasing

RESIDUAL_TOL = 1e-10
STEP_TOL = 1e-12
DAMPING_FLOOR = 2.0 ** -20
MAX_NEWTON = 100
GRADIENT_TOL = 1e-3  # relative slack for the discrete gradient bound


@dataclass(frozen=True)
class RadialGrid:
    R: float
    N: int
    nodes: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.nodes, dtype=float)
        if self.N < 2 or int(self.N) != self.N:
            raise OutOfRange("dimension N must be an integer >= 2", "geometry.N")
        if r[0] != 0.0 or abs(r[-1] - self.R) > 1e-14 * self.R or np.any(np.diff(r) <= 0):
            raise OutOfRange("grid must increase strictly from 0 to R", "geometry.grid")
        object.__setattr__(self, "nodes", r)

    @classmethod
    def build(cls, R: float, N: int, h_int: float | None = None, h_bdry: float | None = None,
              ratio: float = 1.05) -> "RadialGrid":
        """Uniform interior spacing ``h_int``, geometrically refined to ``h_bdry`` at R."""
        if not R > 0:
            raise OutOfRange("radius must be positive", "geometry.R")
        h_int = 1e-2 * R if h_int is None else h_int
        h_bdry = 1e-4 * R if h_bdry is None else h_bdry
        steps = [h_bdry]
        while steps[-1] * ratio < h_int and sum(steps) < R / 2:
            steps.append(steps[-1] * ratio)
        layer = R - np.cumsum(steps)[::-1]
        start = layer[0]
        n_uniform = max(1, int(math.ceil(start / h_int)))
        uniform = np.linspace(0.0, start, n_uniform + 1)
        nodes = np.concatenate([uniform, layer[1:], [R]])
        return cls(R, N, nodes)

    def refined(self) -> "RadialGrid":
        """Insert midpoints: halves every spacing."""
        r = self.nodes
        mid = 0.5 * (r[1:] + r[:-1])
        out = np.empty(2 * r.size - 1)
        out[0::2], out[1::2] = r, mid
        return RadialGrid(self.R, self.N, out)

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.nodes)


def _derivative(r: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Second-order derivative of the local quadratic interpolant; u'(0) = 0."""
    du = np.empty_like(u)
    h0, h1 = r[1:-1] - r[:-2], r[2:] - r[1:-1]
    du[1:-1] = (-h1 / (h0 * (h0 + h1)) * u[:-2] + (h1 - h0) / (h0 * h1) * u[1:-1]
                + h0 / (h1 * (h0 + h1)) * u[2:])
    du[0] = 0.0
    du[-1] = _one_sided_end(r, u)
    return du


def _one_sided_end(r: np.ndarray, u: np.ndarray) -> float:
    h1, h2 = r[-1] - r[-2], r[-2] - r[-3]
    a = h1 + h2
    # written on differences so a constant profile gives exactly zero
    return float((u[-1] - u[-2]) * (2 * h1 + h2) / (h1 * a) + (u[-3] - u[-2]) * h1 / (h2 * a))


@dataclass(frozen=True)
class RadialProfile:
    grid: RadialGrid
    u: np.ndarray
    g: AbsorptionLaw = field(repr=False)
    newton_iterations: int = 0

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def u_prime(self) -> np.ndarray:
        return _derivative(self.r, self.u)

    @property
    def boundary_flux(self) -> float:
        return float(self.u_prime[-1])

    @property
    def boundary_value(self) -> float:
        return float(self.u[-1])

    def gradient_excess(self) -> np.ndarray:
        """``u' / (sqrt(2G(u)) (1+tol) + tol)``; values above 1 violate the bound."""
        bound = np.asarray(self.g.slope_bound(self.u))
        return self.u_prime / (bound * (1.0 + GRADIENT_TOL) + GRADIENT_TOL)

    @property
    def gradient_bound_ok(self) -> bool:
        du = self.u_prime
        return bool(np.all(du >= -GRADIENT_TOL * (1 + np.abs(self.u))) and
                    np.all(self.gradient_excess() <= 1.0))

    @property
    def nondecreasing(self) -> bool:
        return bool(np.all(np.diff(self.u) >= -1e-10 * (1.0 + np.abs(self.u[1:]))))

    def __call__(self, s):
        return np.interp(s, self.r, self.u)

    def rows(self, distance_origin: float | None = None):
        """(r, u, u', Psi^{-1}(dist), ratio) with dist measured to ``distance_origin``."""
        R = self.grid.R if distance_origin is None else distance_origin
        du = self.u_prime
        for ri, ui, dui in zip(self.r, self.u, du):
            d = R - ri
            try:
                target = self.g.psi_inv(d) if d > 0 else math.inf
            except (OutOfRange, KellerOssermanFails):
                target = math.nan
            ratio = ui / target if math.isfinite(target) and target > 0 else math.nan
            yield float(ri), float(ui), float(dui), float(target), float(ratio)


# ---------------------------------------------------------------------------
# discretization and Newton


class _Operator:
    """Vertex-centered finite volumes: each node owns ``[r_{i-1/2}, r_{i+1/2}]``."""

    def __init__(self, grid: RadialGrid):
        r, N = grid.nodes, grid.N
        half = np.concatenate([[0.0], 0.5 * (r[1:] + r[:-1]), [r[-1]]])
        self.volume = (half[1:] ** N - half[:-1] ** N) / N
        self.conductance = half[1:-1] ** (N - 1) / np.diff(r)  # between i and i+1
        self.n = r.size

    def residual(self, u: np.ndarray, g: AbsorptionLaw, beta: float) -> tuple[np.ndarray, np.ndarray]:
        """Residual per unit volume and a magnitude scale for relative tests."""
        flux = self.conductance * np.diff(u)
        div = np.zeros(self.n)
        div[:-1] += flux
        div[1:] -= flux
        gu = np.asarray(g(u), dtype=float)
        res = (-div + self.volume * gu) / self.volume
        # size of the individual terms: the roundoff floor of each residual
        mag = self.conductance * (np.abs(u[1:]) + np.abs(u[:-1]))
        terms = np.zeros(self.n)
        terms[:-1] += mag
        terms[1:] += mag
        scale = terms / self.volume + np.abs(gu)
        res[-1] = u[-1] - beta
        scale[-1] = abs(beta)
        return res, scale

    def jacobian_banded(self, u: np.ndarray, g: AbsorptionLaw) -> np.ndarray:
        ab = np.zeros((3, self.n))
        c, V = self.conductance, self.volume
        diag = np.asarray(g.derivative(u), dtype=float).copy()
        diag[:-1] += c / V[:-1]
        diag[1:] += c / V[1:]
        ab[1] = diag
        ab[0, 1:] = -c / V[:-1]  # d res_i / d u_{i+1}
        ab[2, :-1] = -c / V[1:]  # d res_{i+1} / d u_i
        ab[1, -1] = 1.0
        ab[2, -2] = 0.0
        return ab


def _scaled_norm(res: np.ndarray, scale: np.ndarray) -> float:
    return float(np.max(np.abs(res) / (1.0 + scale)))


def _newton(grid: RadialGrid, g: AbsorptionLaw, beta: float, u_init: np.ndarray):
    op = _Operator(grid)
    u = np.array(u_init, dtype=float)
    u[-1] = beta
    res, scale = op.residual(u, g, beta)
    norm = _scaled_norm(res, scale)
    trace = []
    for it in range(1, MAX_NEWTON + 1):
        if norm <= RESIDUAL_TOL:
            # one undamped polishing step brings u to roundoff level, so the
            # result no longer depends on the starting guess
            step = solve_banded((1, 1), op.jacobian_banded(u, g), -res)
            return np.maximum(u + step, 0.0), it
        step = solve_banded((1, 1), op.jacobian_banded(u, g), -res)
        damping = 1.0
        while True:
            trial = np.maximum(u + damping * step, 0.0)
            with np.errstate(over="ignore", invalid="ignore"):
                res_t, scale_t = op.residual(trial, g, beta)
            norm_t = _scaled_norm(res_t, scale_t)
            if np.isfinite(norm_t) and norm_t < norm:
                break
            damping *= 0.5
            if damping < DAMPING_FLOOR:
                trace.append(damping)
                raise NewtonStalled(f"damping fell below 2^-20 at residual {norm:.3e}", trace)
        trace.append(damping)
        rel_step = float(np.max(np.abs(trial - u) / (1.0 + np.abs(trial))))
        u, res, scale, norm = trial, res_t, scale_t, norm_t
        if rel_step <= STEP_TOL:
            return u, it
    raise NewtonStalled(f"no convergence in {MAX_NEWTON} iterations (residual {norm:.3e})", trace)


def solve_dirichlet(g: AbsorptionLaw, grid: RadialGrid, beta: float,
                    u_init: np.ndarray | None = None,
                    refinement_tol: float | None = None) -> RadialProfile:
    """Damped Newton for the radial Dirichlet problem ``u(R) = beta``.

    The constant ``beta`` is a supersolution, so it is the default start.
    With ``refinement_tol`` the solve is repeated on the midpoint-refined grid
    and the Richardson error estimate must stay below it.
    """
    if not beta >= 0:
        raise OutOfRange("boundary value must be nonnegative", "beta")
    start = np.full(grid.nodes.size, float(beta)) if u_init is None else u_init
    u, iters = _newton(grid, g, float(beta), start)
    profile = RadialProfile(grid, u, g, iters)
    if refinement_tol is not None:
        fine_grid = grid.refined()
        fine_start = np.interp(fine_grid.nodes, grid.nodes, u)
        u_fine, _ = _newton(fine_grid, g, float(beta), fine_start)
        err = np.max(np.abs(u_fine[0::2] - u)) / 3.0 / max(1.0, float(np.max(np.abs(u))))
        if err > refinement_tol:
            raise NonConvergedGrid(f"Richardson estimate {err:.3e} exceeds {refinement_tol:g}")
    return profile


# ---------------------------------------------------------------------------
# large solution


@dataclass(frozen=True)
class LargeSolution:
    """Sequence of shrunken-domain profiles converging to the large solution."""

    R: float
    N: int
    profiles: tuple[RadialProfile, ...]
    distances: tuple[float, ...]
    increments: tuple[float, ...]

    @property
    def profile(self) -> RadialProfile:
        return self.profiles[-1]

    @property
    def g(self) -> AbsorptionLaw:
        return self.profile.g

    def __call__(self, r):
        """Interpolated value; beyond the last closure point the Psi^{-1} profile."""
        r = np.asarray(r, dtype=float)
        prof = self.profile
        inside = r <= prof.r[-1]
        out = np.where(inside, np.interp(r, prof.r, prof.u), 0.0)
        outer = ~inside
        if np.any(outer):
            d = self.R - r[outer]
            out[outer] = [self.g.psi_inv(x) if x > 0 else math.inf for x in d]
        return float(out) if out.ndim == 0 else out

    def boundary_ratio(self, band: float = 1e-2) -> tuple[np.ndarray, np.ndarray]:
        """Distances to R and ratios U / Psi^{-1}(dist) over nodes within ``band``."""
        prof = self.profile
        d = self.R - prof.r
        mask = (d <= band) & (d > 0)
        ratio = prof.u[mask] / np.array([self.g.psi_inv(x) for x in d[mask]])
        return d[mask], ratio


def distance_grid(R: float, h_int: float, ratio: float, s_floor: float) -> np.ndarray:
    """Distances to the boundary: geometric from ``s_floor`` until the spacing
    reaches ``h_int``, then uniform out to the center (distance R)."""
    s_switch = min(h_int / (ratio - 1.0), 0.5 * R)
    n_geo = int(math.ceil(math.log(s_switch / s_floor) / math.log(ratio)))
    geo = s_floor * ratio ** np.arange(n_geo)
    geo = geo[geo < s_switch]
    n_uni = max(1, int(math.ceil((R - s_switch) / h_int)))
    return np.concatenate([geo, np.linspace(s_switch, R, n_uni + 1)])


def _psi_inv_interpolant(g: AbsorptionLaw, lo: float, hi: float):
    """Cheap Psi^{-1} on [lo, hi] for Newton starts: closed forms when
    available, otherwise log-log interpolation of a few quadrature values."""
    cap = 0.999 * g.psi_at_zero
    if g.kind in ("power", "exp"):
        return lambda d: np.array([g.psi_inv(x) for x in np.minimum(d, cap)])
    knots = np.geomspace(lo, min(hi, cap), 24)
    values = np.log(np.maximum([g.psi_inv(x) for x in knots], 1e-300))
    return lambda d: np.exp(np.interp(np.log(np.minimum(d, cap)), np.log(knots), values))


def large_solution(g: AbsorptionLaw, R: float = 1.0, N: int = 3, d_start: float = 1e-1,
                   d_min: float = 1e-7, tol: float = 1e-6, h_int: float | None = None,
                   ratio: float = 1.03) -> LargeSolution:
    """Large solution from Dirichlet problems on ``[0, R - d_k]`` with the
    asymptotic closure ``u(R - d_k) = Psi^{-1}(d_k)``, ``d_k = d_start 10^{-k}``.

    All closures share one master grid (graded toward R), so successive
    profiles differ only through the closure.  Stops once they differ by
    less than ``tol`` (relative) on ``[0, 0.9 R]``.
    """
    if not g.keller_osserman:
        raise KellerOssermanFails("large solutions need the Keller-Osserman condition",
                                  "absorption")
    if not g_over_s_increasing(g, np.linspace(1.0, 50.0, 64)):
        raise KellerOssermanFails("g(s)/s is not increasing for large s", "absorption")
    h_int = 1e-2 * R if h_int is None else h_int
    master = distance_grid(R, h_int, ratio, 0.5 * d_min)
    start_profile = _psi_inv_interpolant(g, master[0], R)
    profiles, distances, increments = [], [], []
    probe = np.linspace(0.0, 0.9 * R, 181)
    d = d_start
    while d >= d_min * (1 - 1e-12):
        dist = np.concatenate([[d], master[master > d * math.sqrt(ratio)]])
        nodes = (R - dist)[::-1]
        nodes[0] = 0.0
        grid = RadialGrid(R - d, N, nodes)
        guess = start_profile(dist[::-1])
        u, iters = _newton(grid, g, g.psi_inv(d), guess)
        prof = RadialProfile(grid, u, g, iters)
        if profiles:
            prev = profiles[-1]
            _, i_new, i_old = np.intersect1d(prof.r, prev.r, return_indices=True)
            diff = prof.u[i_new] - prev.u[i_old]
            if np.any(diff < -1e-9 * (1.0 + np.abs(prev.u[i_old]))):
                raise NonConvergedGrid("large-solution approximations are not increasing")
            change = float(np.max(np.abs(prof(probe) - prev(probe))) /
                           max(1.0, float(np.max(np.abs(prof(probe))))))
            increments.append(change)
        profiles.append(prof)
        distances.append(d)
        if increments and increments[-1] < tol:
            return LargeSolution(R, N, tuple(profiles), tuple(distances), tuple(increments))
        d /= 10.0
    raise NonConvergedGrid(f"large solution not converged down to d={d_min:g}: {increments}")


# ---------------------------------------------------------------------------
# subsolution


@dataclass(frozen=True)
class SubsolutionValue:
    value: float
    residual: float  # analytic -Lap U + g(U)
    residual_fd: float  # same from second differences
    boundary_flux: float  # dU/dr at the evaluation point
    origin_mass: float  # -lim_{r->0} r^{N-1} U_r; the Dirac weight at the origin

    @property
    def is_subsolution(self) -> bool:
        return self.residual < 0 and self.origin_mass <= 0


def subsolution_eval(g: AbsorptionLaw, nu: float, T: float, R: float, t: float, r: float,
                     N: int = 3, h: float | None = None) -> SubsolutionValue:
    """``U(r, t) = Psi^{-1}(nu (T - t + R - r))`` and its interior residual.

    ``U_r = nu sqrt(2G(U))`` and ``U_rr = nu^2 g(U)``, hence
    ``-Lap U + g(U) = (1 - nu^2) g(U) - nu (N-1)/r sqrt(2G(U))``.
    """
    if not nu > 1:
        raise OutOfRange("nu must exceed 1", "nu")
    if not (0.0 <= r <= R and 0.0 <= t < T):
        raise OutOfRange("need 0 <= r <= R and 0 <= t < T")

    def U(x):
        return g.psi_inv(nu * (T - t + R - x))

    val = U(r)
    slope = float(g.slope_bound(val))
    gv = float(g(val))
    curvature_term = nu * (N - 1) / r * slope if r > 0 else math.inf
    residual = (1.0 - nu * nu) * gv - curvature_term
    if h is None:
        h = 1e-4 * max(r, 1e-3) if r > 0 else 0.0
    if r > 0 and r + h <= R + 1e-15 and r - h > 0:
        upp = (U(r + h) - 2 * val + U(r - h)) / (h * h)
        up = (U(r + h) - U(r - h)) / (2 * h)
        residual_fd = -upp - (N - 1) / r * up + gv
    elif r > 0:
        # one-sided at the outer radius
        u1, u2 = U(r - h), U(r - 2 * h)
        upp = (val - 2 * u1 + u2) / (h * h)
        up = (3 * val - 4 * u1 + u2) / (2 * h)
        residual_fd = -upp - (N - 1) / r * up + gv
    else:
        residual_fd = -math.inf
    origin_slope = nu * float(g.slope_bound(U(0.0)))
    origin_mass = -(origin_slope if N == 1 else 0.0)
    return SubsolutionValue(val, residual, residual_fd, nu * slope, origin_mass)
