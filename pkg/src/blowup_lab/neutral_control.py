"""Controlled explosion of the scalar ODE through a neutral delay equation.

Pipeline for ``u' = lam f(u)`` blowing up at ``T``:

1. keep the uncontrolled solution on ``[0, T - eps]``;
2. on the window ``(T - eps, T)`` (shifted time ``t in (0, t*)``, ``t* = eps``,
   delay ``tau = T - eps``) apply the control ``alpha = B'(t) y(t - tau)``
   with a kernel ``B`` singular at ``t*``, so the solution blows up at ``T``
   like ``|t - t*|^(-gamma)`` and stays integrable;
3. mirror the trajectory about ``T`` and tile with period ``2T``.

The neutral problem is solved by Picard iteration on its integral
representation; :func:`solve_neutral_direct` integrates the equivalent
absolutely continuous unknown ``w = z - B y(. - tau)`` as an independent route.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad, solve_ivp

from .alekseev import power_flow
from .errors import BadExponent, BadWindow, FixedPointDiverged, OutOfRange, TemplateMismatch
from .nonlinearity import ForcingLaw, TruncatedLaw, truncate
from .scalar_blowup import BlowupSolution, blowup_time, closed_trajectory, integrate_until_blowup
from .trajectory import PiecewiseTrajectory, Segment, SegmentTag

PICARD_TOL = 1e-8
RELAXATION = 0.5
GRID_RATIO = 0.8
DELTA_MIN = 1e-8


# ---------------------------------------------------------------------------
# kernel


@dataclass(frozen=True)
class SingularKernel:
    """``B(t) = a |t - t*|^(-gamma) + m`` on the shifted interval ``[0, tau]``."""

    a: float
    gamma: float
    t_star: float
    tau: float
    q: float
    m_offset: float

    def B(self, t):
        t = np.asarray(t, dtype=float)
        d = np.abs(t - self.t_star)
        with np.errstate(divide="ignore"):
            spike = np.where(d > 0, self.a * d ** (-self.gamma), np.inf) if self.a else 0.0 * d
            out = spike + self.m_offset
        return float(out) if out.ndim == 0 else out

    def dB(self, t):
        t = np.asarray(t, dtype=float)
        d = t - self.t_star
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -self.a * self.gamma * np.sign(d) * np.abs(d) ** (-self.gamma - 1.0)
        return float(out) if out.ndim == 0 else out

    def primitive(self, t):
        """Antiderivative of B, continuous across t*."""
        t = np.asarray(t, dtype=float)
        d = t - self.t_star
        out = (self.a * np.sign(d) * np.abs(d) ** (1.0 - self.gamma) / (1.0 - self.gamma)
               + self.m_offset * t)
        return float(out) if out.ndim == 0 else out

    def integral(self, lo, hi):
        return self.primitive(hi) - self.primitive(lo)

    def lq_norm(self) -> float:
        """||B||_{L^q(0, tau)}, finite because gamma q < 1."""
        val, _ = quad(lambda s: abs(float(self.B(s))) ** self.q, 0.0, self.tau,
                      points=[self.t_star], limit=200)
        return val ** (1.0 / self.q)


def build_kernel(q: float, a: float, gamma: float, eps: float, T_inf: float) -> SingularKernel:
    if not 2.0 * eps < T_inf:
        raise BadWindow(f"need 2*eps < T_inf (eps={eps}, T_inf={T_inf})", "control.eps")
    if not q > 1:
        raise BadExponent("q must exceed 1", "control.q")
    if not 0.0 < gamma < 1.0 / q:
        raise BadExponent(f"gamma={gamma} outside (0, 1/q={1.0 / q})", "control.gamma")
    if not a >= 0:
        raise BadExponent("amplitude must be nonnegative", "control.a")
    t_star = eps
    kernel = SingularKernel(a, gamma, t_star, T_inf - eps, q, -a / t_star ** gamma)
    if a > 0:
        probe = np.linspace(0.0, t_star, 202)[1:-1]
        if not (np.all(kernel.B(probe) > 0) and np.all(kernel.dB(probe) > 0)):
            raise BadExponent("kernel not positive and increasing before t*", "control")
    return kernel


# ---------------------------------------------------------------------------
# history and truncated flow


@dataclass(frozen=True)
class History:
    """Uncontrolled trajectory seen through the delay: ``value(theta) = u(theta + tau)``."""

    tau: float
    value: Callable
    derivative: Callable

    @classmethod
    def from_solution(cls, tau: float, u: Callable, du: Callable) -> "History":
        return cls(tau, lambda th: u(np.asarray(th) + tau), lambda th: du(np.asarray(th) + tau))


def truncated_flow(law: TruncatedLaw, dt, xi):
    """Forward flow of ``lam f_M``; closed form for power and exponential bases."""
    base = law.base
    if base.kind == "power":
        return power_flow(law, dt, xi)
    dt, xi = np.broadcast_arrays(np.asarray(dt, float), np.asarray(xi, float))
    out = np.empty(dt.shape)
    lam, M = base.lam, law.level
    plateau = lam * float(base(M))
    phi_M = base.phi(M)
    for idx in np.ndindex(dt.shape):
        x, s = xi[idx], dt[idx]
        if x >= M:
            out[idx] = x + plateau * s
            continue
        phi_x = base.phi(x)
        t_knee = (phi_x - phi_M) / lam
        out[idx] = base.phi_inv(phi_x - lam * s) if s <= t_knee else M + plateau * (s - t_knee)
    return out


def truncated_sensitivity(law: TruncatedLaw, dt, xi):
    """Phi = h(phi)/h(xi) for the scalar field h = lam f_M (1 above the knee)."""
    phi_t = truncated_flow(law, dt, xi)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.asarray(law(phi_t)) / np.asarray(law(xi))
    return np.where(np.asarray(xi) >= law.level, 1.0, ratio)


# ---------------------------------------------------------------------------
# grid and neutral solve


def neutral_grid(tau: float, t_star: float, n_uniform: int = 512,
                 ratio: float = GRID_RATIO, delta_min: float = DELTA_MIN) -> np.ndarray:
    """Uniform grid on [0, tau] merged with geometric clusters around t*."""
    pts = [np.linspace(0.0, tau, n_uniform + 1), [t_star]]
    for reach in (t_star, tau - t_star):
        n = int(math.floor(math.log(delta_min / reach) / math.log(ratio))) + 1
        deltas = reach * ratio ** np.arange(1, n + 1)
        sign = -1.0 if reach == t_star else 1.0
        pts.append(t_star + sign * deltas)
    grid = np.unique(np.concatenate(pts))
    keep = np.concatenate([[True], np.diff(grid) > 1e-15])
    return grid[keep]


@dataclass
class NeutralSolution:
    t: np.ndarray
    z: np.ndarray
    kernel: SingularKernel
    history: History
    iterations: int
    residual_history: list = field(default_factory=list)

    @property
    def singular_index(self) -> int:
        return int(np.argmin(np.abs(self.t - self.kernel.t_star)))

    def regular_part(self) -> np.ndarray:
        """z - B(t) y(t - tau); bounded and continuous (inf-inf at t* removed)."""
        tau = self.kernel.tau
        with np.errstate(invalid="ignore"):
            out = self.z - self.kernel.B(self.t) * self.history.value(self.t - tau)
        out[self.singular_index] = np.nan
        return out

    def weighted_norm(self) -> float:
        w = np.abs(self.t - self.kernel.t_star) ** self.kernel.gamma
        mask = np.isfinite(self.z)
        return float(np.max(np.abs(self.z[mask]) * w[mask]))


def solve_neutral(f_trunc: TruncatedLaw, history: History, kernel: SingularKernel,
                  grid: np.ndarray | None = None, tol: float = PICARD_TOL,
                  max_iter: int = 200) -> NeutralSolution:
    """Fixed point of

        z(t) = y0(t) + B(t) y(t - tau) - int_0^t B(s) d/ds[Phi(t,s,z(s)) y(s - tau)] ds

    with ``y0`` the truncated flow from ``z(0) = y(0)``.  The Stieltjes
    integral uses product integration: the bracket is linear on each cell and
    ``B`` is integrated exactly.
    """
    t = neutral_grid(kernel.tau, kernel.t_star) if grid is None else np.asarray(grid, float)
    tau, lam = kernel.tau, f_trunc.lam
    hist = np.asarray(history.value(t - tau), dtype=float)
    xi0 = float(history.value(0.0))
    y0 = truncated_flow(f_trunc, t, xi0)
    B = kernel.B(t)
    with np.errstate(invalid="ignore"):
        forced = y0 + B * hist
    cell_B = kernel.integral(t[:-1], t[1:])
    dt_cell = np.diff(t)
    gap = np.subtract.outer(t, t)  # gap[i, j] = t_i - s_j
    closed_cells = gap[:, 1:] >= 0  # cells [s_j, s_{j+1}] with s_{j+1} <= t_i

    def operator(z):
        S = truncated_sensitivity(f_trunc, np.maximum(gap, 0.0), np.broadcast_to(z, gap.shape))
        g = S * hist[None, :]
        slope = np.diff(g, axis=1) / dt_cell[None, :]
        contrib = slope * cell_B[None, :]
        contrib = np.where(closed_cells, contrib, 0.0)
        return forced - contrib.sum(axis=1)

    weight = np.abs(t - kernel.t_star) ** kernel.gamma
    z = forced.copy()
    history_res = []
    omega = 1.0
    for it in range(1, max_iter + 1):
        z_new = operator(z)
        finite = np.isfinite(z_new) & np.isfinite(z)
        res = float(np.max(np.abs(z_new[finite] - z[finite]) * weight[finite]))
        history_res.append(res)
        if len(history_res) > 1 and res > history_res[-2]:
            omega = RELAXATION
        with np.errstate(invalid="ignore"):
            z = np.where(finite, z + omega * (z_new - z), z_new)
        if res <= tol:
            return NeutralSolution(t, z, kernel, history, it, history_res)
        if not math.isfinite(res) or (it > 20 and res > 1e3 * history_res[0]):
            break
    raise FixedPointDiverged(f"Picard iteration did not reach {tol:g}", history_res)


def solve_neutral_direct(f_trunc: TruncatedLaw, history: History, kernel: SingularKernel,
                         t_eval: np.ndarray, loss: Callable[[float], float] | None = None,
                         rtol: float = 1e-12, gap: float = 1e-12,
                         initial: float | None = None) -> np.ndarray:
    """Integrate ``w' = lam f_M(w + B h) - B h' - loss(w + B h)`` with
    ``h(t) = y(t - tau)``, ``w(0) = y(0)`` (or ``initial``) and return ``z = w + B h`` at
    ``t_eval`` (``inf`` at t*).  The integrable singularity at t* is bridged
    analytically over ``[t* - gap, t* + gap]``."""
    tau, lam, ts = kernel.tau, f_trunc.lam, kernel.t_star
    loss = loss or (lambda y: 0.0)

    def rhs(s, w):
        h = float(history.value(s - tau))
        y = w[0] + float(kernel.B(s)) * h
        return [lam * float(f_trunc(y)) - float(kernel.B(s)) * float(history.derivative(s - tau))
                - loss(y)]

    t_eval = np.asarray(t_eval, dtype=float)
    out = np.full(t_eval.shape, np.inf)
    left = t_eval < ts
    w0 = float(history.value(0.0)) if initial is None else float(initial)
    sol = solve_ivp(rhs, (0.0, ts - gap), [w0], method="DOP853", rtol=rtol, atol=1e-12,
                    dense_output=True)
    w_left = sol.sol(t_eval[left])[0]
    out[left] = w_left + kernel.B(t_eval[left]) * history.value(t_eval[left] - tau)
    right = t_eval > ts
    if np.any(right):
        w_gap = float(sol.y[0, -1])
        plateau = lam * float(f_trunc(np.inf))
        w_gap += 2 * gap * plateau - float(history.derivative(ts - tau)) * kernel.integral(
            ts - gap, ts + gap)
        sol_r = solve_ivp(rhs, (ts + gap, kernel.tau), [w_gap], method="DOP853", rtol=rtol,
                          atol=1e-12, dense_output=True)
        w_right = sol_r.sol(t_eval[right])[0]
        out[right] = w_right + kernel.B(t_eval[right]) * history.value(t_eval[right] - tau)
    return out


# ---------------------------------------------------------------------------
# diagnostics near the singularity


@dataclass(frozen=True)
class ExponentFit:
    gamma: float
    prefactor: float
    raw_log_slope: float  # slope of log z against -log|t - t*| (biased by the regular part)
    T_est: float  # root of the linearized |z'|^(-1/(gamma+1))


def singular_exponent_fit(t, z, t_star: float, delta_min: float = DELTA_MIN) -> ExponentFit:
    """Fit ``z ~ C |t - t*|^(-gamma)`` over the last decade before ``t*``.

    The exponent comes from the divided differences ``z'``, whose leading term
    ``gamma C |t - t*|^(-gamma-1)`` dominates the bounded regular part.
    """
    t, z = np.asarray(t), np.asarray(z)
    lo = delta_min * (1.0 - 1e-9)
    mask = (t < t_star) & (t_star - t >= lo) & (t_star - t <= 10.0 * delta_min * (1 + 1e-9))
    tt, zz = t[mask], z[mask]
    mid = 0.5 * (tt[1:] + tt[:-1])
    dz = np.diff(zz) / np.diff(tt)
    d_mid = t_star - mid
    slope, intercept = np.polyfit(np.log(d_mid), np.log(np.abs(dz)), 1)
    gamma = -slope - 1.0
    # with gamma fixed, z = C d^(-gamma) + K is linear in (C, K)
    design = np.column_stack([(t_star - tt) ** (-gamma), np.ones_like(tt)])
    prefactor = np.linalg.lstsq(design, zz, rcond=None)[0][0]
    raw = float(np.polyfit(-np.log(t_star - tt), np.log(zz), 1)[0])
    # |z'|^(-1/(gamma+1)) is linear in t and vanishes at the blow-up time
    lin = np.abs(dz) ** (-1.0 / (gamma + 1.0))
    s2, i2 = np.polyfit(mid - t_star, lin, 1)
    T_est = t_star - i2 / s2 if s2 != 0 else math.nan  # s2 = 0: no singularity (a = 0)
    return ExponentFit(float(gamma), float(prefactor), raw, float(T_est))


# ---------------------------------------------------------------------------
# reflection, periodicity, control schedule


def reflect_and_extend(u_alpha: PiecewiseTrajectory, T_inf: float) -> Segment:
    """Y(t) = u_alpha(2T - t) on [T, 2T]; the start point is singular."""
    t = u_alpha.t
    u = u_alpha.u
    order = np.argsort(t, kind="stable")
    t, u = t[order], u[order]
    keep = np.concatenate([np.diff(t) > 0, [True]])
    t, u = t[keep], u[keep]
    t_ref = 2.0 * T_inf - t[::-1]
    t_ref[0] = T_inf
    t_ref[-1] = 2.0 * T_inf
    return Segment(t_ref, u[::-1].copy(), SegmentTag.REFLECTED, singular_start=True)


def periodic_extend(template: PiecewiseTrajectory, horizon: float,
                    tol: float = 1e-8) -> PiecewiseTrajectory:
    start, period = template.start, template.end - template.start
    u_first, u_last = template.segments[0].u[0], template.segments[-1].u[-1]
    if abs(u_first - u_last) > tol * max(1.0, abs(u_first)):
        raise TemplateMismatch(f"template endpoints differ: {u_first} vs {u_last}")
    out = PiecewiseTrajectory(period=period)
    k = 0
    while start + k * period < horizon - 1e-12 * period:
        for seg in template.segments:
            shifted = seg.shifted(k * period, None if k == 0 else SegmentTag.PERIODIC)
            if shifted.start >= horizon:
                break
            if shifted.end > horizon:
                keep = shifted.t < horizon
                t_cut = np.append(shifted.t[keep], horizon)
                u_cut = np.append(shifted.u[keep], seg(horizon - k * period))
                shifted = Segment(t_cut, u_cut, shifted.tag, shifted.singular_start, False)
            out.append(shifted)
        k += 1
    return out


@dataclass(frozen=True)
class ControlSchedule:
    """The control through its antiderivative ``A`` (``alpha = A'`` is not
    integrable near the blow-up time) together with windows and the sign field."""

    kernel: SingularKernel
    history: History
    T_inf: float
    eps: float

    @property
    def active_window(self) -> tuple[float, float]:
        return (self.T_inf - self.eps, self.T_inf)

    @property
    def reflected_window(self) -> tuple[float, float]:
        return (self.T_inf, self.T_inf + self.eps)

    def _A_shifted(self, s: float) -> float:
        """B(s) y(s - tau) - int_0^s B y'(. - tau), shifted time s in [0, t*)."""
        k, tau = self.kernel, self.kernel.tau
        if s <= 0:
            return 0.0
        integral, _ = quad(lambda x: float(k.B(x)) * float(self.history.derivative(x - tau)),
                           0.0, s, limit=200)
        return float(k.B(s)) * float(self.history.value(s - tau)) - integral

    def antiderivative(self, t: float) -> float:
        """A(t) with A = 0 before the window, inf at the blow-up time; period 2T."""
        period = 2.0 * self.T_inf
        t = math.fmod(t, period)
        lo, hi = self.active_window
        if t <= lo or (t >= self.T_inf + self.eps):
            return 0.0
        if t < hi:
            return self._A_shifted(t - self.kernel.tau)
        if t == hi:
            return math.inf
        # reflected control alpha_hat(t) = -alpha(2T - t): A_hat(t) = A(2T - t)
        return self._A_shifted(2.0 * self.T_inf - t - self.kernel.tau)

    def alpha(self, t: float) -> float:
        """Pointwise control away from the blow-up time."""
        period = 2.0 * self.T_inf
        t = math.fmod(t, period)
        tau = self.kernel.tau
        lo, hi = self.active_window
        if lo < t < hi:
            s = t - tau
            return float(self.kernel.dB(s)) * float(self.history.value(s - tau))
        if hi < t < self.T_inf + self.eps:
            s = 2.0 * self.T_inf - t - tau
            return -float(self.kernel.dB(s)) * float(self.history.value(s - tau))
        return 0.0

    def sign_field(self, t: float) -> int:
        t = math.fmod(t, 2.0 * self.T_inf)
        return 1 if t < self.T_inf else -1


# ---------------------------------------------------------------------------
# full scalar pipeline


@dataclass
class ControlledExplosion:
    law: ForcingLaw
    u0: float
    T_inf: float
    T_est: float
    knee: float
    kernel: SingularKernel
    schedule: ControlSchedule
    neutral: NeutralSolution
    u_alpha: PiecewiseTrajectory
    template: PiecewiseTrajectory
    trajectory: PiecewiseTrajectory
    exponent: ExponentFit
    original_solution: object = field(repr=False, default=None)

    @property
    def l1_per_period(self) -> list[float]:
        return self.trajectory.l1_norm_per_period()

    @property
    def positive(self) -> bool:
        u = self.trajectory.u
        return bool(np.all(u[np.isfinite(u)] > 0))

    @property
    def controlled_T_est(self) -> float:
        return self.kernel.tau + self.exponent.T_est


def _original_segment(law: ForcingLaw, u0: float, t_end: float, n: int = 512):
    sol = solve_ivp(lambda _t, y: [law.lam * float(law(y[0]))], (0.0, t_end), [u0],
                    method="DOP853", rtol=1e-13, atol=1e-300, dense_output=True)
    t = np.unique(np.concatenate([np.linspace(0.0, t_end, n + 1), sol.t]))
    u = sol.sol(t)[0]
    u[0] = u0
    return sol, Segment(t, u, SegmentTag.ORIGINAL)


def controlled_explosion(law: ForcingLaw, u0: float, eps: float, gamma: float = 0.2,
                         a: float = 1.0, q: float = 2.0, knee: float | None = None,
                         horizon: float | None = None, n_uniform: int = 512,
                         cap: float = 1e8) -> ControlledExplosion:
    """Build the controlled, periodically continued trajectory for ``u' = lam f(u)``."""
    T_inf = blowup_time(law, u0)
    T_est = integrate_until_blowup(law, u0, cap=cap).T_est
    kernel = build_kernel(q, a, gamma, eps, T_inf)
    tau = kernel.tau
    sol, original = _original_segment(law, u0, tau)
    history = History.from_solution(
        tau, lambda s: sol.sol(np.asarray(s, float))[0],
        lambda s: law.lam * np.asarray(law(sol.sol(np.asarray(s, float))[0])))
    M = float(sol.sol(tau)[0]) if knee is None else float(knee)
    f_trunc = truncate(law, M)
    neutral = solve_neutral(f_trunc, history, kernel,
                            neutral_grid(tau, kernel.t_star, n_uniform))
    mask = neutral.t <= kernel.t_star
    growth = Segment(neutral.t[mask] + tau, neutral.z[mask], SegmentTag.SINGULAR_GROWTH,
                     singular_end=True)
    u_alpha = PiecewiseTrajectory()
    u_alpha.append(original)
    u_alpha.append(growth)
    reflected = reflect_and_extend(u_alpha, T_inf)
    template = PiecewiseTrajectory(period=2 * T_inf)
    for seg in (original, growth, reflected):
        template.append(seg)
    horizon = 4.0 * T_inf if horizon is None else horizon
    trajectory = periodic_extend(template, horizon)
    fit = singular_exponent_fit(neutral.t, neutral.z, kernel.t_star)
    schedule = ControlSchedule(kernel, history, T_inf, eps)
    return ControlledExplosion(law, u0, T_inf, T_est, M, kernel, schedule, neutral, u_alpha,
                               template, trajectory, fit, sol)


def coincidence_check(u_alpha: PiecewiseTrajectory, u0_closed: BlowupSolution,
                      eps: float) -> float:
    """sup |u_alpha - u0| over samples in [0, T - eps]."""
    t_end = u0_closed.T_inf - eps
    t, u = u_alpha.t, u_alpha.u
    mask = (t <= t_end) & np.isfinite(u)
    if not np.any(mask):
        return 0.0
    return float(np.max(np.abs(u[mask] - u0_closed(t[mask]))))


# ---------------------------------------------------------------------------
# pure bang-bang variant


def bang_bang_pipeline(law: ForcingLaw, u0: float, periods: int = 2,
                       delta_min: float = 1e-12, n: int = 400) -> PiecewiseTrajectory:
    """No truncation and no control: the uncontrolled trajectory up to T,
    mirrored and tiled.  Integrable only if Phi^{-1} is integrable at 0."""
    if not 1e-14 <= delta_min < 0.5:
        raise OutOfRange("delta_min must lie in [1e-14, 0.5)", "numerics.delta_min")
    closed = closed_trajectory(law, u0)
    T = closed.T_inf
    deltas = np.geomspace(delta_min * T, T / 2, n)[::-1]
    t = np.unique(np.concatenate([np.linspace(0.0, T / 2, n), T - deltas, [T]]))
    u = closed(t)
    seg = Segment(t, u, SegmentTag.ORIGINAL, singular_end=True)
    base = PiecewiseTrajectory()
    base.append(seg)
    template = PiecewiseTrajectory(period=2 * T)
    template.append(seg)
    template.append(reflect_and_extend(base, T))
    return periodic_extend(template, periods * 2 * T)
