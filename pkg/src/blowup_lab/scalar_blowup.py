"""Uncontrolled superlinear ODE ``u' = lam f(u)``: closed form and numerics."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import CapNotReached, NotSuperlinear, OutOfRange
from .nonlinearity import ForcingLaw
from .trajectory import PiecewiseTrajectory, Segment, SegmentTag

DEFAULT_CAP = 1e8
# stop once the remaining time Phi(u)/lam drops below this fraction of t:
# closer to T the time axis itself is no longer resolvable in double precision
TIME_RESOLUTION = 1e-8


def blowup_time(law: ForcingLaw, u0: float) -> float:
    """T = Phi(u0) / lam."""
    if u0 < 0:
        raise OutOfRange("initial value must be nonnegative", "initial.u0")
    return law.phi(u0) / law.lam


@dataclass(frozen=True)
class BlowupSolution:
    law: ForcingLaw
    u0: float
    T_inf: float

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        out = np.empty(t_arr.shape)
        flat_t, flat_out = t_arr.reshape(-1), out.reshape(-1)
        for i, ti in enumerate(flat_t):
            if ti >= self.T_inf:
                flat_out[i] = math.inf
            elif ti == 0.0:
                flat_out[i] = self.u0
            else:
                flat_out[i] = self.law.phi_inv(self.law.lam * (self.T_inf - ti))
        return float(out) if out.ndim == 0 else out

    def derivative(self, t):
        return self.law.lam * np.asarray(self.law(self(t)))

    def conserved(self, t) -> np.ndarray:
        """Phi(u(t)) + lam t, constant along the trajectory."""
        vals = np.atleast_1d(self(t))
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        return np.array([self.law.phi(v) for v in vals]) + self.law.lam * ts


def closed_trajectory(law: ForcingLaw, u0: float) -> BlowupSolution:
    return BlowupSolution(law, float(u0), blowup_time(law, u0))


@dataclass(frozen=True)
class BlowupRun:
    trajectory: PiecewiseTrajectory
    T_est: float
    fitted_rate: float  # recovered lam from the slope of Phi(u(t))
    T_closed: float | None

    @property
    def abs_error(self) -> float | None:
        return None if self.T_closed is None else abs(self.T_est - self.T_closed)


def fit_blowup_time(t, phi_values) -> tuple[float, float]:
    """Least-squares line ``Phi ~ kappa (T - t)``; returns (T, kappa)."""
    slope, intercept = np.polyfit(np.asarray(t), np.asarray(phi_values), 1)
    return -intercept / slope, -slope


def last_decade(t, u, cap: float):
    """Samples with ``cap/10 <= u <= cap``."""
    t, u = np.asarray(t), np.asarray(u)
    mask = (u >= cap / 10.0) & np.isfinite(u)
    return t[mask], u[mask]


def integrate_until_blowup(law: ForcingLaw, u0: float, cap: float = DEFAULT_CAP,
                           rtol: float = 1e-13, atol: float = 1e-300,
                           horizon: float | None = None) -> BlowupRun:
    """Integrate ``u' = lam f(u)`` with a Dormand-Prince 4(5) pair until ``u > cap``.

    The blow-up time is extrapolated from a linear fit of ``Phi(u(t))`` over
    the last decade of growth.
    """
    if u0 < 0:
        raise OutOfRange("initial value must be nonnegative", "initial.u0")
    try:
        T_closed = blowup_time(law, u0)
    except NotSuperlinear:
        T_closed = None
    if horizon is None:
        horizon = 10.0 * T_closed if T_closed is not None else 10.0 / law.lam

    def rhs(_t, y):
        return [law.lam * float(law(y[0]))]

    def hit_cap(_t, y):
        return y[0] - cap

    def unresolvable(t, y):
        return law.phi(max(y[0], u0)) / law.lam - TIME_RESOLUTION * t

    hit_cap.terminal = unresolvable.terminal = True
    hit_cap.direction, unresolvable.direction = 1, -1
    events = [hit_cap] if T_closed is None else [hit_cap, unresolvable]
    sol = solve_ivp(rhs, (0.0, horizon), [u0], method="RK45", rtol=rtol, atol=atol,
                    events=events)
    if sol.status != 1 or T_closed is None:
        raise CapNotReached(
            f"u stayed below cap {cap:g} up to t={sol.t[-1]:.6g}" if sol.status != 1
            else "cap reached but the law is not superlinear: no finite blow-up",
            "numerics.cap")

    t, u = sol.t, sol.y[0]
    td, ud = last_decade(t, u, min(cap, u[-1]))
    if td.size < 10:
        ts = np.linspace(td[0] if td.size else t[-2], t[-1], 64)
        td, ud = ts, sol.sol(ts)[0] if sol.sol is not None else np.interp(ts, t, u)
    T_est, rate = fit_blowup_time(td, [law.phi(v) for v in ud])

    traj = PiecewiseTrajectory()
    traj.append(Segment(t, u, SegmentTag.ORIGINAL))
    return BlowupRun(traj, float(T_est), float(rate), T_closed)
