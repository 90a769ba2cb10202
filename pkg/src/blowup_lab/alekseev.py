"""Flow maps, their sensitivities, and the nonlinear variation-of-constants formula.

For ``y' = h(y)`` with flow ``phi(t, t0, xi)`` and sensitivity
``Phi(t, t0, xi) = d phi / d xi``, the solution of the perturbed problem
``y' + beta(t, y) = h(y)`` satisfies

    y(t) = phi(t, t0, xi) - integral_{t0}^t Phi(t, s, y(s)) beta(s, y(s)) ds.

:func:`verify_representation` evaluates both sides independently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import simpson, solve_ivp

from .errors import BlowupInsideInterval, NonMonotonePerturbation, NotSuperlinear, OutOfRange
from .nonlinearity import ForcingLaw, TruncatedLaw

FLOW_RTOL = 1e-12
FLOW_ATOL = 1e-14
FLOW_CAP = 1e12


@dataclass(frozen=True)
class VectorField:
    """Autonomous field ``h`` on R^d with optional analytic Jacobian."""

    fun: Callable[[np.ndarray], np.ndarray]
    dim: int = 1
    jac: Callable[[np.ndarray], np.ndarray] | None = None
    law: ForcingLaw | TruncatedLaw | None = None

    @classmethod
    def from_law(cls, law) -> "VectorField":
        """Scalar field ``lam * f``; truncated laws keep their knee."""
        lam = law.lam

        def fun(y):
            return np.array([lam * float(law(y[0]))])

        def jac(y):
            return np.array([[lam * float(law.derivative(y[0]))]])

        return cls(fun, 1, jac, law)

    @classmethod
    def linear(cls, A) -> "VectorField":
        A = np.asarray(A, dtype=float)
        return cls(lambda y: A @ y, A.shape[0], lambda y: A)

    @classmethod
    def from_callable(cls, fun, dim: int = 1, jac=None) -> "VectorField":
        return cls(lambda y: np.atleast_1d(np.asarray(fun(y), dtype=float)), dim, jac)

    def __call__(self, y) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.fun(np.atleast_1d(y)), dtype=float))

    def jacobian(self, y) -> np.ndarray:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if self.jac is not None:
            return np.atleast_2d(np.asarray(self.jac(y), dtype=float))
        J = np.empty((self.dim, self.dim))
        for j in range(self.dim):
            step = 1e-6 * (1.0 + abs(y[j]))
            e = np.zeros(self.dim)
            e[j] = step
            J[:, j] = (self(y + e) - self(y - e)) / (2.0 * step)
        return J

    @property
    def _analytic_power(self) -> bool:
        law = self.law
        if isinstance(law, TruncatedLaw):
            law = law.base
        return isinstance(law, ForcingLaw) and law.kind == "power" and law.p > 1


def power_flow(law, dt, xi):
    """Closed-form forward flow of ``lam f`` for (truncated) power laws.

    Vectorized over ``dt >= 0`` and ``xi >= 0``; returns ``inf`` past blow-up.
    Below the knee the flow follows ``Phi^{-1}(Phi(xi) - lam dt)``; above it
    the field is the constant ``lam f(M)``.
    """
    level = law.level if isinstance(law, TruncatedLaw) else math.inf
    base = law.base if isinstance(law, TruncatedLaw) else law
    p, k, lam = base.p, base.k, base.lam
    dt = np.asarray(dt, dtype=float)
    xi = np.asarray(xi, dtype=float)
    dt, xi = np.broadcast_arrays(dt, xi)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        phi_xi = 1.0 / ((p - 1.0) * (k + xi) ** (p - 1.0))
        phi_knee = 0.0 if math.isinf(level) else 1.0 / ((p - 1.0) * (k + level) ** (p - 1.0))
        time_to_knee = np.where(xi < level, (phi_xi - phi_knee) / lam, 0.0)
        z = phi_xi - lam * dt
        below = ((p - 1.0) * z) ** (-1.0 / (p - 1.0)) - k
        below = np.where(z > 0, below, np.inf)
        plateau = lam * (k + level) ** p if math.isfinite(level) else 0.0
        start = np.where(xi < level, level, xi)
        above = start + plateau * (dt - time_to_knee)
        out = np.where((xi < level) & (dt <= time_to_knee), below, above)
    return out


def _integrate(rhs, t0, t, y0, cap, rtol=FLOW_RTOL, atol=FLOW_ATOL, t_eval=None):
    def too_big(_s, y):
        return cap - np.max(np.abs(y))

    too_big.terminal = True
    sol = solve_ivp(rhs, (t0, t), y0, method="RK45", rtol=rtol, atol=atol,
                    events=too_big, t_eval=t_eval)
    if sol.status == 1:
        raise BlowupInsideInterval(f"trajectory exceeded {cap:g} at t={sol.t[-1]:.6g}")
    if sol.status < 0:
        raise BlowupInsideInterval(f"integration failed: {sol.message}")
    return sol


def flow(h: VectorField, t: float, t0: float, xi, cap: float = FLOW_CAP) -> np.ndarray:
    """phi(t, t0, xi)."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if t == t0:
        return xi.copy()
    if h._analytic_power and isinstance(h.law, TruncatedLaw) and t >= t0:
        return np.array([float(power_flow(h.law, t - t0, xi[0]))])
    if h._analytic_power and isinstance(h.law, ForcingLaw):
        law = h.law
        try:
            z = law.phi(max(xi[0], 0.0)) - law.lam * (t - t0)
        except NotSuperlinear:  # pragma: no cover - guarded by _analytic_power
            raise
        if z <= 0:
            raise BlowupInsideInterval(f"blow-up at t={t0 + law.phi(xi[0]) / law.lam:.6g}")
        try:
            return np.array([law.phi_inv(z)])
        except OutOfRange as exc:
            raise BlowupInsideInterval(str(exc)) from exc
    sol = _integrate(lambda _s, y: h(y), t0, t, xi, cap)
    return sol.y[:, -1]


def _variational_rhs(h: VectorField):
    d = h.dim

    def rhs(_s, state):
        y = state[:d]
        M = state[d:].reshape(d, d)
        return np.concatenate([h(y), (h.jacobian(y) @ M).ravel()])

    return rhs


def sensitivity(h: VectorField, t: float, t0: float, xi, cap: float = FLOW_CAP) -> np.ndarray:
    """Phi(t, t0, xi): solves ``Phi' = Dh(phi) Phi`` with ``Phi(t0) = I``."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    d = h.dim
    if t == t0:
        return np.eye(d)
    if h.law is not None and d == 1:
        # scalar autonomous field: d phi / d xi = h(phi) / h(xi)
        h_xi = float(h(xi)[0])
        if h_xi != 0.0:
            return np.array([[float(h(flow(h, t, t0, xi, cap))[0]) / h_xi]])
    state0 = np.concatenate([xi, np.eye(d).ravel()])
    sol = _integrate(_variational_rhs(h), t0, t, state0, cap)
    return sol.y[d:, -1].reshape(d, d)


def jacobian_bound(h: VectorField, points) -> float:
    """Largest spectral norm of Dh over the sampled points."""
    return max(np.linalg.norm(h.jacobian(p), 2) for p in np.atleast_2d(points))


def gronwall_check(h: VectorField, t: float, t0: float, xi, n: int = 200) -> tuple[float, float]:
    """(||Phi(t,t0,xi)||, exp(M (t - t0))) with M sampled along the flow."""
    ts = np.linspace(t0, t, n)
    pts = np.array([flow(h, s, t0, xi) for s in ts])
    M = jacobian_bound(h, pts)
    return float(np.linalg.norm(sensitivity(h, t, t0, xi), 2)), math.exp(M * abs(t - t0))


# ---------------------------------------------------------------------------
# perturbed problem


Perturbation = Callable[[float, np.ndarray], np.ndarray]


def check_monotone(beta: Perturbation, dim: int, t0: float, T: float, scale: float,
                   tol: float = 1e-10, seed: int = 0):
    """Sampled monotonicity ``(beta(t,y1) - beta(t,y2)) . (y1 - y2) >= 0``."""
    rng = np.random.default_rng(seed)
    for t in np.linspace(t0, T, 11):
        for _ in range(40):
            y1 = rng.uniform(-scale, scale, dim)
            y2 = rng.uniform(-scale, scale, dim)
            b1 = np.atleast_1d(beta(t, y1))
            b2 = np.atleast_1d(beta(t, y2))
            if float(np.dot(b1 - b2, y1 - y2)) < -tol * (1.0 + np.linalg.norm(y1 - y2) ** 2):
                raise NonMonotonePerturbation(f"beta decreases near t={t:.4g}, y={y1}", "beta")


@dataclass(frozen=True)
class PerturbedSolution:
    t0: float
    T: float
    method: str
    _sol: object

    def __call__(self, t) -> np.ndarray:
        return self._sol.sol(t)

    @property
    def t(self) -> np.ndarray:
        return self._sol.t

    @property
    def y(self) -> np.ndarray:
        return self._sol.y


def solve_perturbed(h: VectorField, beta: Perturbation, t0: float, xi, T: float,
                    rtol: float = FLOW_RTOL, atol: float = FLOW_ATOL,
                    cap: float = FLOW_CAP) -> PerturbedSolution:
    """Solve ``y' + beta(t, y) = h(y)``, ``y(t0) = xi`` on ``[t0, T]``."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    check_monotone(beta, h.dim, t0, T, scale=2.0 * (1.0 + float(np.max(np.abs(xi)))))

    def rhs(s, y):
        return h(y) - np.atleast_1d(beta(s, y))

    def too_big(_s, y):
        return cap - np.max(np.abs(y))

    too_big.terminal = True
    sol = solve_ivp(rhs, (t0, T), xi, method="RK45", rtol=rtol, atol=atol,
                    dense_output=True, events=too_big)
    method = "RK45"
    if sol.status < 0:
        # stiff perturbation: fall back to an implicit scheme
        sol = solve_ivp(rhs, (t0, T), xi, method="Radau", rtol=max(rtol, 1e-10),
                        atol=atol, dense_output=True, events=too_big)
        method = "Radau"
    if sol.status == 1:
        raise BlowupInsideInterval(f"perturbed trajectory exceeded {cap:g}")
    if sol.status < 0:
        raise BlowupInsideInterval(sol.message)
    return PerturbedSolution(t0, T, method, sol)


@dataclass(frozen=True)
class RepresentationCheck:
    residual: float
    halving_change: float
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray


def _sensitivity_rows(h: VectorField, nodes, y_nodes, times) -> np.ndarray:
    """S[i, j] = Phi(times[i], nodes[j], y(nodes[j])), zero where times[i] < nodes[j]."""
    d = h.dim
    S = np.zeros((len(times), len(nodes), d, d))
    if d == 1 and h._analytic_power:
        lam = h.law.lam
        xi = y_nodes[:, 0]
        dt = np.subtract.outer(times, nodes)
        phi_t = power_flow(h.law, np.maximum(dt, 0.0), xi[None, :])
        h_xi = lam * np.asarray(h.law(xi))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = lam * np.asarray(h.law(phi_t)) / h_xi[None, :]
        S[..., 0, 0] = np.where(dt >= 0, ratio, 0.0)
        return S
    rhs = _variational_rhs(h)
    for j, (s, ys) in enumerate(zip(nodes, y_nodes)):
        later = np.nonzero(times >= s)[0]
        if later.size == 0:
            continue
        S[later[times[later] == s], j] = np.eye(d)
        ahead = later[times[later] > s]
        if ahead.size == 0:
            continue
        state0 = np.concatenate([ys, np.eye(d).ravel()])
        sol = _integrate(rhs, s, times[ahead[-1]], state0, FLOW_CAP, t_eval=times[ahead])
        S[ahead, j] = sol.y[d:].T.reshape(-1, d, d)
    return S


def verify_representation(h: VectorField, beta: Perturbation, t0: float, xi, T: float,
                          n_intervals: int = 256, n_eval: int = 8,
                          halving_tol: float = 1e-10, max_intervals: int = 2 ** 17
                          ) -> RepresentationCheck:
    """Max over an evaluation grid of ``|y(t) - y0(t) + int Phi beta ds|``.

    The integral is composite Simpson on a uniform grid.  The grid is doubled
    while the change against every-other-node Simpson exceeds ``halving_tol``
    (only when sensitivities are available in closed form; otherwise the
    initial grid is used).  The final change is reported as ``halving_change``.
    """
    if n_intervals % (2 * n_eval):
        raise ValueError("n_intervals must be a multiple of 2*n_eval")
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    sol = solve_perturbed(h, beta, t0, xi, T)
    times = np.linspace(t0, T, n_eval + 1)[1:]
    y0 = np.array([flow(h, t, t0, xi) for t in times])
    lhs = sol(times).T
    cheap = h.dim == 1 and h._analytic_power

    n = n_intervals
    while True:
        nodes = np.linspace(t0, T, n + 1)
        y_nodes = sol(nodes).T
        beta_nodes = np.array([np.atleast_1d(beta(s, y)) for s, y in zip(nodes, y_nodes)])
        S = _sensitivity_rows(h, nodes, y_nodes, times)
        integrand = np.einsum("ijab,jb->ija", S, beta_nodes)
        stride = n // n_eval
        full, half = [], []
        for i in range(n_eval):
            k = (i + 1) * stride
            full.append(simpson(integrand[i, : k + 1], x=nodes[: k + 1], axis=0))
            half.append(simpson(integrand[i, : k + 1 : 2], x=nodes[: k + 1 : 2], axis=0))
        full, half = np.array(full), np.array(half)
        change = float(np.max(np.abs(full - half)))
        if not cheap or change <= halving_tol or 2 * n > max_intervals:
            break
        n *= 2
    rhs = y0 - full
    return RepresentationCheck(float(np.max(np.abs(lhs - rhs))), change, times, lhs, rhs)
