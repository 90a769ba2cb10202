"""Explicit half-space self-similar solutions for ``2p = m + 1``.

With ``q = 2/(m-1) = 1/(p-1)``, ``C = sqrt(p) - 1`` and
``k^(m-1) = q (q + 1)``, the function

    u(x, t) = k (x_N - C t)^(-q) = t^(-q) H(x / t),   H(eta) = k (eta_N - C)^(-q)

solves ``-Lap u + u^m = 0`` for ``x_N > C t`` and is infinite on the growing
region ``x_N <= C t``.  Everything here is closed form with analytic
derivatives.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadExponent, SampleOnSingularSet

BLOWN_UP = math.inf  # explicit flag value for points of the blow-up set


@dataclass(frozen=True)
class SelfSimilarSolution:
    m: float

    def __post_init__(self):
        if not self.m > 1:
            raise BadExponent("interior exponent m must exceed 1", "absorption.m")

    @classmethod
    def from_exponents(cls, m: float, p: float) -> "SelfSimilarSolution":
        # 2 - q(m-1) = 0 and 1 - q(p-1) = 0 share a root only if 2p = m + 1
        if abs(2.0 * p - (m + 1.0)) > 1e-12 * (m + 1.0):
            raise BadExponent(f"self-similar solutions need 2p = m + 1 (p={p}, m={m})",
                              "forcing.p")
        return cls(m)

    @property
    def p(self) -> float:
        return 0.5 * (self.m + 1.0)

    @property
    def q(self) -> float:
        return 2.0 / (self.m - 1.0)

    @property
    def k(self) -> float:
        m = self.m
        return (2.0 * (m + 1.0) / (m - 1.0) ** 2) ** (1.0 / (m - 1.0))

    @property
    def C(self) -> float:
        return (math.sqrt(2.0 * (self.m + 1.0)) - 2.0) / 2.0

    @property
    def K(self) -> float:
        """Coefficient of the blow-up-time form ``K (T(x_N) - t)^(-q)``."""
        p = self.p
        return (math.sqrt(p) / ((p - 1.0) * (math.sqrt(p) - 1.0))) ** (1.0 / (p - 1.0))

    # -- evaluators -----------------------------------------------------------

    def profile(self, eta) -> np.ndarray:
        """H(eta); ``eta`` has the normal coordinate in its last axis."""
        s = np.asarray(eta, dtype=float)[..., -1] - self.C
        out = np.full(s.shape, BLOWN_UP)
        pos = s > 0
        out[pos] = self.k * s[pos] ** (-self.q)
        return out

    def blowup_time(self, x_N):
        x_N = np.asarray(x_N, dtype=float)
        out = x_N / (math.sqrt(self.p) - 1.0)
        return float(out) if out.ndim == 0 else out

    def solution(self, x, t) -> np.ndarray:
        """Distance form ``k (x_N - C t)^(-q)``."""
        s = np.asarray(x, dtype=float)[..., -1] - self.C * np.asarray(t, dtype=float)
        out = np.full(np.shape(s), BLOWN_UP)
        pos = s > 0
        out[pos] = self.k * s[pos] ** (-self.q)
        return out

    def solution_blowup_form(self, x, t) -> np.ndarray:
        """``K [T(x_N) - t]_+^(-q)``."""
        gap = self.blowup_time(np.asarray(x, dtype=float)[..., -1]) - np.asarray(t, dtype=float)
        gap = np.asarray(gap)
        out = np.full(gap.shape, BLOWN_UP)
        pos = gap > 0
        out[pos] = self.K * gap[pos] ** (-self.q)
        return out

    def gamma_printed(self, t, R: float):
        """The boundary defect coefficient as printed for the shifted domain."""
        p = self.p
        sp = math.sqrt(p)
        coeff = self.K * (sp - (p + 1.0)) / ((p - 1.0) * (sp - 1.0))
        gap = self.blowup_time(R) - np.asarray(t, dtype=float)
        return coeff * np.maximum(gap, 0.0) ** (-p / (p - 1.0))

    # -- analytic derivatives in s = x_N - C t --------------------------------

    def _pow(self, s, e):
        return self.k * s ** e

    def boundary_defect(self, t, R: float, normal_sign: float = -1.0):
        """``u_t + du/dn - u^p`` at ``x_N = R`` with normal ``normal_sign * e_N``."""
        s = R - self.C * np.asarray(t, dtype=float)
        if np.any(s <= 0):
            raise SampleOnSingularSet("boundary sample inside the blow-up set")
        q, k = self.q, self.k
        u_t = q * k * self.C * s ** (-q - 1.0)
        du_dn = normal_sign * (-q * k * s ** (-q - 1.0))
        u_p = k ** self.p * s ** (-q * self.p)
        return u_t + du_dn - u_p


def profile(sol: SelfSimilarSolution, eta):
    return sol.profile(eta)


def solution(sol: SelfSimilarSolution, x, t):
    return sol.solution(x, t)


def blowup_time(sol: SelfSimilarSolution, x_N):
    return sol.blowup_time(x_N)


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class ResidualReport:
    interior: float  # max |-Lap H + H^m| / H^m
    profile_boundary: float  # max relative defect of the eta_N = 0 identity
    shifted_defect: float  # max relative |u_t + du/dn - u^p| at x_N = R, outward normal
    gamma_mismatch: float  # max relative gap between the shifted defect and the printed gamma
    forms_agree: float  # max relative gap between the two solution forms


def random_samples(sol: SelfSimilarSolution, n: int = 1000, dim: int = 3, seed: int = 0,
                   margin: float = 1e-3):
    """Seeded points: profile arguments off the singular set, ``(x, t)`` with
    ``t`` before the local blow-up time, and tangential coordinates for the
    boundary identity."""
    rng = np.random.default_rng(seed)
    eta = rng.uniform(-5.0, 5.0, size=(n, dim))
    eta[:, -1] = sol.C + margin + rng.uniform(0.0, 10.0, n)
    x = rng.uniform(-5.0, 5.0, size=(n, dim))
    x[:, -1] = rng.uniform(0.1, 5.0, n)
    t = rng.uniform(0.0, 0.99, n) * sol.blowup_time(x[:, -1])
    tangential = rng.uniform(-5.0, 5.0, size=(n, dim - 1))
    return eta, x, t, tangential


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.abs(a - b) / np.maximum(np.abs(b), 1e-300)


def residual_check(sol: SelfSimilarSolution, samples=None, R: float = 1.0) -> ResidualReport:
    samples = samples or random_samples(sol)
    eta, x, t, tangential = samples
    q, k, C, m, p = sol.q, sol.k, sol.C, sol.m, sol.p

    s = eta[:, -1] - C
    if np.any(s <= 0):
        raise SampleOnSingularSet("profile sample on eta_N <= C")
    H_nn = k * q * (q + 1.0) * s ** (-q - 2.0)
    H_m = (k * s ** (-q)) ** m
    interior = float(np.max(np.abs(-H_nn + H_m) / H_m))

    # boundary identity sum_i eta_i D_i H - D_N H = H/(p-1) + H^p at eta_N = 0,
    # evaluated on the principal branch because eta_N - C < 0 there
    s0 = complex(-C)
    D_N = -q * k * s0 ** (-q - 1.0)
    eta_b = np.column_stack([tangential, np.zeros(len(tangential))])
    lhs = eta_b[:, -1] * D_N - D_N  # tangential derivatives vanish
    H0 = k * s0 ** (-q)
    Hp = k ** p * s0 ** (-q * p)
    rhs = np.full(len(tangential), H0 / (p - 1.0) + Hp)
    profile_boundary = float(np.max(np.abs(lhs - rhs) / np.abs(rhs)))

    tb = t[t < sol.blowup_time(R)] if R is not None else t
    tb = np.linspace(0.0, 0.99 * sol.blowup_time(R), 64) if tb.size == 0 else tb
    defect = sol.boundary_defect(tb, R, normal_sign=-1.0)
    scale = k ** p * (R - C * tb) ** (-q * p)
    shifted = float(np.max(np.abs(defect) / scale))
    gam = sol.gamma_printed(tb, R)
    gamma_mismatch = float(np.max(_rel(defect, gam)))

    forms = float(np.max(_rel(sol.solution_blowup_form(x, t), sol.solution(x, t))))
    return ResidualReport(interior, profile_boundary, shifted, gamma_mismatch, forms)


def scaling_invariance(sol: SelfSimilarSolution, mu: float, samples=None) -> float:
    """max relative |mu^q u(mu x, mu t) - u(x, t)|."""
    if not mu > 0:
        raise BadExponent("scale must be positive", "mu")
    samples = samples or random_samples(sol)
    _, x, t, _ = samples
    scaled = mu ** sol.q * sol.solution(mu * x, mu * t)
    return float(np.max(_rel(scaled, sol.solution(x, t))))
