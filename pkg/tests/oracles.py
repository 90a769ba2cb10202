"""Independent reference solvers shared by the tests."""
import math

import numpy as np


def rk4(rhs, y0, t0, t1, n):
    y = np.atleast_1d(np.asarray(y0, dtype=float)).copy()
    h = (t1 - t0) / n
    t = t0
    for _ in range(n):
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return y


def rk4_richardson(rhs, y0, t0, t1, n=2000):
    """Fixed-step RK4 at n and 2n steps, combined to remove the h^4 term."""
    coarse = rk4(rhs, y0, t0, t1, n)
    fine = rk4(rhs, y0, t0, t1, 2 * n)
    return fine + (fine - coarse) / 15.0


def shoot_radial(g, N, R, beta, lo=0.0, hi=None, iters=200):
    """u(0) of -u'' - (N-1)/r u' + g(u) = 0, u'(0)=0, u(R)=beta by bisection
    on the centre value, integrating with RK4 from a series start."""
    from scipy.integrate import solve_ivp

    def end_value(a):
        r0 = 1e-6
        ga = float(g(a))
        y0 = [a + ga * r0 ** 2 / (2 * N), ga * r0 / N]

        def rhs(r, y):
            return [y[1], float(g(max(y[0], 0.0))) - (N - 1) / r * y[1]]

        def big(_r, y):
            return y[0] - 10 * beta - 10
        big.terminal = True
        sol = solve_ivp(rhs, (r0, R), y0, method="DOP853", rtol=1e-13, atol=1e-14, events=big)
        return np.inf if sol.status == 1 else sol.y[0, -1]

    hi = beta if hi is None else hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if end_value(mid) > beta:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-15 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def large_centre_value(m, N, R, ceiling=1e8):
    """Centre value of the large solution for g(u) = u^m: shoot outward from
    u(0) = a until u reaches ``ceiling`` and root-find a so that this radius,
    plus the remaining power-law distance to infinity, equals R."""
    from scipy.integrate import solve_ivp
    from scipy.optimize import brentq

    tail = math.sqrt((m + 1) / 2) * 2 / (m - 1) * ceiling ** (-(m - 1) / 2)

    def radius(a):
        r0 = 1e-6
        y0 = [a + a ** m * r0 ** 2 / (2 * N), a ** m * r0 / N]

        def big(_r, y):
            return y[0] - ceiling
        big.terminal = True
        sol = solve_ivp(lambda r, y: [y[1], max(y[0], 0.0) ** m - (N - 1) / r * y[1]],
                        (r0, 100 * R), y0, method="DOP853", rtol=1e-12, atol=1e-12, events=big)
        return sol.t[-1] + tail

    return brentq(lambda a: radius(a) - R, 1e-3, 1e3, xtol=1e-14)


def radial_flux(g, N, R, beta):
    """u'(R) of the radial Dirichlet solution, from the shooting centre value."""
    from scipy.integrate import solve_ivp

    a = shoot_radial(g, N, R, beta)
    r0 = 1e-6
    ga = float(g(a))
    sol = solve_ivp(lambda r, y: [y[1], float(g(max(y[0], 0.0))) - (N - 1) / r * y[1]],
                    (r0, R), [a + ga * r0 ** 2 / (2 * N), ga * r0 / N], method="DOP853",
                    rtol=1e-13, atol=1e-14)
    return sol.y[1, -1]
