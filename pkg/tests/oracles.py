"""Independent closed-form oracles for the Greenshields flux ``f(r) = r (1 - r)`` with alpha = 0.75.

Nothing here imports the package: these are direct transcriptions of the
formulas, used to check the numerical code.
"""

from __future__ import annotations

import math

ALPHA = 0.75


def f(r: float) -> float:
    return r * (1.0 - r)


def df(r: float) -> float:
    return 1.0 - 2.0 * r


def v(r: float) -> float:
    return 1.0 - r


def constraint_roots(u: float, alpha: float = ALPHA) -> tuple[float, float]:
    """Roots of ``r^2 - (1-u) r + alpha (1-u)^2 / 4 = 0`` (lower, upper)."""
    s = math.sqrt(1.0 - alpha)
    return (1.0 - u) * (1.0 - s) / 2.0, (1.0 - u) * (1.0 + s) / 2.0


def check_rho(u: float) -> float:
    return 0.25 * (1.0 - u)


def hat_rho(u: float) -> float:
    return 0.75 * (1.0 - u)


def star_rho(u: float) -> float:
    return 1.0 - u


def tilde_rho(u: float, alpha: float = ALPHA) -> float:
    # tangency of alpha f(r / alpha) at slope u
    return alpha * (1.0 - u) / 2.0


def F_alpha(u: float) -> float:
    return 0.1875 * (1.0 - u) ** 2


def omega(n: int) -> float:
    return 1.0 - 3.0**-n


def shock_speed(a: float, b: float) -> float:
    return 1.0 - a - b


def classical(rho_l: float, rho_r: float, xi: float) -> float:
    """Entropy solution of the classical Riemann problem on the ray ``x = xi t``."""
    if rho_l <= rho_r:
        return rho_l if xi < shock_speed(rho_l, rho_r) else rho_r
    lo, hi = df(rho_l), df(rho_r)
    if xi < lo:
        return rho_l
    if xi >= hi:
        return rho_r
    return (1.0 - xi) / 2.0


def constrained(u: float, rho_l: float, rho_r: float, xi: float) -> float:
    """Constrained Riemann solution: classical, or split at ``x = u t`` when capacity is exceeded."""
    trace = classical(rho_l, rho_r, u)
    if f(trace) <= F_alpha(u) + u * trace + 1e-12:
        return classical(rho_l, rho_r, xi)
    if xi < u:
        return classical(rho_l, hat_rho(u), xi)
    return classical(check_rho(u), rho_r, xi)


def constrained_speed(u: float, rho_l: float, rho_r: float, n: int = 4000) -> float:
    """Vehicle speed: ``u`` if constrained, else the first ``s`` with ``s >= min(u, v(rho(s+)))``."""
    trace = classical(rho_l, rho_r, u)
    if f(trace) > F_alpha(u) + u * trace + 1e-12:
        return u
    # the map s -> s - min(u, v(rho(s+))) is increasing; bisect on it
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid - min(u, v(classical(rho_l, rho_r, mid))) >= 0.0:
            hi = mid
        else:
            lo = mid
    return hi


def godunov_lwr(rho_l: float, rho_r: float, t: float, dx: float, half_width: float = 1.0):
    """Plain Godunov for a classical Riemann problem; returns ``(edges, cells)``."""
    import numpy as np

    n = int(round(2 * half_width / dx))
    edges = -half_width + dx * np.arange(n + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    rho = np.where(mids < 0.0, rho_l, rho_r).astype(float)
    dt_max = 0.9 * dx
    time = 0.0
    while time < t - 1e-14:
        dt = min(dt_max, t - time)
        p = np.concatenate(([rho[0]], rho, [rho[-1]]))
        left, right = p[:-1], p[1:]
        demand = f(np.minimum(left, 0.5))
        supply = f(np.maximum(right, 0.5))
        flux = np.minimum(demand, supply)
        rho = rho - dt / dx * (flux[1:] - flux[:-1])
        time += dt
    return edges, rho
