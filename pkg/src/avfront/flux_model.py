"""Concave LWR flux and the geometry of the moving flux constraint.

Densities live on ``[0, R]`` and speeds on ``[0, V]``.  For a bottleneck
speed ``u`` the reduced flux ``f_alpha(rho) = alpha * f(rho / alpha)``
determines the capacity ``F_alpha(u)`` seen in the vehicle frame, and the
support line ``phi_u(rho) = F_alpha(u) + u * rho`` cuts the road flux at the
two undercompressive states ``check_rho <= hat_rho``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

ROOT_TOL = 1e-14


class DomainError(ValueError):
    """Raised when an argument lies outside the admissible density/speed range."""


def rtsafe(
    g: Callable[[float], float],
    dg: Callable[[float], float] | None,
    lo: float,
    hi: float,
    tol: float = ROOT_TOL,
    maxiter: int = 200,
) -> float:
    """Root of ``g`` on ``[lo, hi]`` by Newton steps safeguarded with bisection.

    ``g(lo)`` and ``g(hi)`` must not have the same strict sign.
    """
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if glo * ghi > 0.0:
        raise ValueError(f"root not bracketed on [{lo!r}, {hi!r}]: g={glo!r}, {ghi!r}")
    # orient so that g(a) < 0 < g(b)
    a, b = (lo, hi) if glo < 0.0 else (hi, lo)
    x = 0.5 * (lo + hi)
    for _ in range(maxiter):
        gx = g(x)
        if gx == 0.0:
            return x
        if gx < 0.0:
            a = x
        else:
            b = x
        step_ok = False
        if dg is not None:
            d = dg(x)
            if d != 0.0 and math.isfinite(d):
                xn = x - gx / d
                if min(a, b) < xn < max(a, b):
                    step_ok = True
        if not step_ok:
            xn = 0.5 * (a + b)
        if abs(xn - x) <= tol * max(1.0, abs(x)) or abs(b - a) <= tol * max(1.0, abs(x)):
            return xn
        x = xn
    return x


GEOMETRY_CACHE_SIZE = 100_000


@dataclass(frozen=True)
class BottleneckGeometry:
    """Characteristic densities of the flux constraint at bottleneck speed ``u``."""

    u: float
    tilde_rho: float
    check_rho: float
    hat_rho: float
    star_rho: float
    F_alpha: float


@dataclass(frozen=True, eq=False)
class FluxModel:
    """Strictly concave flux ``f`` on ``[0, R]`` with analytic derivatives.

    Attributes
    ----------
    R, V : float
        Jam density and maximal speed ``V = v(0) = f'(0)``.
    alpha : float
        Capacity reduction factor of the bottleneck, in ``(0, 1)``.
    beta, B : float
        Concavity bounds ``-B <= f'' <= -beta < 0``.
    """

    name: str
    R: float
    V: float
    alpha: float
    beta: float
    B: float
    f: Callable[[float], float] = field(repr=False)
    df: Callable[[float], float] = field(repr=False)
    d2f: Callable[[float], float] = field(repr=False)
    params: tuple[tuple[str, float], ...] = ()

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha < 1.0):
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if self.R <= 0.0 or self.V <= 0.0:
            raise DomainError("R and V must be positive")
        if not (0.0 < self.beta <= self.B):
            raise DomainError("need 0 < beta <= B")
        object.__setattr__(self, "_geo_cache", {})

    # -- elementary maps -------------------------------------------------

    def v(self, rho: float) -> float:
        """Mean speed ``f(rho)/rho`` with ``v(0) = V``."""
        if rho <= 0.0:
            return self.V
        return self.f(rho) / rho

    def dv(self, rho: float) -> float:
        if rho <= 0.0:
            return 0.5 * self.d2f(0.0)
        return (rho * self.df(rho) - self.f(rho)) / (rho * rho)

    @property
    def lipschitz(self) -> float:
        """Maximal characteristic speed ``max |f'|`` on ``[0, R]``."""
        return max(abs(self.df(0.0)), abs(self.df(self.R)))

    @property
    def critical_density(self) -> float:
        return self.df_inv(0.0)

    def df_inv(self, s: float) -> float:
        """Inverse of ``f'``, clipped to ``[0, R]`` outside the range of ``f'``."""
        if s >= self.df(0.0):
            return 0.0
        if s <= self.df(self.R):
            return self.R
        return rtsafe(lambda r: self.df(r) - s, self.d2f, 0.0, self.R)

    def v_inv(self, u: float) -> float:
        """``rho_star(u)``: the density travelling at mean speed ``u``."""
        self._check_speed(u)
        if u >= self.V:
            return 0.0
        if u <= 0.0:
            return self.R
        return rtsafe(lambda r: self.v(r) - u, self.dv, 0.0, self.R)

    def F_alpha(self, u: float) -> float:
        self._check_speed(u)
        peak = self.df_inv(u)
        return self.alpha * self.f(peak) - u * self.alpha * peak

    def _check_speed(self, u: float) -> None:
        if not (-1e-15 <= u <= self.V * (1.0 + 1e-15)):
            raise DomainError(f"speed {u!r} outside [0, {self.V!r}]")

    # -- constraint geometry ----------------------------------------------

    def geometry(self, u: float) -> BottleneckGeometry:
        """All characteristic densities at control speed ``u`` (memoised)."""
        self._check_speed(u)
        u = min(max(float(u), 0.0), self.V)
        cache = self._geo_cache
        geo = cache.get(u)
        if geo is None:
            if len(cache) > GEOMETRY_CACHE_SIZE:
                cache.clear()
            geo = cache[u] = self._solve_geometry(u)
        return geo

    def _solve_geometry(self, u: float) -> BottleneckGeometry:
        peak = self.df_inv(u)  # argmax of f(rho) - u rho, equals tilde_rho / alpha
        tilde = self.alpha * peak
        F = self.alpha * self.f(peak) - u * tilde
        if u >= self.V or peak <= 0.0:
            return BottleneckGeometry(u, 0.0, 0.0, 0.0, 0.0, 0.0)

        def H(r: float) -> float:
            return self.f(r) - u * r - F

        def dH(r: float) -> float:
            return self.df(r) - u

        def root(lo: float, hi: float) -> float:
            h_lo, h_hi = H(lo), H(hi)
            if h_lo * h_hi > 0.0:
                # roundoff near u = V: both roots sit within ulps of the peak
                return lo if abs(h_lo) <= abs(h_hi) else hi
            return rtsafe(H, dH, lo, hi)

        check = root(0.0, peak)
        hat = root(peak, self.R)
        return BottleneckGeometry(u, tilde, check, hat, self.v_inv(u), F)

    def check_rho(self, u: float) -> float:
        return self.geometry(u).check_rho

    def hat_rho(self, u: float) -> float:
        return self.geometry(u).hat_rho

    def _map_slope(self, u: float, which: str) -> float:
        # slope of u -> check/hat rho from differentiating f(r) - u r = F_alpha(u)
        geo = self.geometry(u)
        r = geo.hat_rho if which == "hat" else geo.check_rho
        den = self.df(r) - u
        if den == 0.0:
            return float("nan")
        return (r - geo.tilde_rho) / den

    def hat_inv(self, rho: float) -> float:
        """Speed ``u`` with ``hat_rho(u) == rho``; requires ``rho in [0, hat_rho(0)]``."""
        top = self.hat_rho(0.0)
        if not (-1e-15 <= rho <= top + 1e-12):
            raise DomainError(f"{rho!r} outside the range [0, {top!r}] of hat_rho")
        if rho >= top:
            return 0.0
        if rho <= 0.0:
            return self.V
        return rtsafe(
            lambda s: self.hat_rho(s) - rho, lambda s: self._map_slope(s, "hat"), 0.0, self.V
        )

    def check_inv(self, rho: float) -> float:
        """Speed ``u`` with ``check_rho(u) == rho``; requires ``rho in [0, check_rho(0)]``."""
        top = self.check_rho(0.0)
        if not (-1e-15 <= rho <= top + 1e-12):
            raise DomainError(f"{rho!r} outside the range [0, {top!r}] of check_rho")
        if rho >= top:
            return 0.0
        if rho <= 0.0:
            return self.V
        return rtsafe(
            lambda s: self.check_rho(s) - rho,
            lambda s: self._map_slope(s, "check"),
            0.0,
            self.V,
        )

    def phi(self, u: float, rho: float) -> float:
        """Support line ``F_alpha(u) + u * rho``."""
        return self.F_alpha(u) + u * rho

    # -- hypothesis check -----------------------------------------------

    def hypothesis_report(self, samples: int = 1000) -> list[str]:
        """Sampled check of concavity bounds, endpoint zeros and decreasing speed."""
        issues = []
        if abs(self.f(0.0)) > 1e-12 or abs(self.f(self.R)) > 1e-12:
            issues.append("f must vanish at 0 and R")
        rs = np.linspace(0.0, self.R, samples)
        d2 = np.array([self.d2f(r) for r in rs])
        if d2.min() < -self.B - 1e-9 or d2.max() > -self.beta + 1e-9:
            issues.append(f"f'' range [{d2.min():.6g}, {d2.max():.6g}] violates [-B, -beta]")
        vs = np.array([self.v(r) for r in rs[1:-1]])
        if np.any(np.diff(vs) >= 0.0):
            issues.append("v is not strictly decreasing")
        if abs(self.df(0.0) - self.V) > 1e-12 * self.V:
            issues.append("f'(0) must equal V")
        return issues

    def describe(self) -> dict[str, float | str]:
        out: dict[str, float | str] = {"flux": self.name, "R": self.R, "V": self.V,
                                       "alpha": self.alpha}
        out.update(dict(self.params))
        return out


def greenshields(R: float = 1.0, V: float = 1.0, alpha: float = 0.75) -> FluxModel:
    """Quadratic flux ``f(rho) = V rho (1 - rho / R)``."""
    k = V / R
    return FluxModel(
        name="greenshields",
        R=R,
        V=V,
        alpha=alpha,
        beta=2.0 * k,
        B=2.0 * k,
        f=lambda r: V * r * (1.0 - r / R),
        df=lambda r: V * (1.0 - 2.0 * r / R),
        d2f=lambda r: -2.0 * k,
    )


def cubic(R: float = 1.0, V: float = 1.0, alpha: float = 0.75, c: float = 0.5) -> FluxModel:
    """Cubic flux ``f(rho) = V rho (1 - rho/R)(1 + c rho/R)`` with ``-1/2 < c < 1``."""
    if not (-0.5 < c < 1.0):
        raise DomainError(f"cubic flux needs -1/2 < c < 1, got {c!r}")
    k = V / R
    curv = (2.0 * (1.0 - c), 2.0 + 4.0 * c)
    return FluxModel(
        name="cubic",
        R=R,
        V=V,
        alpha=alpha,
        beta=k * min(curv),
        B=k * max(curv),
        f=lambda r: V * r * (1.0 - r / R) * (1.0 + c * r / R),
        df=lambda r: V * (1.0 + 2.0 * (c - 1.0) * (r / R) - 3.0 * c * (r / R) ** 2),
        d2f=lambda r: k * (2.0 * (c - 1.0) - 6.0 * c * (r / R)),
        params=(("c", c),),
    )


FLUX_FAMILIES: dict[str, Callable[..., FluxModel]] = {
    "greenshields": greenshields,
    "cubic": cubic,
}


def make_flux(name: str, **params: float) -> FluxModel:
    try:
        family = FLUX_FAMILIES[name]
    except KeyError:
        raise DomainError(f"unknown flux family {name!r}; known: {sorted(FLUX_FAMILIES)}") from None
    return family(**params)


def geometry_at(model: FluxModel, u: float) -> BottleneckGeometry:
    return model.geometry(u)


@dataclass
class DerivativeReport:
    check_slopes: np.ndarray
    hat_slopes: np.ndarray
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_map_derivative_bounds(
    model: FluxModel, samples: int = 200, tol: float = 1e-8
) -> DerivativeReport:
    """Finite-difference slopes of ``u -> check_rho`` and ``u -> hat_rho``.

    The check map must have slopes in ``[-1/beta, 0)`` and the hat map
    slopes at most ``-1/B``.
    """
    if samples < 2:
        raise DomainError("need at least two samples")
    us = np.linspace(0.0, model.V, samples)
    geos = [model.geometry(u) for u in us]
    check = np.array([g.check_rho for g in geos])
    hat = np.array([g.hat_rho for g in geos])
    du = np.diff(us)
    cs = np.diff(check) / du
    hs = np.diff(hat) / du
    violations = []
    for i, (c, h) in enumerate(zip(cs, hs)):
        span = f"[{us[i]:.6g}, {us[i + 1]:.6g}]"
        if not np.isfinite(c) or c < -1.0 / model.beta - tol or c >= 0.0:
            violations.append(f"check slope {c:.6g} on {span}")
        if not np.isfinite(h) or h > -1.0 / model.B + tol:
            violations.append(f"hat slope {h:.6g} on {span}")
    return DerivativeReport(cs, hs, violations)


def omega_sequence(model: FluxModel, tol: float, max_steps: int = 10**6) -> list[float]:
    """Speeds ``w_0 = 0``, ``w_{n+1} = hat^{-1}(check(w_n))`` until ``V - w_{n+1} < tol``."""
    if tol <= 0.0:
        raise DomainError("tol must be positive")
    seq = [0.0]
    for _ in range(max_steps):
        nxt = model.hat_inv(model.check_rho(seq[-1]))
        seq.append(nxt)
        if model.V - nxt < tol:
            return seq
    raise RuntimeError(f"omega sequence did not reach V within {max_steps} steps")


def band_ordering(model: FluxModel, u1: float, u2: float) -> int:
    """Which of the two admissible orderings the bands of ``u1 < u2`` satisfy.

    Returns 1 for ``check(u2) < check(u1) < hat(u2) < hat(u1)`` (overlapping
    bands) and 2 for ``check(u2) <= hat(u2) < check(u1) < hat(u1)`` (disjoint).
    """
    if not u1 < u2:
        raise DomainError("need u1 < u2")
    g1, g2 = model.geometry(u1), model.geometry(u2)
    if g2.check_rho < g1.check_rho < g2.hat_rho < g1.hat_rho:
        return 1
    # hat(u2) == check(u1) happens along grid chains; count it as disjoint
    if g2.check_rho <= g2.hat_rho <= g1.check_rho + 1e-12 and g1.check_rho < g1.hat_rho:
        return 2
    raise AssertionError(f"bands of {u1!r} and {u2!r} violate both orderings")
