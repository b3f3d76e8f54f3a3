"""Exact Riemann solvers: classical LWR and the one constrained by the bottleneck.

Solutions are self-similar; ``sol(xi)`` returns the density on the ray
``x = xi * t`` (right-continuous in ``xi``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .flux_model import DomainError, FluxModel

TIE_TOL = 1e-12

SHOCK = "shock"
RAREFACTION = "rarefaction"
UNDERCOMPRESSIVE = "undercompressive"


@dataclass(frozen=True)
class Wave:
    left: float
    right: float
    speed_lo: float
    speed_hi: float
    kind: str

    @property
    def speed(self) -> float:
        return self.speed_lo if self.kind != RAREFACTION else 0.5 * (self.speed_lo + self.speed_hi)

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "left": self.left,
            "right": self.right,
            "speed_lo": self.speed_lo,
            "speed_hi": self.speed_hi,
        }


@dataclass(frozen=True, eq=False)
class RiemannSolution:
    model: FluxModel
    rho_l: float
    rho_r: float
    waves: tuple[Wave, ...]
    av_speed: float | None = None
    constrained: bool = False
    u: float | None = None

    def __call__(self, xi: float) -> float:
        state = self.rho_l
        for w in self.waves:
            if xi < w.speed_lo:
                return state
            if w.kind == RAREFACTION and xi < w.speed_hi:
                return self.model.df_inv(xi)
            state = w.right
        return state

    def left_trace(self, xi: float) -> float:
        state = self.rho_l
        for w in self.waves:
            if xi <= w.speed_lo:
                return state
            if w.kind == RAREFACTION and xi <= w.speed_hi:
                return self.model.df_inv(xi)
            state = w.right
        return state

    def density(self, t: float, x: float, y0: float = 0.0) -> float:
        if t <= 0.0:
            return self.rho_l if x < y0 else self.rho_r
        return self((x - y0) / t)

    def as_dict(self) -> dict:
        return {
            "rho_l": self.rho_l,
            "rho_r": self.rho_r,
            "u": self.u,
            "constrained": self.constrained,
            "av_speed": self.av_speed,
            "waves": [w.as_dict() for w in self.waves],
        }


def _check_state(model: FluxModel, rho: float) -> None:
    if not (-1e-15 <= rho <= model.R * (1.0 + 1e-15)):
        raise DomainError(f"density {rho!r} outside [0, {model.R!r}]")


def rh_speed(model: FluxModel, a: float, b: float) -> float:
    """Rankine-Hugoniot speed of the jump ``a | b``."""
    if abs(a - b) <= 1e-9 * model.R:
        # the difference quotient loses all digits for nearly equal states
        return model.df(0.5 * (a + b))
    return (model.f(a) - model.f(b)) / (a - b)


def _classical_waves(model: FluxModel, rho_l: float, rho_r: float) -> tuple[Wave, ...]:
    if rho_l == rho_r:
        return ()
    if rho_l < rho_r:
        s = rh_speed(model, rho_l, rho_r)
        return (Wave(rho_l, rho_r, s, s, SHOCK),)
    return (Wave(rho_l, rho_r, model.df(rho_l), model.df(rho_r), RAREFACTION),)


def classical_riemann(model: FluxModel, rho_l: float, rho_r: float) -> RiemannSolution:
    """Entropy solution of the LWR Riemann problem without the bottleneck."""
    _check_state(model, rho_l)
    _check_state(model, rho_r)
    return RiemannSolution(model, rho_l, rho_r, _classical_waves(model, rho_l, rho_r))


def _fixed_point_speed(model: FluxModel, u: float, sol: RiemannSolution) -> float:
    """Smallest ``s`` with ``s = min(u, v(sol(s)))`` on the self-similar profile."""
    state = sol.rho_l
    for w in sol.waves:
        h = min(u, model.v(state))
        if h < w.speed_lo - TIE_TOL:
            return h
        if w.kind == RAREFACTION:

            def gap(xi: float) -> float:
                return xi - min(u, model.v(model.df_inv(xi)))

            lo, hi = w.speed_lo, w.speed_hi
            if gap(hi) > TIE_TOL:
                # monotone bisection inside the fan
                for _ in range(200):
                    mid = 0.5 * (lo + hi)
                    if gap(mid) > 0.0:
                        hi = mid
                    else:
                        lo = mid
                    if hi - lo < 1e-15:
                        break
                return 0.5 * (lo + hi)
        state = w.right
    return min(u, model.v(state))


def constrained_riemann(model: FluxModel, u: float, rho_l: float, rho_r: float) -> RiemannSolution:
    """Riemann solver with the bottleneck at the origin driving at desired speed ``u``.

    If the classical solution exceeds the capacity along ``x = u t`` the
    solution splits into ``R(rho_l, hat_rho)``, the undercompressive jump
    ``(hat_rho, check_rho)`` moving with the vehicle, and ``R(check_rho, rho_r)``.
    Otherwise the classical solution is kept and the vehicle speed is the
    fixed point of ``s = min(u, v(rho(s+)))``.
    """
    _check_state(model, rho_l)
    _check_state(model, rho_r)
    geo = model.geometry(u)
    classical = classical_riemann(model, rho_l, rho_r)
    trace = classical(u)
    if model.f(trace) > geo.F_alpha + u * trace + TIE_TOL:
        uc = Wave(geo.hat_rho, geo.check_rho, u, u, UNDERCOMPRESSIVE)
        waves = (
            _classical_waves(model, rho_l, geo.hat_rho)
            + (uc,)
            + _classical_waves(model, geo.check_rho, rho_r)
        )
        return RiemannSolution(model, rho_l, rho_r, waves, u, True, u)
    speed = _fixed_point_speed(model, u, classical)
    return RiemannSolution(model, rho_l, rho_r, classical.waves, speed, False, u)


def riemann_case(model: FluxModel, u: float, rho_l: float, rho_r: float) -> str:
    """Label of the Riemann configuration in the case analysis of the constrained problem.

    Labels read ``shock.<lt|gt|eq>.<n>`` (shock speed versus ``u``) and
    ``rare.<r_lt_u|u_lt_l|fan>.<n>`` for rarefactions; sub-cases carry a
    trailing letter.  ``constant`` marks equal states.
    """
    geo = model.geometry(u)
    f = model.f

    def above(r: float) -> bool:
        return f(r) > geo.F_alpha + u * r + TIE_TOL

    def below_speed_line(r: float) -> bool:
        return f(r) < u * r - TIE_TOL

    if rho_l == rho_r:
        return "constant"
    if rho_l < rho_r:
        sigma = rh_speed(model, rho_l, rho_r)
        if abs(sigma - u) <= TIE_TOL:
            rel, probe = "eq", rho_r
        elif sigma < u:
            rel, probe = "lt", rho_r
        else:
            rel, probe = "gt", rho_l
        n = 1 if above(probe) else (3 if below_speed_line(probe) else 2)
        return f"shock.{rel}.{n}"
    s_l, s_r = model.df(rho_l), model.df(rho_r)
    if s_r < u:
        if above(rho_r):
            return "rare.r_lt_u.1" + ("a" if rho_l <= geo.hat_rho else "b")
        return "rare.r_lt_u." + ("3" if below_speed_line(rho_r) else "2")
    if u < s_l:
        if above(rho_l):
            return "rare.u_lt_l.1" + ("a" if rho_r >= geo.check_rho else "b")
        return "rare.u_lt_l.2"
    n = 1 + (rho_l > geo.hat_rho) + 2 * (rho_r < geo.check_rho)
    return f"rare.fan.{n}"


ALL_CASES = (
    "shock.lt.1", "shock.lt.2", "shock.lt.3",
    "shock.gt.1", "shock.gt.2",
    "shock.eq.1", "shock.eq.2",
    "rare.r_lt_u.1a", "rare.r_lt_u.1b", "rare.r_lt_u.2", "rare.r_lt_u.3",
    "rare.u_lt_l.1a", "rare.u_lt_l.1b", "rare.u_lt_l.2",
    "rare.fan.1", "rare.fan.2", "rare.fan.3", "rare.fan.4",
)  # fmt: skip


def check_solution(sol: RiemannSolution, rh_tol: float = 1e-12, tol: float = 1e-10) -> list[str]:
    """Admissibility problems of a constrained Riemann solution (empty when valid)."""
    model = sol.model
    problems = []
    prev_hi = -math.inf
    for w in sol.waves:
        if w.speed_lo < prev_hi - TIE_TOL:
            problems.append(f"waves out of order at {w}")
        prev_hi = w.speed_hi
        if w.kind in (SHOCK, UNDERCOMPRESSIVE):
            res = abs(w.speed_lo - rh_speed(model, w.left, w.right))
            if res > rh_tol * max(1.0, model.V):
                problems.append(f"Rankine-Hugoniot residual {res:.3g} on {w}")
        if w.kind == SHOCK and not w.left < w.right:
            problems.append(f"non-entropic shock {w}")
        if w.kind == RAREFACTION and not w.left > w.right:
            problems.append(f"rarefaction with increasing states {w}")
    ucs = [w for w in sol.waves if w.kind == UNDERCOMPRESSIVE]
    if sol.u is None or sol.av_speed is None:
        return problems
    geo = model.geometry(sol.u)
    if len(ucs) > 1:
        problems.append("more than one undercompressive wave")
    if ucs:
        w = ucs[0]
        if abs(w.left - geo.hat_rho) > tol or abs(w.right - geo.check_rho) > tol:
            problems.append(f"undercompressive states {w.left}, {w.right} differ from band")
        if abs(w.speed_lo - sol.u) > tol or abs(sol.av_speed - sol.u) > tol:
            problems.append("undercompressive wave not travelling at u")
        defect = model.f(w.left) - sol.u * w.left - geo.F_alpha
        if abs(defect) > tol:
            problems.append(f"undercompressive constraint not saturated ({defect:.3g})")
    s = sol.av_speed
    F = model.F_alpha(min(max(s, 0.0), model.V))
    for side, trace in (("-", sol.left_trace(s)), ("+", sol(s))):
        if model.f(trace) - s * trace > F + tol:
            problems.append(f"constraint violated at trace {side} ({trace})")
    expected = min(sol.u, model.v(sol(s)))
    if abs(expected - s) > tol:
        problems.append(f"vehicle speed {s} differs from min(u, v(trace)) = {expected}")
    return problems
