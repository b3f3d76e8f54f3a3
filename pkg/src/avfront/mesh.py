"""Coupled density/speed grids and the interpolated flux used by the tracker.

The speed grid is built so that both undercompressive states of every grid
speed are themselves grid densities; the tracker can then represent every
state it ever creates by an integer index into the density grid.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .flux_model import DomainError, FluxModel
from .signals import ControlSignal, PiecewiseConstant

log = logging.getLogger(__name__)

DEDUP_TOL = 1e-12
CLOSURE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Grids:
    """Density grid, speed grid and the closure map between them.

    ``check_index[k]`` and ``hat_index[k]`` are the density-grid indices of
    ``check_rho`` and ``hat_rho`` at speed ``speed_grid[k]``.
    """

    nu: int
    density_grid: np.ndarray
    speed_grid: np.ndarray
    J_nu: int
    check_index: np.ndarray
    hat_index: np.ndarray
    closure_error: float
    flagged: tuple[str, ...] = field(default=())

    @property
    def delta_rho(self) -> float:
        return float(np.diff(self.density_grid).min())

    @property
    def eps_rho(self) -> float:
        return float(np.diff(self.density_grid).max())

    @property
    def delta_u(self) -> float:
        return float(np.diff(self.speed_grid).min())

    @property
    def eps_u(self) -> float:
        return float(np.diff(self.speed_grid).max())

    @property
    def c_const(self) -> float:
        """Measured ``c`` with ``delta >= c 2^-nu`` for both grids."""
        return min(self.delta_rho, self.delta_u) * 2.0**self.nu

    @property
    def C_const(self) -> float:
        return max(self.eps_rho, self.eps_u) * 2.0**self.nu

    def speed_index(self, u: float) -> int:
        k = int(np.argmin(np.abs(self.speed_grid - u)))
        if abs(self.speed_grid[k] - u) > 1e-12:
            raise DomainError(f"{u!r} is not a grid speed")
        return k

    def density_index(self, rho: float) -> int:
        i = int(np.argmin(np.abs(self.density_grid - rho)))
        if abs(self.density_grid[i] - rho) > 1e-12:
            raise DomainError(f"{rho!r} is not a grid density")
        return i

    def summary(self) -> dict[str, float]:
        return {
            "nu": self.nu,
            "J_nu": self.J_nu,
            "M_nu": len(self.density_grid) - 1,
            "N_nu": len(self.speed_grid) - 1,
            "delta_rho": self.delta_rho,
            "eps_rho": self.eps_rho,
            "delta_u": self.delta_u,
            "eps_u": self.eps_u,
            "c_nu": self.c_const,
            "C_nu": self.C_const,
            "closure_error": self.closure_error,
        }


def _dedupe(points: list[float]) -> np.ndarray:
    pts = np.sort(np.asarray(points, dtype=float))
    keep = [pts[0]]
    for p in pts[1:]:
        if p - keep[-1] > DEDUP_TOL:
            keep.append(p)
    return np.asarray(keep)


def build_grids(model: FluxModel, nu: int) -> Grids:
    """Build the density grid ``M_nu`` and speed grid ``U_nu``."""
    if nu < 1:
        raise DomainError(f"refinement index must be >= 1, got {nu!r}")
    V, R = model.V, model.R
    h = 2.0**-nu
    flagged: list[str] = []

    # Step 1: chain hat(u_j) = check(u_{j-1}) until V - u_{J+1} < 2^-nu
    chain = [0.0]
    while True:
        nxt = model.hat_inv(model.check_rho(chain[-1]))
        if V - nxt < h:
            break
        chain.append(nxt)
    J = len(chain) - 1
    u_stop = nxt
    speeds = list(chain)
    densities = [model.check_rho(chain[J - j]) for j in range(J + 1)]

    # Step 2: subdivide [0, u_1] and follow each sub-chain through the strips
    u1 = chain[1] if J >= 1 else u_stop
    upper = chain + [u_stop]
    for k in range(2**nu):
        uk = k * u1 * h
        speeds.append(uk)
        densities.append(model.hat_rho(uk))
        for i in range(1, J + 1):
            nxt = model.hat_inv(model.check_rho(uk))
            if not (upper[i] - 1e-12 <= nxt <= upper[i + 1] + 1e-12):
                flagged.append(f"u_({k},{i})={nxt!r} outside [{upper[i]!r}, {upper[i + 1]!r}]")
                if nxt > u_stop:
                    break
            uk = nxt
            speeds.append(uk)
            densities.append(model.hat_rho(uk))
        # close the last link: check_rho of the final sub-chain speed
        densities.append(model.check_rho(uk))

    # Step 3: uniform points on [hat_rho(0), R]
    top = model.hat_rho(0.0)
    densities.extend(top + ell * (R - top) * h for ell in range(1, 2**nu + 1))

    # Step 4
    density_grid = _dedupe(densities + [0.0, R])
    speed_grid = _dedupe([min(max(s, 0.0), V) for s in speeds] + [0.0, V])

    check_idx = np.empty(len(speed_grid), dtype=int)
    hat_idx = np.empty(len(speed_grid), dtype=int)
    worst = 0.0
    for k, u in enumerate(speed_grid):
        geo = model.geometry(float(u))
        for target, store in ((geo.check_rho, check_idx), (geo.hat_rho, hat_idx)):
            i = int(np.argmin(np.abs(density_grid - target)))
            store[k] = i
            worst = max(worst, abs(density_grid[i] - target))
    if worst > CLOSURE_TOL:
        log.warning("grid closure error %.3g exceeds %.1g", worst, CLOSURE_TOL)
    return Grids(nu, density_grid, speed_grid, J, check_idx, hat_idx, worst, tuple(flagged))


@dataclass(frozen=True, eq=False)
class PiecewiseLinearFlux:
    """Interpolant of ``f`` through the density grid."""

    breakpoints: np.ndarray
    values: np.ndarray

    @classmethod
    def from_grids(cls, model: FluxModel, grids: Grids) -> PiecewiseLinearFlux:
        rho = grids.density_grid
        return cls(rho, np.array([model.f(float(r)) for r in rho]))

    def __call__(self, rho):
        return np.interp(rho, self.breakpoints, self.values)

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.breakpoints)

    def is_concave(self) -> bool:
        return bool(np.all(np.diff(self.slopes) < 0.0))


def _nearest(grid: np.ndarray, x: float) -> float:
    # nearest point, ties resolved towards the smaller value
    j = int(np.searchsorted(grid, x))
    if j == 0:
        return float(grid[0])
    if j == len(grid):
        return float(grid[-1])
    lo, hi = grid[j - 1], grid[j]
    return float(lo if x - lo <= hi - x else hi)


def quantize_density(grids: Grids, rho: float) -> float:
    grid = grids.density_grid
    if not (-1e-15 <= rho <= grid[-1] + 1e-15):
        raise DomainError(f"density {rho!r} outside [0, {grid[-1]!r}]")
    return _nearest(grid, rho)


def _cell(grid: np.ndarray, x: float) -> tuple[float, ...]:
    j = int(np.searchsorted(grid, x))
    if j < len(grid) and grid[j] == x:
        return (float(x),)
    return (float(grid[j - 1]), float(grid[j]))


def quantize_sequence(grid: np.ndarray, values) -> list[float]:
    """Grid values ``q_i`` with ``q_i`` a neighbour of ``values[i]`` and minimal total variation.

    Rounding each value on its own can add variation (two close values may
    round apart).  Choosing among the two enclosing grid points by dynamic
    programming attains the minimal variation over the enclosing cells, which
    never exceeds the variation of ``values``; ties prefer the smaller
    rounding error.
    """
    cells = [_cell(grid, float(v)) for v in values]
    # cost[c] = (variation, rounding error) of the best path ending in candidate c
    cost = [(0.0, abs(c - values[0])) for c in cells[0]]
    back: list[list[int]] = []
    for i in range(1, len(cells)):
        new_cost, arg = [], []
        for c in cells[i]:
            err = abs(c - values[i])
            best = min(
                range(len(cells[i - 1])),
                key=lambda j: (cost[j][0] + abs(c - cells[i - 1][j]), cost[j][1]),
            )
            p = cells[i - 1][best]
            new_cost.append((cost[best][0] + abs(c - p), cost[best][1] + err))
            arg.append(best)
        cost = new_cost
        back.append(arg)
    j = min(range(len(cost)), key=lambda j: cost[j])
    out = [cells[-1][j]]
    for i in range(len(cells) - 1, 0, -1):
        j = back[i - 1][j]
        out.append(cells[i - 1][j])
    return out[::-1]


def _requantize(signal: PiecewiseConstant, grid: np.ndarray, what: str) -> PiecewiseConstant:
    for val in signal.values:
        if not (-1e-15 <= val <= grid[-1] + 1e-15):
            raise DomainError(f"{what} value {val!r} outside [0, {grid[-1]!r}]")
    clipped = [min(max(v, 0.0), float(grid[-1])) for v in signal.values]
    q = quantize_sequence(grid, clipped)
    out = PiecewiseConstant(signal.breaks, tuple(q)).map_values(lambda v: v)
    if out.total_variation > signal.total_variation + 1e-12:
        raise AssertionError(f"quantized {what} gained total variation")
    return out


def quantize_control(grids: Grids, u: ControlSignal) -> ControlSignal:
    """Speed-grid valued control with the same jump times and ``TV`` not larger than ``TV(u)``."""
    return _requantize(u, grids.speed_grid, "control")


def quantize_initial(grids: Grids, rho0: PiecewiseConstant) -> PiecewiseConstant:
    """Grid-valued initial datum with the same jump locations; ``TV`` cannot increase."""
    return _requantize(rho0, grids.density_grid, "density")
