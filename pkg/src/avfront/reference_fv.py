"""First-order Godunov scheme with a capped interface at the bottleneck.

Used only as an independent oracle for the front tracker.  The flux through
the interface just downstream of the vehicle's cell is limited to
``F_alpha(w) + w rho_down`` with ``w = min(u, v(rho_down))``, the ground-frame
form of the constraint at the downstream trace (it equals ``f(check_rho_w)``
when that trace is ``check_rho_w``).  The vehicle moves by explicit Euler
with the same speed ``w``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .flux_model import DomainError, FluxModel
from .signals import ControlSignal, PiecewiseConstant, Profile

log = logging.getLogger(__name__)


class CflError(ValueError):
    pass


class ScenarioMismatch(ValueError):
    pass


@dataclass(frozen=True)
class FvGrid:
    """Cell averages on ``[x0, x0 + len(cells) * dx]`` and the vehicle state."""

    x0: float
    dx: float
    cells: np.ndarray
    t: float
    av_y: float
    av_u: float
    capped_mass: float = 0.0

    @property
    def edges(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(len(self.cells) + 1)

    @property
    def x1(self) -> float:
        return self.x0 + self.dx * len(self.cells)

    def mass(self) -> float:
        return float(self.cells.sum() * self.dx)

    def profile(self, scenario_hash: str = "") -> Profile:
        breaks = tuple(self.edges[1:-1])
        return Profile(self.t, PiecewiseConstant(breaks, tuple(self.cells)), scenario_hash,
                       self.x0, self.x1)  # fmt: skip


def cell_averages(rho0: PiecewiseConstant, x0: float, dx: float, n: int) -> np.ndarray:
    """Exact averages of a step function over ``n`` cells of width ``dx``."""
    edges = x0 + dx * np.arange(n + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    cells = rho0.evaluate(mids).astype(float)
    for b in rho0.breaks:
        k = int(math.floor((b - x0) / dx))
        if 0 <= k < n:
            cells[k] = rho0.integral(edges[k], edges[k + 1]) / dx
    return cells


def godunov_flux(model: FluxModel, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Demand/supply form of the Godunov flux for a concave ``f``."""
    crit = model.critical_density
    # the built-in flux families are written with numpy arithmetic
    demand = model.f(np.minimum(left, crit))
    supply = model.f(np.maximum(right, crit))
    return np.minimum(demand, supply)


def stable_dt(model: FluxModel, dx: float, cfl: float) -> float:
    return cfl * dx / model.lipschitz


def _constraint_interface(grid: FvGrid) -> int:
    # interface right of the cell that contains the vehicle
    k = int(math.floor((grid.av_y - grid.x0) / grid.dx))
    return min(max(k + 1, 1), len(grid.cells) - 1)


def fv_step(grid: FvGrid, model: FluxModel, control: ControlSignal, dt: float) -> FvGrid:
    """Advance one Godunov step of length ``dt`` with transmissive boundaries."""
    lam = model.lipschitz
    if dt * lam > grid.dx * (1.0 + 1e-12):
        raise CflError(f"dt={dt!r} violates CFL for dx={grid.dx!r} (max speed {lam!r})")
    rho = grid.cells
    padded = np.concatenate(([rho[0]], rho, [rho[-1]]))
    flux = godunov_flux(model, padded[:-1], padded[1:])  # len(cells)+1 interfaces
    u = control(grid.t)
    j = _constraint_interface(grid)
    down = float(rho[j]) if j < len(rho) else float(rho[-1])
    w = min(max(min(u, model.v(down)), 0.0), model.V)
    # f(rho) - w rho <= F_alpha(w) at the downstream trace, read in the ground frame;
    # equals f(check_rho_w) once the downstream state is check_rho_w
    cap = model.F_alpha(w) + w * down
    capped = 0.0
    if flux[j] > cap:
        capped = (flux[j] - cap) * dt
        flux[j] = cap
    new = rho - dt / grid.dx * (flux[1:] - flux[:-1])
    np.clip(new, 0.0, model.R, out=new)
    return replace(grid, cells=new, t=grid.t + dt, av_y=grid.av_y + dt * w, av_u=u,
                   capped_mass=grid.capped_mass + capped)  # fmt: skip


def fv_init(
    rho0: PiecewiseConstant, control: ControlSignal, y0: float, x0: float, x1: float, dx: float
) -> FvGrid:
    if not x1 > x0 or dx <= 0.0:
        raise DomainError("need x1 > x0 and dx > 0")
    n = int(round((x1 - x0) / dx))
    return FvGrid(x0, dx, cell_averages(rho0, x0, dx, n), 0.0, float(y0), control(0.0))


def fv_run(
    model: FluxModel,
    rho0: PiecewiseConstant,
    control: ControlSignal,
    y0: float,
    t_end: float,
    dx: float,
    window: tuple[float, float],
    cfl: float = 0.9,
    sample_times=(),
    scenario_hash: str = "",
) -> tuple[FvGrid, list[Profile]]:
    """Run the scheme to ``t_end``; steps never cross control jumps or sample times."""
    if not 0.0 < cfl <= 1.0:
        raise CflError(f"CFL number must lie in (0, 1], got {cfl!r}")
    grid = fv_init(rho0, control, y0, window[0], window[1], dx)
    stops = sorted({float(t) for t in sample_times} | {t for t in control.breaks if 0 < t < t_end}
                   | {float(t_end)})  # fmt: skip
    dt_max = stable_dt(model, dx, cfl)
    samples = {float(t) for t in sample_times}
    profiles = []
    if 0.0 in samples:
        profiles.append(grid.profile(scenario_hash))
    for stop in stops:
        while grid.t < stop - 1e-14:
            grid = fv_step(grid, model, control, min(dt_max, stop - grid.t))
        grid = replace(grid, t=stop)
        if stop in samples and stop > 0.0:
            profiles.append(grid.profile(scenario_hash))
    log.debug("fv run: %d cells, capped mass %.3g", len(grid.cells), grid.capped_mass)
    return grid, profiles


def l1_compare(a: Profile, b: Profile) -> float:
    """``L1`` distance of two snapshots of the same scenario over their common window."""
    if a.scenario_hash and b.scenario_hash and a.scenario_hash != b.scenario_hash:
        raise ScenarioMismatch(f"scenario {a.scenario_hash[:12]} vs {b.scenario_hash[:12]}")
    if abs(a.t - b.t) > 1e-12:
        raise ScenarioMismatch(f"snapshot times differ: {a.t!r} vs {b.t!r}")
    lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        raise DomainError("snapshots need a finite common window")
    return a.density.l1_distance(b.density, lo, hi)
