"""Event-driven wave-front tracking with a moving bottleneck.

All states are indices into the density grid and every front travels at the
exact Rankine-Hugoniot speed of its two grid states, so between events the
solution is an exact weak solution for the piecewise-linear interpolant of
the flux.  The bottleneck is a node of the front list like any other; it
carries an undercompressive jump when its two states differ.

Events are collisions of adjacent nodes and jumps of the control.  At every
event all nodes meeting at the event point are replaced by the solution of
the Riemann problem between their outer states (the constrained one when the
vehicle is part of the cluster).  Each event is logged in a
:class:`GlimmLedger` that checks the decay of the Glimm functional.
"""

from __future__ import annotations

import bisect
import heapq
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .flux_model import DomainError, FluxModel
from .mesh import Grids, quantize_control, quantize_initial
from .signals import ControlSignal, PiecewiseConstant, Profile

log = logging.getLogger(__name__)

SPEED_TOL = 1e-12  # speeds closer than this are treated as equal
CLUSTER_TOL = 1e-11  # relative distance under which nodes meet
GLIMM_TOL = 1e-9

SHOCK = "shock"
RAREFACTION = "rarefaction_front"
UNDERCOMPRESSIVE = "undercompressive"

MODE_FREE = "F"
MODE_CLASSICAL = "C"
MODE_UC = "UC"


class EventCapExceeded(RuntimeError):
    pass


class GlimmViolation(AssertionError):
    pass


class TrackerError(RuntimeError):
    pass


# -- records -------------------------------------------------------------------


@dataclass(frozen=True)
class Front:
    """A classical front (or the undercompressive jump) at time ``t0``."""

    x: float
    left: float
    right: float
    kind: str
    speed: float

    def position(self, dt: float) -> float:
        return self.x + self.speed * dt


@dataclass(frozen=True)
class AvState:
    """Vehicle position, control, speed and the densities on both sides."""

    y: float
    u: float
    speed: float
    mode: str
    left: float
    right: float


@dataclass(frozen=True)
class Configuration:
    """Front list valid on ``[t0, next configuration)``; positions are at ``t0``."""

    t0: float
    fronts: tuple[Front, ...]
    av: AvState
    left_state: float

    def positions(self, t: float) -> np.ndarray:
        dt = t - self.t0
        return np.array([fr.x + fr.speed * dt for fr in self.fronts])

    def av_position(self, t: float) -> float:
        return self.av.y + self.av.speed * (t - self.t0)

    def profile(self, t: float) -> PiecewiseConstant:
        return _profile_from(
            self.left_state, [(f.x + f.speed * (t - self.t0), f.right) for f in self.fronts]
        )


@dataclass(frozen=True)
class LedgerRecord:
    t: float
    kind: str
    x: float
    tv: float
    gamma: float
    tv_u: float
    upsilon: float
    waves: int
    delta: float
    ok: bool


@dataclass
class GlimmLedger:
    """Time series of the Glimm functional with the per-event decay check.

    ``Upsilon = TV + 2R + gamma + (6/beta) TV(u; (t, inf))`` where ``gamma``
    is minus twice the strength of the undercompressive jump, if any.  Every
    event must either lower ``Upsilon`` by at least ``quantum`` or leave it
    unchanged without raising the number of waves.
    """

    R: float
    beta: float
    quantum: float
    strict: bool = True
    records: list[LedgerRecord] = field(default_factory=list)

    def upsilon(self, tv: float, gamma: float, tv_u: float) -> float:
        return tv + 2.0 * self.R + gamma + (6.0 / self.beta) * tv_u

    def start(self, t: float, tv: float, gamma: float, tv_u: float, waves: int) -> None:
        ups = self.upsilon(tv, gamma, tv_u)
        self.records.append(LedgerRecord(t, "init", math.nan, tv, gamma, tv_u, ups, waves, 0.0, True))

    def admissible(self, delta: float, waves_before: int, waves_after: int) -> bool:
        if delta > GLIMM_TOL:
            return False
        if delta <= -self.quantum + GLIMM_TOL:
            return True
        return abs(delta) <= GLIMM_TOL and waves_after <= waves_before

    def record(
        self, t: float, kind: str, x: float, tv: float, gamma: float, tv_u: float, waves: int,
        dump=None,
    ) -> LedgerRecord:  # fmt: skip
        prev = self.records[-1]
        ups = self.upsilon(tv, gamma, tv_u)
        delta = ups - prev.upsilon
        ok = self.admissible(delta, prev.waves, waves)
        rec = LedgerRecord(t, kind, x, tv, gamma, tv_u, ups, waves, delta, ok)
        self.records.append(rec)
        if not ok:
            msg = (
                f"Glimm functional check failed at t={t!r} ({kind} at x={x!r}): "
                f"dUpsilon={delta:.6g}, waves {prev.waves} -> {waves}, quantum={self.quantum:.6g}"
            )
            if dump is not None:
                msg += "\n" + dump()
            if self.strict:
                raise GlimmViolation(msg)
            log.warning(msg)
        return rec

    @property
    def upsilon0(self) -> float:
        return self.records[0].upsilon

    @property
    def violations(self) -> list[LedgerRecord]:
        return [r for r in self.records if not r.ok]

    def as_array(self) -> np.ndarray:
        return np.array([r.upsilon for r in self.records])


# -- engine --------------------------------------------------------------------


class _Node:
    __slots__ = ("left", "right", "speed", "t0", "x0", "is_av", "prev", "next", "alive")

    def __init__(self, left: int, right: int, speed: float, t0: float, x0: float, is_av=False):
        self.left = left
        self.right = right
        self.speed = speed
        self.t0 = t0
        self.x0 = x0
        self.is_av = is_av
        self.prev: _Node | None = None
        self.next: _Node | None = None
        self.alive = True

    def x(self, t: float) -> float:
        return self.x0 + self.speed * (t - self.t0)

    def __repr__(self) -> str:
        tag = "AV" if self.is_av else "front"
        return f"{tag}({self.left}->{self.right}, s={self.speed!r}, x0={self.x0!r}, t0={self.t0!r})"


def _profile_from(left_state: float, jumps: list[tuple[float, float]]) -> PiecewiseConstant:
    breaks: list[float] = []
    values = [left_state]
    for x, right in jumps:
        if breaks and x <= breaks[-1]:
            values[-1] = right
        else:
            breaks.append(x)
            values.append(right)
    return PiecewiseConstant(tuple(breaks), tuple(values)).map_values(lambda v: v)


class SimState:
    """Mutable tracker state.  Build it with :func:`init`."""

    def __init__(
        self,
        model: FluxModel,
        grids: Grids,
        rho0: PiecewiseConstant,
        control: ControlSignal,
        y0: float,
        *,
        strict: bool = True,
        record_history: bool = False,
        event_cap: int | None = None,
    ):
        self.model = model
        self.grids = grids
        self.rho = grids.density_grid
        self.fvals = np.array([model.f(float(r)) for r in self.rho])
        self.speeds = grids.speed_grid
        self.F = np.array([model.F_alpha(float(u)) for u in self.speeds])
        self.rho0 = quantize_initial(grids, rho0)
        self.control = quantize_control(grids, control)
        self._u_index = [grids.speed_index(v) for v in self.control.values]
        self.y0 = float(y0)
        self.t = 0.0
        self.head: _Node | None = None
        self.av: _Node | None = None
        self.tv = 0.0
        self.waves = 0
        self.events = 0
        self._heap: list = []
        self._seq = itertools.count()
        quantum = min(grids.delta_rho, 6.0 * grids.delta_u / model.beta)
        self.ledger = GlimmLedger(model.R, model.beta, quantum, strict)
        self.history: list[Configuration] | None = [] if record_history else None
        self.av_path: list[tuple[float, float, float]] = []
        n0 = len(self.rho0.breaks) + 1
        jumps = len(self.control.breaks)
        self.event_cap = event_cap or 10 * (n0 + jumps) * 4**grids.nu
        self._build()

    # -- grid helpers --------------------------------------------------

    def _chord(self, a: int, b: int) -> float:
        return float((self.fvals[a] - self.fvals[b]) / (self.rho[a] - self.rho[b]))

    def _v(self, i: int) -> float:
        r = self.rho[i]
        return self.model.V if r <= 0.0 else float(self.fvals[i] / r)

    def u_index(self, t: float) -> int:
        return self._u_index[bisect.bisect_right(self.control.breaks, t)]

    def _classical(self, a: int, b: int) -> list[tuple[int, int, float]]:
        if a == b:
            return []
        if a < b:
            return [(a, b, self._chord(a, b))]
        return [(i, i - 1, self._chord(i, i - 1)) for i in range(a, b, -1)]

    def _constrained(self, k: int, a: int, b: int) -> tuple[list, tuple[int, int, float], list]:
        """Constrained Riemann solution on the grid: (fronts left, vehicle, fronts right)."""
        u = float(self.speeds[k])
        waves = self._classical(a, b)
        j = 0
        while j < len(waves) and waves[j][2] <= u + SPEED_TOL:
            j += 1
        trace = waves[j - 1][1] if j else a
        hat, check = int(self.grids.hat_index[k]), int(self.grids.check_index[k])
        if self.fvals[trace] - u * self.rho[trace] > self.F[k] + 1e-12 and hat != check:
            left = self._classical(a, hat)
            right = self._classical(check, b)
            if any(s > u + SPEED_TOL for *_, s in left) or any(s < u - SPEED_TOL for *_, s in right):
                raise TrackerError(
                    f"constrained solution out of order for u={u!r}, states {a}->{b}: "
                    f"{left} | {right}"
                )
            return left, (hat, check, u), right
        # classical: the vehicle sits at the fixed point of s = min(u, v(trace+))
        state, j = a, 0
        while j < len(waves):
            h = min(u, self._v(state))
            if h < waves[j][2] - SPEED_TOL:
                break
            state = waves[j][1]
            j += 1
        h = min(u, self._v(state))
        return waves[:j], (state, state, h), waves[j:]

    # -- list management -----------------------------------------------

    def _strength(self, n: _Node) -> float:
        return abs(float(self.rho[n.left] - self.rho[n.right]))

    def _count(self, n: _Node) -> int:
        return 0 if n.left == n.right else 1

    def _gamma(self) -> float:
        return -2.0 * self._strength(self.av)

    def _nodes(self):
        n = self.head
        while n is not None:
            yield n
            n = n.next

    def _make(self, spec_left, av_spec, spec_right, t, x) -> list[_Node]:
        nodes = [_Node(a, b, s, t, x) for a, b, s in spec_left]
        if av_spec is not None:
            nodes.append(_Node(av_spec[0], av_spec[1], av_spec[2], t, x, is_av=True))
        nodes.extend(_Node(a, b, s, t, x) for a, b, s in spec_right)
        return nodes

    def _splice(self, before: _Node | None, after: _Node | None, nodes: list[_Node]) -> None:
        prev = before
        for n in nodes:
            n.prev = prev
            if prev is None:
                self.head = n
            else:
                prev.next = n
            prev = n
        if prev is None:
            self.head = after
        else:
            prev.next = after
        if after is not None:
            after.prev = prev
        for n in nodes:
            self.tv += self._strength(n)
            self.waves += self._count(n)
            if n.is_av:
                self.av = n

    def _schedule(self, a: _Node | None, b: _Node | None) -> None:
        if a is None or b is None:
            return
        ds = a.speed - b.speed
        if ds <= SPEED_TOL:
            return
        gap = max(b.x(self.t) - a.x(self.t), 0.0)
        t_hit = self.t + gap / ds
        x_hit = a.x(t_hit)
        heapq.heappush(self._heap, (t_hit, 0, x_hit, next(self._seq), a, b))

    def _build(self) -> None:
        rho0 = self.rho0
        idx = [self.grids.density_index(v) for v in rho0.values]
        y0 = self.y0
        k = self.u_index(0.0)
        nodes: list[_Node] = []
        placed_av = False
        for i, x in enumerate(rho0.breaks):
            if not placed_av and x >= y0:
                if x == y0:
                    a, b = idx[i], idx[i + 1]
                else:
                    a = b = idx[i]
                nodes += self._make(*self._constrained(k, a, b), 0.0, y0)
                placed_av = True
                if x == y0:
                    continue
            nodes += self._make(self._classical(idx[i], idx[i + 1]), None, [], 0.0, x)
        if not placed_av:
            nodes += self._make(*self._constrained(k, idx[-1], idx[-1]), 0.0, y0)
        self._splice(None, None, nodes)
        for a, b in zip(nodes, nodes[1:]):
            self._schedule(a, b)
        for tj in self.control.breaks:
            if tj > 0.0:
                heapq.heappush(self._heap, (tj, 1, math.nan, next(self._seq), None, None))
        self.ledger.start(0.0, self.tv, self._gamma(), self._tv_u(0.0), self.waves)
        self._log_av(0.0)
        self._snapshot(0.0)

    def _tv_u(self, t: float) -> float:
        return self.control.variation_after(t)

    def _log_av(self, t: float) -> None:
        self.av_path.append((t, self.av.x(t), self.av.speed))

    # -- public queries -------------------------------------------------

    @property
    def left_state(self) -> int:
        return self.head.left

    def mode(self) -> str:
        av = self.av
        if av.left != av.right:
            return MODE_UC
        p = av.prev
        if p is not None and abs(p.speed - av.speed) <= SPEED_TOL and abs(p.x(self.t) - av.x(self.t)) <= CLUSTER_TOL * max(1.0, abs(av.x(self.t))):  # noqa: E501
            return MODE_CLASSICAL
        return MODE_FREE

    def av_state(self, t: float | None = None) -> AvState:
        t = self.t if t is None else t
        av = self.av
        k = self.u_index(t)
        return AvState(
            av.x(t), float(self.speeds[k]), av.speed, self.mode(),
            float(self.rho[av.left]), float(self.rho[av.right]),
        )  # fmt: skip

    def fronts(self, t: float | None = None) -> list[Front]:
        t = self.t if t is None else t
        out = []
        for n in self._nodes():
            if n.left == n.right:
                continue
            l, r = float(self.rho[n.left]), float(self.rho[n.right])
            kind = UNDERCOMPRESSIVE if n.is_av else (SHOCK if n.left < n.right else RAREFACTION)
            out.append(Front(n.x(t), l, r, kind, n.speed))
        return out

    def profile(self, t: float | None = None) -> PiecewiseConstant:
        t = self.t if t is None else t
        self._check_time(t)
        jumps = [(n.x(t), float(self.rho[n.right])) for n in self._nodes() if n.left != n.right]
        return _profile_from(float(self.rho[self.left_state]), jumps)

    def configuration(self) -> Configuration:
        return Configuration(self.t, tuple(self.fronts()), self.av_state(),
                             float(self.rho[self.left_state]))  # fmt: skip

    def _check_time(self, t: float) -> None:
        nxt = self.next_event()[0]
        if t < self.t - 1e-12 or t > nxt + 1e-12:
            raise DomainError(f"time {t!r} outside the current interval [{self.t!r}, {nxt!r}]")

    def _snapshot(self, t: float) -> None:
        if self.history is not None:
            self.history.append(self.configuration())

    # -- events ------------------------------------------------------------

    def _valid(self, entry) -> bool:
        _, prio, _, _, a, b = entry
        if prio == 1:
            return True
        return a.alive and b.alive and a.next is b

    def next_event(self) -> tuple[float, str]:
        heap = self._heap
        while heap and not self._valid(heap[0]):
            heapq.heappop(heap)
        if not heap:
            return math.inf, "none"
        t, prio, _, _, a, b = heap[0]
        if prio == 1:
            return t, "control"
        return t, "av" if (a.is_av or b.is_av) else "collision"

    def apply_event(self) -> LedgerRecord | None:
        t, kind = self.next_event()
        if kind == "none":
            return None
        _, prio, x_hit, _, a, b = heapq.heappop(self._heap)
        self.events += 1
        if self.events > self.event_cap:
            raise EventCapExceeded(
                f"more than {self.event_cap} events by t={t!r}; last nodes {a!r}, {b!r}"
            )
        self.t = max(t, self.t)
        t = self.t
        if prio == 1:
            a = b = self.av
            x = a.x(t)
        else:
            x = 0.5 * (a.x(t) + b.x(t))
        first, last = self._cluster(a, b, t, x)
        return self._resolve(t, x, first, last, kind)

    def _cluster(self, first: _Node, last: _Node, t: float, x: float) -> tuple[_Node, _Node]:
        """Extend ``first..last`` by every neighbour located at ``x``."""
        tol = CLUSTER_TOL * max(1.0, abs(x))
        while first.prev is not None and abs(first.prev.x(t) - x) <= tol:
            first = first.prev
        while last.next is not None and abs(last.next.x(t) - x) <= tol:
            last = last.next
        return first, last

    def _resolve(self, t: float, x: float, first: _Node, last: _Node, kind: str) -> LedgerRecord:
        before, after = first.prev, last.next
        old = []
        n = first
        while True:
            old.append(n)
            if n is last:
                break
            n = n.next
        has_av = any(n.is_av for n in old)
        a, b = first.left, last.right
        for n in old:
            n.alive = False
            self.tv -= self._strength(n)
            self.waves -= self._count(n)
        if has_av:
            nodes = self._make(*self._constrained(self.u_index(t), a, b), t, x)
        else:
            nodes = self._make(self._classical(a, b), None, [], t, x)
        self._splice(before, after, nodes)
        if nodes:
            self._schedule(before, nodes[0])
            for p, q in zip(nodes, nodes[1:]):
                self._schedule(p, q)
            self._schedule(nodes[-1], after)
        else:
            self._schedule(before, after)
        if self.tv < 0.0:
            self.tv = 0.0 if self.tv > -1e-12 else self.tv
        if has_av:
            self._log_av(t)

        def dump() -> str:
            return "replaced:\n  " + "\n  ".join(map(repr, old)) + "\nby:\n  " + "\n  ".join(
                map(repr, nodes)
            )

        rec = self.ledger.record(
            t, kind, x, self.tv, self._gamma(), self._tv_u(t), self.waves, dump
        )
        self._snapshot(t)
        return rec

    def advance(self, t_end: float) -> None:
        """Process every event with time ``<= t_end``."""
        while True:
            t, kind = self.next_event()
            if t > t_end:
                break
            self.apply_event()


# -- module-level API ----------------------------------------------------------


def init(
    model: FluxModel,
    grids: Grids,
    rho0: PiecewiseConstant,
    u: ControlSignal,
    y0: float,
    **options,
) -> SimState:
    """Quantise the data, solve all Riemann problems at ``t = 0`` and queue the events."""
    return SimState(model, grids, rho0, u, y0, **options)


def next_event(state: SimState) -> tuple[float, str]:
    return state.next_event()


def apply_event(state: SimState) -> LedgerRecord | None:
    return state.apply_event()


@dataclass
class SimResult:
    state: SimState
    ledger: GlimmLedger
    profiles: list[Profile]
    t_end: float

    @property
    def history(self) -> list[Configuration] | None:
        return self.state.history


def run(
    state: SimState, t_end: float, sample_times=(), scenario_hash: str = ""
) -> SimResult:
    """Process events up to ``t_end`` and collect density profiles at ``sample_times``."""
    if not t_end > state.t:
        raise DomainError(f"t_end={t_end!r} must exceed the current time {state.t!r}")
    profiles = []
    for ts in sorted(set(float(s) for s in sample_times)):
        if ts < state.t or ts > t_end:
            raise DomainError(f"sample time {ts!r} outside [{state.t!r}, {t_end!r}]")
        while state.next_event()[0] < ts:
            state.apply_event()
        profiles.append(Profile(ts, state.profile(ts), scenario_hash))
    state.advance(t_end)
    state.av_path.append((t_end, state.av.x(t_end), state.av.speed))
    return SimResult(state, state.ledger, profiles, t_end)


# -- history queries ------------------------------------------------------------


def _segment(history: list[Configuration], t: float) -> Configuration:
    if not history or t < history[0].t0:
        raise DomainError(f"time {t!r} before the recorded history")
    i = int(np.searchsorted([c.t0 for c in history], t, side="right")) - 1
    return history[i]


def sample_density(history: list[Configuration], t: float, xs, t_end: float | None = None):
    """Density at ``(t, xs)`` from a recorded history."""
    if t_end is not None and t > t_end:
        raise DomainError(f"time {t!r} after the simulated horizon {t_end!r}")
    return _segment(history, t).profile(t).evaluate(xs)


def av_trajectory(history: list[Configuration], t_end: float) -> list[tuple[float, float]]:
    """Vertices ``(t, y)`` of the piecewise affine vehicle path."""
    pts = [(c.t0, c.av.y) for c in history]
    pts.append((t_end, history[-1].av_position(t_end)))
    out = [pts[0]]
    for p in pts[1:]:
        if p[0] > out[-1][0]:
            out.append(p)
    return out


# -- validation ----------------------------------------------------------------


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    checked_segments: int = 0
    checked_samples: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, msg: str) -> None:
        self.violations.append(msg)


def _trace_right(cfg: Configuration, t: float, y: float, tol: float) -> float:
    state = cfg.left_state
    for fr, x in zip(cfg.fronts, cfg.positions(t)):
        if x > y + tol:
            break
        state = fr.right
    return state


def _trace_left(cfg: Configuration, t: float, y: float, tol: float) -> float:
    state = cfg.left_state
    for fr, x in zip(cfg.fronts, cfg.positions(t)):
        if x >= y - tol:
            break
        state = fr.right
    return state


def validate_solution(
    history: list[Configuration],
    model: FluxModel,
    grids: Grids,
    control: ControlSignal,
    upsilon0: float | None = None,
    t_end: float | None = None,
    samples: int = 0,
    tol: float = 1e-10,
) -> ValidationReport:
    """Check every recorded configuration for admissibility.

    Per front: Rankine-Hugoniot speed, Lax admissibility of shocks,
    strength and speed bracket of rarefaction fronts, undercompressive
    states and speed.  At the vehicle: the flux constraint on both traces
    and the speed law ``y' = min(u, v(rho(y+)))``.  Optionally also the
    bound ``TV <= Upsilon(0)`` and the speed law at ``samples`` uniformly
    spaced times.
    """
    rep = ValidationReport()
    f, df = model.f, model.df
    eps = grids.eps_rho
    starts = [c.t0 for c in history]
    t_last = t_end if t_end is not None else (starts[-1] + 1.0 if starts else 0.0)
    ends = starts[1:] + [max(t_last, starts[-1] if starts else 0.0)]
    for cfg, t1 in zip(history, ends):
        rep.checked_segments += 1
        t = cfg.t0
        # fronts born at t0 sit on top of each other; traces are read inside the segment
        t_in = 0.5 * (t + t1) if t1 > t else t
        n_uc = 0
        for fr in cfg.fronts:
            tag = f"t={t:.9g} x={fr.x:.9g}"
            if fr.left == fr.right:
                rep.add(f"{tag}: zero-strength front")
                continue
            rh = (f(fr.left) - f(fr.right)) / (fr.left - fr.right)
            if abs(rh - fr.speed) > tol:
                rep.add(f"{tag}: Rankine-Hugoniot residual {abs(rh - fr.speed):.3g}")
            if fr.kind == SHOCK and not fr.left < fr.right:
                rep.add(f"{tag}: shock with left >= right")
            elif fr.kind == RAREFACTION:
                if not fr.right < fr.left <= fr.right + eps + tol:
                    rep.add(f"{tag}: rarefaction front strength {fr.left - fr.right:.3g}")
                if not df(fr.left) - tol <= fr.speed <= df(fr.right) + tol:
                    rep.add(f"{tag}: rarefaction front speed outside characteristic bracket")
            elif fr.kind == UNDERCOMPRESSIVE:
                n_uc += 1
                geo = model.geometry(cfg.av.u)
                if abs(fr.left - geo.hat_rho) > tol or abs(fr.right - geo.check_rho) > tol:
                    rep.add(f"{tag}: undercompressive states differ from ({geo.hat_rho}, {geo.check_rho})")
                if abs(fr.speed - cfg.av.u) > tol:
                    rep.add(f"{tag}: undercompressive front not at speed u")
                if abs(fr.x - cfg.av.y) > tol * max(1.0, abs(fr.x)):
                    rep.add(f"{tag}: undercompressive front away from the vehicle")
                defect = f(fr.left) - fr.speed * fr.left - geo.F_alpha
                if abs(defect) > tol:
                    rep.add(f"{tag}: constraint not saturated on undercompressive front ({defect:.3g})")
        if n_uc > 1:
            rep.add(f"t={t:.9g}: {n_uc} undercompressive fronts")
        if t1 - t > 1e-12:  # the vehicle law is required for almost every t only
            _check_av(rep, cfg, t_in, model, control, tol)
        if upsilon0 is not None:
            tv = cfg.profile(t_in).total_variation
            if tv > upsilon0 + tol:
                rep.add(f"t={t:.9g}: TV {tv:.9g} exceeds Upsilon(0) {upsilon0:.9g}")
    if samples and history:
        for t in np.linspace(0.0, t_last, samples + 2)[1:-1]:
            i = int(np.searchsorted(starts, t, side="right")) - 1
            if ends[i] - starts[i] <= 1e-12:
                continue
            if t - starts[i] <= 1e-12:
                t = 0.5 * (starts[i] + ends[i])
            rep.checked_samples += 1
            _check_av(rep, history[i], float(t), model, control, tol)
    return rep


def _check_av(rep, cfg: Configuration, t: float, model: FluxModel, control, tol: float) -> None:
    av = cfg.av
    y = cfg.av_position(t)
    ptol = CLUSTER_TOL * max(1.0, abs(y))
    tag = f"t={t:.9g} y={y:.9g}"
    u = control(t)
    if abs(u - av.u) > tol:
        rep.add(f"{tag}: vehicle uses u={av.u} but the control is {u}")
    if not -tol <= av.speed <= model.V + tol:
        rep.add(f"{tag}: vehicle speed {av.speed} outside [0, V]")
    right = _trace_right(cfg, t, y, ptol)
    left = _trace_left(cfg, t, y, ptol)
    expected = min(u, model.v(right))
    if abs(expected - av.speed) > tol:
        rep.add(f"{tag}: vehicle speed {av.speed!r} but min(u, v(trace+)) = {expected!r}")
    s = min(max(av.speed, 0.0), model.V)
    F = model.F_alpha(s)
    for side, r in (("-", left), ("+", right)):
        if model.f(r) - s * r > F + tol:
            rep.add(f"{tag}: flux constraint violated at trace {side} (rho={r})")
