"""Scenario files and result emission (CSV tables and SVG space-time diagrams).

Scenario grammar, one entry per line::

    # comment
    key = value
    key = [v1, v2, ...]

Keys: ``flux`` (family name), ``R``, ``V``, family parameters such as
``c``, ``alpha``, ``nu``, ``y0``, ``t_end``, ``rho0_x`` (jump positions),
``rho0_values`` (one more value than positions), ``control_t`` (jump
times), ``control_values``, ``snapshots``, ``diagram`` (true/false) and
``seed``.  Floats are written with ``repr`` so a printed scenario parses
back to the identical object.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .flux_model import FLUX_FAMILIES, DomainError, FluxModel, make_flux
from .riemann import RAREFACTION as FAN, UNDERCOMPRESSIVE as UC_WAVE, RiemannSolution
from .signals import ControlSignal, PiecewiseConstant, Profile
from .tracker import (
    RAREFACTION,
    SHOCK,
    UNDERCOMPRESSIVE,
    AvState,
    Configuration,
    Front,
    GlimmLedger,
    av_trajectory,
)

VEHICLE = "vehicle"
UNITS = "x,y [length]; t [time]; rho [vehicles/length]; speed,u [length/time]"
FAMILY_PARAMS = {"greenshields": (), "cubic": ("c",)}


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    flux: str = "greenshields"
    R: float = 1.0
    V: float = 1.0
    alpha: float = 0.75
    params: tuple[tuple[str, float], ...] = ()
    nu: int = 6
    y0: float = 0.0
    t_end: float = 1.0
    rho0: PiecewiseConstant = field(default_factory=lambda: PiecewiseConstant.constant(0.0))
    control: ControlSignal = field(default_factory=lambda: PiecewiseConstant.constant(1.0))
    snapshots: tuple[float, ...] = ()
    diagram: bool = False
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.flux not in FLUX_FAMILIES:
            raise ScenarioError(f"field 'flux': unknown family {self.flux!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ScenarioError(f"field 'alpha': {self.alpha!r} outside (0, 1)")
        if self.R <= 0.0 or self.V <= 0.0:
            raise ScenarioError("fields 'R' and 'V' must be positive")
        if self.nu < 1:
            raise ScenarioError(f"field 'nu': must be >= 1, got {self.nu!r}")
        if not self.t_end > 0.0:
            raise ScenarioError(f"field 't_end': must be positive, got {self.t_end!r}")
        for v in self.rho0.values:
            if not 0.0 <= v <= self.R:
                raise ScenarioError(f"field 'rho0_values': {v!r} outside [0, {self.R!r}]")
        for v in self.control.values:
            if not 0.0 <= v <= self.V:
                raise ScenarioError(f"field 'control_values': {v!r} outside [0, {self.V!r}]")
        for s in self.snapshots:
            if not 0.0 <= s <= self.t_end:
                raise ScenarioError(f"field 'snapshots': {s!r} outside [0, t_end]")

    def model(self) -> FluxModel:
        return make_flux(self.flux, R=self.R, V=self.V, alpha=self.alpha, **dict(self.params))

    @property
    def hash(self) -> str:
        """Digest of the initial-value problem only (not of resolution or outputs)."""
        lines = [
            f"flux={self.flux}",
            f"R={self.R!r}",
            f"V={self.V!r}",
            f"alpha={self.alpha!r}",
            *(f"{k}={v!r}" for k, v in self.params),
            f"y0={self.y0!r}",
            f"rho0_x={list(self.rho0.breaks)!r}",
            f"rho0_values={list(self.rho0.values)!r}",
            f"control_t={list(self.control.breaks)!r}",
            f"control_values={list(self.control.values)!r}",
        ]
        return hashlib.sha256("\n".join(lines).encode()).hexdigest()

    def support(self, margin: float = 0.0) -> tuple[float, float]:
        """Interval that can be reached by waves before ``t_end``."""
        pts = list(self.rho0.breaks) + [self.y0]
        reach = self.model().lipschitz * self.t_end + margin
        return min(pts) - reach, max(pts) + reach

    def to_text(self) -> str:
        def arr(xs) -> str:
            return "[" + ", ".join(repr(float(x)) for x in xs) + "]"

        lines = [
            f"flux = {self.flux}",
            f"R = {self.R!r}",
            f"V = {self.V!r}",
            *(f"{k} = {v!r}" for k, v in self.params),
            f"alpha = {self.alpha!r}",
            f"nu = {self.nu}",
            f"y0 = {self.y0!r}",
            f"t_end = {self.t_end!r}",
            f"rho0_x = {arr(self.rho0.breaks)}",
            f"rho0_values = {arr(self.rho0.values)}",
            f"control_t = {arr(self.control.breaks)}",
            f"control_values = {arr(self.control.values)}",
            f"snapshots = {arr(self.snapshots)}",
            f"diagram = {'true' if self.diagram else 'false'}",
        ]
        if self.seed is not None:
            lines.append(f"seed = {self.seed}")
        return "\n".join(lines) + "\n"


_FLOAT_KEYS = {"R", "V", "alpha", "y0", "t_end", "c"}
_ARRAY_KEYS = {"rho0_x", "rho0_values", "control_t", "control_values", "snapshots"}
_INT_KEYS = {"nu", "seed"}


def _parse_value(key: str, raw: str, lineno: int):
    def fail(msg: str):
        return ScenarioError(f"line {lineno}: field {key!r}: {msg}")

    try:
        if key in _ARRAY_KEYS:
            if not (raw.startswith("[") and raw.endswith("]")):
                raise fail("expected a bracketed list")
            body = raw[1:-1].strip()
            return tuple(float(x) for x in body.split(",")) if body else ()
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _INT_KEYS:
            return int(raw)
        if key == "diagram":
            if raw.lower() not in ("true", "false"):
                raise fail("expected true or false")
            return raw.lower() == "true"
        if key == "flux":
            return raw
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise fail(f"cannot parse {raw!r}") from None
    raise fail("unknown key")


def parse_scenario(text: str) -> Scenario:
    """Parse scenario text; errors name the offending line and field."""
    seen: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (p.strip() for p in line.split("=", 1))
        if key in seen:
            raise ScenarioError(f"line {lineno}: field {key!r} given twice")
        seen[key] = _parse_value(key, raw, lineno)

    flux = seen.pop("flux", "greenshields")
    if flux not in FLUX_FAMILIES:
        raise ScenarioError(f"field 'flux': unknown family {flux!r}")
    params = tuple((k, seen.pop(k)) for k in FAMILY_PARAMS.get(flux, ()) if k in seen)
    if "c" in seen:
        raise ScenarioError(f"field 'c' is not a parameter of flux {flux!r}")
    rho_x = seen.pop("rho0_x", ())
    rho_v = seen.pop("rho0_values", (0.0,))
    ctl_t = seen.pop("control_t", ())
    ctl_v = seen.pop("control_values", (1.0,))
    try:
        rho0 = PiecewiseConstant(rho_x, rho_v)
    except ValueError as exc:
        raise ScenarioError(f"fields 'rho0_x'/'rho0_values': {exc}") from None
    try:
        control = PiecewiseConstant(ctl_t, ctl_v)
    except ValueError as exc:
        raise ScenarioError(f"fields 'control_t'/'control_values': {exc}") from None
    return Scenario(
        flux=flux,
        params=params,
        rho0=rho0,
        control=control,
        snapshots=tuple(seen.pop("snapshots", ())),
        **seen,
    )


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario(Path(path).read_text())


DEMO_SCENARIO = """\
# two queues, a slow vehicle that later speeds up
flux = greenshields
R = 1.0
V = 1.0
alpha = 0.75
nu = 5
y0 = 0.0
t_end = 2.0
rho0_x = [-1.0, 0.0, 0.8]
rho0_values = [0.2, 0.4, 0.6, 0.1]
control_t = [1.0]
control_values = [0.1, 0.5]
snapshots = [0.5, 1.0, 2.0]
diagram = false
"""


def demo_scenario() -> Scenario:
    return parse_scenario(DEMO_SCENARIO)


def random_scenario(
    seed: int,
    nu: int = 4,
    max_jumps: int = 20,
    max_controls: int = 10,
    t_end: float = 5.0,
    width: float = 2.0,
    flux: str = "greenshields",
) -> Scenario:
    """Random initial datum and control, reproducible from ``seed``."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(0, max_jumps + 1))
    xs = np.sort(rng.uniform(-width, width, n))
    vals = rng.uniform(0.0, 1.0, n + 1)
    k = int(rng.integers(0, max_controls + 1))
    ts = np.sort(rng.uniform(0.0, t_end, k))
    us = rng.uniform(0.0, 1.0, k + 1)
    y0 = float(rng.uniform(-width / 2, width / 2))
    params = (("c", 0.5),) if flux == "cubic" else ()
    return Scenario(
        flux=flux, params=params, nu=nu, y0=y0, t_end=t_end,
        rho0=PiecewiseConstant(tuple(xs), tuple(vals)),
        control=PiecewiseConstant(tuple(ts), tuple(us)),
        seed=seed,
    )  # fmt: skip


# -- CSV emission ----------------------------------------------------------------


def _header(scenario_hash: str) -> str:
    return f"# scenario={scenario_hash} units: {UNITS}\n"


def _write_csv(path: Path, scenario_hash: str, header: list[str], rows) -> Path:
    buf = io.StringIO()
    buf.write(_header(scenario_hash))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    path.write_text(buf.getvalue())
    return path


FRONT_COLUMNS = ["t_event [time]", "x [length]", "left [vehicles/length]",
                 "right [vehicles/length]", "kind", "speed [length/time]"]  # fmt: skip


def write_fronts(path: Path, history: list[Configuration], scenario_hash: str) -> Path:
    """One block of rows per configuration; the vehicle is a row of kind ``vehicle``."""

    def rows():
        for cfg in history:
            yield (cfg.t0, float("-inf"), cfg.left_state, cfg.left_state, "far_left", 0.0)
            for fr in cfg.fronts:
                yield (cfg.t0, fr.x, fr.left, fr.right, fr.kind, fr.speed)
            av = cfg.av
            yield (cfg.t0, av.y, av.left, av.right, VEHICLE, av.speed)

    return _write_csv(path, scenario_hash, FRONT_COLUMNS, rows())


def write_trajectory(
    path: Path, history: list[Configuration], t_end: float, scenario_hash: str
) -> Path:
    pts = av_trajectory(history, t_end)
    starts = [c.t0 for c in history]

    def rows():
        for t, y in pts:
            i = max(0, int(np.searchsorted(starts, t, side="right")) - 1)
            av = history[i].av
            yield (t, y, av.speed, av.u, av.mode)

    cols = ["t [time]", "y [length]", "speed [length/time]", "u [length/time]", "mode"]
    return _write_csv(path, scenario_hash, cols, rows())


def write_ledger(path: Path, ledger: GlimmLedger, scenario_hash: str) -> Path:
    cols = ["t [time]", "event", "x [length]", "TV [vehicles/length]", "gamma", "TV_u_rest",
            "Upsilon", "waves", "dUpsilon", "ok"]  # fmt: skip
    rows = ((r.t, r.kind, r.x, r.tv, r.gamma, r.tv_u, r.upsilon, r.waves, r.delta, int(r.ok))
            for r in ledger.records)  # fmt: skip
    return _write_csv(path, scenario_hash, cols, rows)


def write_snapshots(
    path: Path, profiles: list[Profile], window: tuple[float, float], scenario_hash: str
) -> Path:
    def rows():
        for p in profiles:
            lo, hi = max(window[0], p.lo), min(window[1], p.hi)
            edges = [lo] + [b for b in p.density.breaks if lo < b < hi] + [hi]
            for a, b in zip(edges, edges[1:]):
                yield (p.t, a, b, p.density(0.5 * (a + b)))

    cols = ["t [time]", "x_start [length]", "x_end [length]", "rho [vehicles/length]"]
    return _write_csv(path, scenario_hash, cols, rows())


def read_csv(path: Path) -> tuple[str, list[dict[str, str]]]:
    """Scenario hash and rows of an emitted CSV."""
    text = Path(path).read_text()
    first, _, rest = text.partition("\n")
    if not first.startswith("# scenario="):
        raise ScenarioError(f"{path}: missing scenario header line")
    digest = first[len("# scenario="):].split()[0]
    return digest, list(csv.DictReader(io.StringIO(rest)))


def read_fronts(path: Path, control: ControlSignal) -> tuple[str, list[Configuration]]:
    """Rebuild the configurations written by :func:`write_fronts`."""
    digest, rows = read_csv(path)
    history: list[Configuration] = []
    block: list[dict[str, str]] = []

    def flush():
        if not block:
            return
        t0 = float(block[0][FRONT_COLUMNS[0]])
        left_state = None
        fronts, av = [], None
        for r in block:
            kind = r["kind"]
            x, l, rr, s = (float(r[c]) for c in (FRONT_COLUMNS[1], FRONT_COLUMNS[2],
                                                  FRONT_COLUMNS[3], FRONT_COLUMNS[5]))  # fmt: skip
            if kind == "far_left":
                left_state = l
            elif kind == VEHICLE:
                mode = "UC" if l != rr else "F"
                av = AvState(x, control(t0), s, mode, l, rr)
            elif kind in (SHOCK, RAREFACTION, UNDERCOMPRESSIVE):
                fronts.append(Front(x, l, rr, kind, s))
            else:
                raise ScenarioError(f"{path}: unknown front kind {kind!r} at t={t0!r}")
        if av is None or left_state is None:
            raise ScenarioError(f"{path}: incomplete block at t={t0!r}")
        history.append(Configuration(t0, tuple(fronts), av, left_state))
        block.clear()

    try:
        for r in rows:
            if r["kind"] == "far_left":
                flush()
            block.append(r)
        flush()
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"{path}: malformed row ({exc})") from None
    return digest, history


# -- SVG ----------------------------------------------------------------------------

_COLORS = {SHOCK: "#000000", RAREFACTION: "#9a9a9a", UNDERCOMPRESSIVE: "#c0392b", FAN: "#9a9a9a"}


class _Canvas:
    def __init__(self, x_range, t_range, width=800, height=500, pad=50):
        self.x0, self.x1 = x_range
        self.t0, self.t1 = t_range
        self.w, self.h, self.pad = width, height, pad
        self.items: list[str] = []

    def px(self, x: float) -> float:
        return self.pad + (x - self.x0) / (self.x1 - self.x0) * (self.w - 2 * self.pad)

    def py(self, t: float) -> float:
        return self.h - self.pad - (t - self.t0) / (self.t1 - self.t0) * (self.h - 2 * self.pad)

    def line(self, x1, t1, x2, t2, color, width=1.0):
        self.items.append(
            f'<line x1="{self.px(x1):.3f}" y1="{self.py(t1):.3f}" x2="{self.px(x2):.3f}" '
            f'y2="{self.py(t2):.3f}" stroke="{color}" stroke-width="{width:.2f}"/>'
        )

    def polyline(self, pts, color, width):
        coords = " ".join(f"{self.px(x):.3f},{self.py(t):.3f}" for t, x in pts)
        self.items.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="{width:.2f}"/>'
        )

    def render(self, title: str) -> str:
        p, w, h = self.pad, self.w, self.h
        axes = [
            f'<rect x="{p}" y="{p}" width="{w - 2 * p}" height="{h - 2 * p}" fill="none" '
            'stroke="#444444" stroke-width="1"/>',
            f'<text x="{w / 2:.1f}" y="{h - 12}" text-anchor="middle" font-size="13">x</text>',
            f'<text x="14" y="{h / 2:.1f}" font-size="13">t</text>',
            f'<text x="{p}" y="{h - p + 16}" font-size="11">{self.x0:.3g}</text>',
            f'<text x="{w - p}" y="{h - p + 16}" text-anchor="end" font-size="11">{self.x1:.3g}</text>',
            f'<text x="{p - 6}" y="{h - p}" text-anchor="end" font-size="11">{self.t0:.3g}</text>',
            f'<text x="{p - 6}" y="{p + 4}" text-anchor="end" font-size="11">{self.t1:.3g}</text>',
            f'<text x="{w / 2:.1f}" y="24" text-anchor="middle" font-size="14">{title}</text>',
        ]
        body = "\n".join(axes + self.items)
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
                f'viewBox="0 0 {w} {h}">\n<rect width="100%" height="100%" fill="white"/>\n'
                f"<defs><clipPath id=\"plot\"><rect x=\"{p}\" y=\"{p}\" width=\"{w - 2 * p}\" "
                f"height=\"{h - 2 * p}\"/></clipPath></defs>\n"
                f'<g clip-path="url(#plot)">\n{body}\n</g>\n</svg>\n')  # fmt: skip


def _front_lines(history: list[Configuration], t_end: float):
    """Merge a front's pieces across configurations into single segments."""
    open_: dict[tuple, list] = {}
    done = []
    ends = [c.t0 for c in history[1:]] + [t_end]
    for cfg, t1 in zip(history, ends):
        keys = set()
        for fr in cfg.fronts:
            key = (round(fr.x - fr.speed * cfg.t0, 9), fr.speed, fr.left, fr.right, fr.kind)
            keys.add(key)
            if key not in open_:
                open_[key] = [cfg.t0, fr.x, t1]
            else:
                open_[key][2] = t1
        for key in [k for k in open_ if k not in keys]:
            done.append((key, *open_.pop(key)))
    done.extend((key, *val) for key, val in open_.items())
    done.sort(key=lambda d: (d[1], d[2]))
    for (_, speed, _, _, kind), t0, x0, t1 in done:
        yield kind, t0, x0, t1, x0 + speed * (t1 - t0)


def xt_diagram(
    history: list[Configuration], t_end: float, window: tuple[float, float], title: str = ""
) -> str:
    """Deterministic SVG of all fronts and the vehicle path in the ``(x, t)`` plane."""
    cv = _Canvas(window, (0.0, t_end))
    for kind, t0, x0, t1, x1 in _front_lines(history, t_end):
        if t1 > t0:
            cv.line(x0, t0, x1, t1, _COLORS.get(kind, "#000000"),
                    2.0 if kind == UNDERCOMPRESSIVE else 0.8)  # fmt: skip
    path = [(t, y) for t, y in av_trajectory(history, t_end)]
    cv.polyline(path, "#1f5fbf", 2.5)
    return cv.render(title)


def riemann_diagram(sol: RiemannSolution, t_max: float = 1.0, rays: int = 8) -> str:
    speeds = [w.speed_lo for w in sol.waves] + [w.speed_hi for w in sol.waves]
    if sol.av_speed is not None:
        speeds.append(sol.av_speed)
    span = max([abs(s) for s in speeds] + [0.5]) * t_max * 1.2
    cv = _Canvas((-span, span), (0.0, t_max))
    for w in sol.waves:
        color = _COLORS.get(w.kind, "#000000")
        if w.kind == FAN:
            for s in np.linspace(w.speed_lo, w.speed_hi, rays):
                cv.line(0.0, 0.0, s * t_max, t_max, color, 0.8)
        else:
            cv.line(0.0, 0.0, w.speed_lo * t_max, t_max, color,
                    2.0 if w.kind == UC_WAVE else 1.2)  # fmt: skip
    if sol.av_speed is not None:
        cv.polyline([(0.0, 0.0), (t_max, sol.av_speed * t_max)], "#1f5fbf", 2.5)
    return cv.render(f"rho_l={sol.rho_l:.4g}, rho_r={sol.rho_r:.4g}, u={sol.u}")


def write_outputs(
    outdir: Path,
    scenario: Scenario,
    history: list[Configuration],
    ledger: GlimmLedger,
    profiles: list[Profile],
    t_end: float,
) -> list[Path]:
    outdir.mkdir(parents=True, exist_ok=True)
    digest = scenario.hash
    window = scenario.support()
    paths = [
        write_fronts(outdir / "fronts.csv", history, digest),
        write_trajectory(outdir / "trajectory.csv", history, t_end, digest),
        write_ledger(outdir / "ledger.csv", ledger, digest),
        write_snapshots(outdir / "snapshots.csv", profiles, window, digest),
    ]
    if scenario.diagram:
        svg = outdir / "diagram.svg"
        svg.write_text(xt_diagram(history, t_end, window, f"scenario {digest[:12]}"))
        paths.append(svg)
    return paths


def check_finite(values, what: str) -> None:
    for v in values:
        if not math.isfinite(v):
            raise DomainError(f"{what} contains a non-finite value {v!r}")


def cli(argv=None) -> int:
    from .cli import main

    return main(argv)
