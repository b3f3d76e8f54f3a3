"""Command-line interface: ``avfront {solve,riemann,grid,validate,compare,sweep}``.

Output files go to ``--out`` or, when absent, to ``$AVFRONT_OUT`` (default
``./avfront_out``).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import tracker
from .flux_model import FLUX_FAMILIES, DomainError, make_flux
from .mesh import build_grids, quantize_control
from .reference_fv import fv_run, l1_compare
from .riemann import riemann_case, check_solution, constrained_riemann
from .scenario_io import (
    Scenario,
    ScenarioError,
    demo_scenario,
    load_scenario,
    random_scenario,
    read_csv,
    read_fronts,
    riemann_diagram,
    write_outputs,
)
from .signals import Profile

log = logging.getLogger("avfront")

DEFAULT_LADDER = "4:2e-3,6:1e-3,8:5e-4"


def _outdir(args) -> Path:
    out = Path(args.out or os.environ.get("AVFRONT_OUT", "avfront_out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _scenario(args) -> Scenario:
    if args.demo or args.scenario is None:
        return demo_scenario()
    return load_scenario(args.scenario)


def _model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--flux", choices=sorted(FLUX_FAMILIES), default="greenshields")
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--V", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.75)
    p.add_argument("--c", type=float, default=None, help="cubic family parameter")


def _model(args):
    extra = {"c": args.c} if args.c is not None else {}
    return make_flux(args.flux, R=args.R, V=args.V, alpha=args.alpha, **extra)


def simulate(scenario: Scenario, nu: int | None = None, record_history: bool = True):
    """Run the tracker on a scenario; returns ``(state, result)``."""
    model = scenario.model()
    grids = build_grids(model, nu or scenario.nu)
    state = tracker.init(model, grids, scenario.rho0, scenario.control, scenario.y0,
                         record_history=record_history)  # fmt: skip
    result = tracker.run(state, scenario.t_end, scenario.snapshots, scenario.hash)
    return state, result


def cmd_solve(args) -> int:
    sc = _scenario(args)
    t0 = time.perf_counter()
    state, res = simulate(sc, args.nu)
    elapsed = time.perf_counter() - t0
    out = _outdir(args)
    paths = write_outputs(out, sc, res.history, res.ledger, res.profiles, res.t_end)
    print(f"scenario {sc.hash[:12]}: {state.events} events, {len(state.fronts())} fronts "
          f"at t={sc.t_end!r}, {elapsed:.3f} s")  # fmt: skip
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_riemann(args) -> int:
    model = _model(args)
    sol = constrained_riemann(model, args.u, args.rho_l, args.rho_r)
    doc = sol.as_dict()
    doc["case"] = riemann_case(model, args.u, args.rho_l, args.rho_r)
    doc["problems"] = check_solution(sol)
    print(json.dumps(doc, indent=2))
    if args.svg:
        path = _outdir(args) / "riemann.svg"
        path.write_text(riemann_diagram(sol))
        print(f"wrote {path}", file=sys.stderr)
    return 0 if not doc["problems"] else 1


def cmd_grid(args) -> int:
    model = _model(args)
    grids = build_grids(model, args.nu)
    path = _outdir(args) / f"grid_nu{args.nu}.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "index", "value"])
        for i, r in enumerate(grids.density_grid):
            w.writerow(["density", i, repr(float(r))])
        for k, u in enumerate(grids.speed_grid):
            w.writerow(["speed", k, repr(float(u))])
    print(json.dumps(grids.summary(), indent=2))
    for msg in grids.flagged:
        print(f"flagged: {msg}", file=sys.stderr)
    print(f"wrote {path}", file=sys.stderr)
    return 0


def cmd_validate(args) -> int:
    sc = load_scenario(args.scenario) if args.scenario else demo_scenario()
    run = Path(args.run)
    model = sc.model()
    grids = build_grids(model, args.nu or sc.nu)
    control = quantize_control(grids, sc.control)
    problems = []
    try:
        digest, history = read_fronts(run / "fronts.csv", control)
        ledger_hash, ledger_rows = read_csv(run / "ledger.csv")
    except (OSError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for name, h in (("fronts.csv", digest), ("ledger.csv", ledger_hash)):
        if h != sc.hash:
            problems.append(f"{name}: scenario hash {h[:12]} does not match {sc.hash[:12]}")
    if not history:
        problems.append("fronts.csv: no configurations")
    else:
        ups = [float(r["Upsilon"]) for r in ledger_rows]
        for a, b in zip(ups, ups[1:]):
            if b > a + tracker.GLIMM_TOL:
                problems.append(f"ledger.csv: Upsilon increases from {a!r} to {b!r}")
        rep = tracker.validate_solution(history, model, grids, control,
                                        upsilon0=ups[0] if ups else None,
                                        t_end=sc.t_end, samples=args.samples)  # fmt: skip
        problems.extend(rep.violations)
    for p in problems:
        print(p)
    print(f"{'OK' if not problems else 'FAILED'}: {len(history)} configurations, "
          f"{len(problems)} problems")  # fmt: skip
    return 0 if not problems else 1


def parse_ladder(text: str) -> list[tuple[int, float]]:
    out = []
    for item in text.split(","):
        nu, dx = item.split(":")
        out.append((int(nu), float(dx)))
    return out


def compare_ladder(
    scenario: Scenario, ladder: list[tuple[int, float]], t: float | None = None, cfl: float = 0.9
) -> list[tuple[int, float, float]]:
    """``L1`` distance between tracker and Godunov along a refinement ladder."""
    t = scenario.t_end if t is None else t
    lo, hi = scenario.support()
    model = scenario.model()
    rows = []
    for nu, dx in ladder:
        grids = build_grids(model, nu)
        state = tracker.init(model, grids, scenario.rho0, scenario.control, scenario.y0)
        res = tracker.run(state, t, [t], scenario.hash)
        front = Profile(t, res.profiles[0].density, scenario.hash, lo, hi)
        _, fv = fv_run(model, scenario.rho0, scenario.control, scenario.y0, t, dx,
                       (lo - 0.5, hi + 0.5), cfl, [t], scenario.hash)  # fmt: skip
        rows.append((nu, dx, l1_compare(front, fv[0])))
    return rows


def cmd_compare(args) -> int:
    sc = _scenario(args)
    rows = compare_ladder(sc, parse_ladder(args.ladder), args.time, args.cfl)
    print(f"{'nu':>4} {'dx':>10} {'L1':>12}")
    for nu, dx, d in rows:
        print(f"{nu:>4} {dx:>10.3g} {d:>12.6g}")
    monotone = all(b[2] < a[2] for a, b in zip(rows, rows[1:]))
    print(f"monotone: {'yes' if monotone else 'no'}")
    return 0 if monotone else 1


def _sweep_one(job: tuple[int, int, str, float, tuple[float, ...]]) -> dict:
    seed, nu, flux, t_end, dxs = job
    sc = random_scenario(seed, nu=nu, flux=flux, t_end=t_end)
    t0 = time.perf_counter()
    row = {"seed": seed, "nu": nu, "flux": flux, "hash": sc.hash[:12]}
    try:
        state, res = simulate(sc)
        rep = tracker.validate_solution(res.history, state.model, state.grids, state.control,
                                        upsilon0=res.ledger.upsilon0, t_end=sc.t_end)  # fmt: skip
        row.update(events=state.events, violations=len(rep.violations), error="")
        for dx in dxs:
            (_, _, d), = compare_ladder(sc, [(nu, dx)])
            row[f"L1_dx={dx:g}"] = d
    except Exception as exc:  # one bad scenario must not stop the sweep
        row.update(events=-1, violations=-1, error=f"{type(exc).__name__}: {exc}")
        row.update({f"L1_dx={dx:g}": float("nan") for dx in dxs})
    row["seconds"] = round(time.perf_counter() - t0, 4)
    return row


def cmd_sweep(args) -> int:
    dxs = tuple(args.dx or ())
    jobs = [(seed, nu, args.flux, args.t_end, dxs)
            for seed in range(args.first_seed, args.first_seed + args.seeds)
            for nu in args.nu]  # fmt: skip
    if args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    path = _outdir(args) / "sweep.csv"
    with path.open("w", newline="") as fh:
        fields = list(dict.fromkeys(k for r in rows for k in r))
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        w.writerows(rows)
    bad = [r for r in rows if r["violations"] != 0]
    print(f"{len(rows)} runs, {len(bad)} with problems; wrote {path}")
    for r in bad:
        print(f"seed={r['seed']} nu={r['nu']}: {r['error'] or str(r['violations']) + ' violations'}")
    return 0 if not bad else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="avfront", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_out(p):
        p.add_argument("--out", default=None, help="output directory (default $AVFRONT_OUT)")
        return p

    def with_scenario(p):
        p.add_argument("scenario", nargs="?", default=None, help="scenario file")
        p.add_argument("--demo", action="store_true", help="use the bundled demo scenario")
        return p

    p = with_scenario(with_out(sub.add_parser("solve", help="run the front tracker")))
    p.add_argument("--nu", type=int, default=None, help="override the refinement index")
    p.set_defaults(func=cmd_solve)

    p = with_out(sub.add_parser("riemann", help="solve one constrained Riemann problem"))
    _model_args(p)
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--rho-l", type=float, required=True)
    p.add_argument("--rho-r", type=float, required=True)
    p.add_argument("--svg", action="store_true", help="also write riemann.svg")
    p.set_defaults(func=cmd_riemann)

    p = with_out(sub.add_parser("grid", help="write the density and speed grids"))
    _model_args(p)
    p.add_argument("--nu", type=int, default=4)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("validate", help="re-check a stored run")
    p.add_argument("run", help="directory written by 'solve'")
    p.add_argument("scenario", nargs="?", default=None, help="scenario file (default: demo)")
    p.add_argument("--nu", type=int, default=None)
    p.add_argument("--samples", type=int, default=100)
    p.set_defaults(func=cmd_validate)

    p = with_scenario(sub.add_parser("compare", help="tracker versus Godunov over refinements"))
    p.add_argument("--ladder", default=DEFAULT_LADDER, help="comma separated nu:dx pairs")
    p.add_argument("--time", type=float, default=None)
    p.add_argument("--cfl", type=float, default=0.9)
    p.set_defaults(func=cmd_compare)

    p = with_out(sub.add_parser("sweep", help="refinement study over random scenarios"))
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--first-seed", type=int, default=0)
    p.add_argument("--nu", type=int, nargs="+", default=[4])
    p.add_argument("--flux", choices=sorted(FLUX_FAMILIES), default="greenshields")
    p.add_argument("--t-end", type=float, default=5.0)
    p.add_argument("--dx", type=float, nargs="*", default=None,
                   help="also compare with Godunov at these cell widths")
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ScenarioError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
