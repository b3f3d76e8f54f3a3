from __future__ import annotations

import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avfront.scenario_io import (
    Scenario,
    ScenarioError,
    demo_scenario,
    parse_scenario,
    random_scenario,
    read_csv,
    read_fronts,
    riemann_diagram,
    write_outputs,
    xt_diagram,
)
from avfront.cli import simulate
from avfront.riemann import constrained_riemann
from avfront.signals import PiecewiseConstant as P
from conftest import MODELS


def test_minimal_constant_scenario_parses():
    sc = parse_scenario("rho0_values = [0.3]\ncontrol_values = [0.5]\n")
    assert sc.rho0 == P.constant(0.3) and sc.control == P.constant(0.5)
    assert sc.flux == "greenshields" and sc.nu == 6


def test_alpha_out_of_range_rejected():
    with pytest.raises(ScenarioError, match="alpha"):
        parse_scenario("alpha = 1.5\n")


@pytest.mark.parametrize(
    "text, needle",
    [
        ("nu = 4\nbogus = 3\n", "line 2"),
        ("nu = four\n", "field 'nu'"),
        ("rho0_x = 0.5\n", "bracketed"),
        ("rho0_x = [1.0, 0.0]\nrho0_values = [0.1, 0.2, 0.3]\n", "rho0"),
        ("rho0_values = [1.4]\n", "rho0_values"),
        ("control_values = [2.0]\n", "control_values"),
        ("t_end = 1.0\nsnapshots = [2.0]\n", "snapshots"),
        ("just words\n", "line 1"),
        ("nu = 3\nnu = 4\n", "twice"),
        ("flux = greenshields\nc = 0.5\n", "'c'"),
        ("flux = triangle\n", "flux"),
    ],
)
def test_diagnostics_name_line_or_field(text, needle):
    with pytest.raises(ScenarioError, match=needle):
        parse_scenario(text)


def test_comments_and_blank_lines_are_ignored():
    sc = parse_scenario("# heading\n\nnu = 3  # refinement\n")
    assert sc.nu == 3


floats = st.floats(0.0, 1.0, allow_subnormal=True)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["greenshields", "cubic"]))
def test_round_trip_is_exact(seed, flux):
    sc = random_scenario(seed, flux=flux)
    again = parse_scenario(sc.to_text())
    assert again == sc
    assert again.hash == sc.hash


@given(floats, floats)
def test_round_trip_preserves_bits(a, b):
    sc = Scenario(rho0=P((0.1,), (a, b)), control=P.constant(b))
    assert parse_scenario(sc.to_text()).rho0.values == (a, b)


def test_hash_covers_physics_only():
    sc = demo_scenario()
    assert dataclasses.replace(sc, nu=3, snapshots=(), diagram=True).hash == sc.hash
    assert dataclasses.replace(sc, y0=0.1).hash != sc.hash
    assert dataclasses.replace(sc, alpha=0.7).hash != sc.hash


def test_cubic_parameter_reaches_model():
    sc = parse_scenario("flux = cubic\nc = 0.25\n")
    assert dict(sc.model().params)["c"] == 0.25


def test_outputs_carry_hash_and_units(tmp_path):
    sc = dataclasses.replace(demo_scenario(), diagram=True)
    _, res = simulate(sc)
    paths = write_outputs(tmp_path, sc, res.history, res.ledger, res.profiles, res.t_end)
    assert sorted(p.name for p in paths) == sorted(
        ["fronts.csv", "trajectory.csv", "ledger.csv", "snapshots.csv", "diagram.svg"]
    )
    for p in paths:
        if p.suffix == ".csv":
            first, header = p.read_text().splitlines()[:2]
            assert first.startswith(f"# scenario={sc.hash} units:")
            assert "[" in header
    digest, history = read_fronts(tmp_path / "fronts.csv", res.state.control)
    assert digest == sc.hash
    assert len(history) == len(res.history)
    for a, b in zip(history, res.history):
        assert a.fronts == b.fronts and a.left_state == b.left_state
        assert (a.av.y, a.av.speed, a.av.left, a.av.right) == (b.av.y, b.av.speed, b.av.left, b.av.right)


def test_outputs_are_byte_identical(tmp_path):
    sc = dataclasses.replace(demo_scenario(), diagram=True)
    for sub in ("a", "b"):
        _, res = simulate(sc)
        write_outputs(tmp_path / sub, sc, res.history, res.ledger, res.profiles, res.t_end)
    for name in ("fronts.csv", "trajectory.csv", "ledger.csv", "snapshots.csv", "diagram.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_snapshots_match_profiles(tmp_path):
    sc = demo_scenario()
    _, res = simulate(sc)
    write_outputs(tmp_path, sc, res.history, res.ledger, res.profiles, res.t_end)
    _, rows = read_csv(tmp_path / "snapshots.csv")
    for r in rows:
        t = float(r["t [time]"])
        mid = 0.5 * (float(r["x_start [length]"]) + float(r["x_end [length]"]))
        prof = next(p for p in res.profiles if p.t == t)
        assert prof.density(mid) == float(r["rho [vehicles/length]"])


def test_svg_is_well_formed():
    import xml.etree.ElementTree as ET

    sc = demo_scenario()
    _, res = simulate(sc)
    ET.fromstring(xt_diagram(res.history, sc.t_end, sc.support()))
    ET.fromstring(riemann_diagram(constrained_riemann(MODELS["greenshields"], 0.1, 0.8, 0.2)))
