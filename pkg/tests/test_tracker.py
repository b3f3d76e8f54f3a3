from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import MODELS, grids_for
from avfront import tracker as T
from avfront.flux_model import DomainError
from avfront.signals import PiecewiseConstant as P

GS = MODELS["greenshields"]


def start(rho0, u, y0=0.0, nu=6, **kw):
    kw.setdefault("record_history", True)
    return T.init(GS, grids_for("greenshields", nu), rho0, u, y0, **kw)


def grid(nu=6):
    return grids_for("greenshields", nu).density_grid


def test_constant_state_without_constraint():
    st = start(P.constant(0.1), P.constant(0.3))
    assert st.fronts() == []
    av = st.av_state()
    assert av.mode == T.MODE_FREE
    rho = float(st.rho0.values[0])
    assert av.speed == pytest.approx(min(float(st.control.values[0]), 1.0 - rho))
    assert st.next_event() == (math.inf, "none")


def test_worked_riemann_datum_gives_three_fronts():
    st = start(P((0.0,), (0.4, 0.6)), P.constant(0.1))
    fr = st.fronts()
    assert [f.kind for f in fr] == [T.SHOCK, T.UNDERCOMPRESSIVE, T.SHOCK]
    assert st.mode() == T.MODE_UC
    # diverging fronts: no event ever
    assert st.next_event()[0] == math.inf


def test_downward_jump_splits_into_fronts_of_grid_strength():
    g = grid(6)
    top = np.flatnonzero(g > 0.8)
    a, b = float(g[top[6]]), float(g[top[3]])
    st = start(P((0.0,), (a, b)), P.constant(1.0), y0=50.0)
    eps = st.grids.eps_rho
    fans = [f for f in st.fronts() if f.kind == T.RAREFACTION]
    assert len(fans) >= 3
    assert all(0.0 < f.left - f.right <= eps + 1e-15 for f in fans)


def test_two_approaching_shocks_collide_at_gap_over_speed_difference():
    g = grid(6)
    a, b, c = float(g[10]), float(g[40]), float(g[70])
    st = start(P((0.0, 0.5), (a, b, c)), P.constant(1.0), y0=10.0)
    s1, s2 = (f.speed for f in st.fronts() if f.kind == T.SHOCK)
    t, kind = st.next_event()
    assert kind == "collision"
    assert t == pytest.approx(0.5 / (s1 - s2), rel=1e-12)


def test_control_jump_on_free_vehicle_lowers_upsilon_by_control_variation():
    st = start(P.constant(0.1), P((1.0,), (0.2, 0.5)), nu=5)
    u0, u1 = st.control.values
    assert st.mode() == T.MODE_FREE
    rec = st.apply_event()
    assert rec.kind == "control" and st.mode() == T.MODE_FREE
    assert rec.delta == pytest.approx(-(6.0 / GS.beta) * abs(u1 - u0), abs=1e-12)
    assert st.fronts() == []


def test_control_jump_into_band_creates_undercompressive_shock():
    st = start(P.constant(0.3), P((1.0,), (0.9, 0.2)), nu=5)
    assert st.mode() == T.MODE_FREE
    st.apply_event()
    assert st.mode() == T.MODE_UC
    kinds = [f.kind for f in st.fronts()]
    assert kinds == [T.SHOCK, T.UNDERCOMPRESSIVE, T.SHOCK]


def test_vehicle_on_vacuum_shock_stays_classical_after_control_jump():
    st = start(P((0.0,), (0.0, 0.6)), P((1.0,), (0.9, 0.8)), nu=5)
    assert st.mode() == T.MODE_CLASSICAL
    st.apply_event()
    assert st.mode() == T.MODE_CLASSICAL


@pytest.mark.parametrize("u_after", [0.05, 0.3, 0.6, 0.95])
def test_control_jump_from_undercompressive_state(u_after):
    st = start(P((0.0,), (0.4, 0.6)), P((0.5,), (0.1, u_after)), nu=6)
    res = T.run(st, 3.0)
    assert not res.ledger.violations
    rep = T.validate_solution(st.history, GS, st.grids, st.control, res.ledger.upsilon0, 3.0, samples=200)
    assert rep.ok, rep.violations[:3]


def test_shock_meets_rarefaction_front():
    g = grid(6)
    lo = np.flatnonzero(g > 0.8)
    a, c = float(g[lo[0]]), float(g[lo[4]])
    b = float(g[lo[3]])
    # shock a|c runs into the single rarefaction front c|b
    st = start(P((0.0, 0.2), (a, c, b)), P.constant(1.0), y0=-20.0)
    assert [f.kind for f in st.fronts()] == [T.SHOCK, T.RAREFACTION]
    rec = st.apply_event()
    assert rec.kind == "collision"
    assert rec.delta == pytest.approx(-2.0 * (c - b), abs=1e-12)
    assert rec.delta <= -st.grids.delta_rho + 1e-12
    (f,) = st.fronts()
    assert (f.left, f.right) == (a, b)


def test_worked_example_positions_at_unit_time():
    st = start(P((0.0,), (0.4, 0.6)), P.constant(0.1), nu=8)
    res = T.run(st, 1.0)
    xs = [f.x + f.speed * (1.0 - st.history[-1].t0) for f in st.history[-1].fronts]
    tol = 2 * st.grids.eps_rho + st.grids.eps_u
    assert xs == pytest.approx([-0.075, 0.1, 0.175], abs=tol)
    dens = T.sample_density(res.history, 1.0, [0.0, 0.15])
    assert dens[0] == pytest.approx(0.675, abs=tol)
    assert dens[1] == pytest.approx(0.225, abs=tol)


def test_pure_lwr_conserves_mass():
    rng = np.random.default_rng(3)
    xs = np.sort(rng.uniform(-1, 1, 12))
    vals = rng.uniform(0, 1, 13)
    st = start(P(tuple(xs), tuple(vals)), P.constant(1.0), y0=-50.0, nu=5)
    T.run(st, 2.0)
    q = st.rho0
    lo, hi = -5.0, 5.0
    m0 = q.integral(lo, hi)
    flux_in = GS.f(q.values[0]) - GS.f(q.values[-1])
    ends = [c.t0 for c in st.history[1:]] + [2.0]
    for cfg, t1 in zip(st.history, ends):
        for t in (cfg.t0, 0.5 * (cfg.t0 + t1)):
            m = cfg.profile(t).integral(lo, hi)
            assert m == pytest.approx(m0 + t * flux_in, abs=1e-12)


def test_jam_does_not_move():
    st = start(P.constant(1.0), P((0.5,), (0.3, 0.9)))
    res = T.run(st, 2.0)
    assert st.av_state().speed == 0.0
    assert T.av_trajectory(res.history, 2.0)[-1][1] == 0.0


def test_sample_density_constant_and_range():
    st = start(P.constant(0.3), P.constant(0.5))
    res = T.run(st, 1.0)
    q = float(st.rho0.values[0])
    assert np.all(T.sample_density(res.history, 0.7, np.linspace(-3, 3, 7)) == q)
    with pytest.raises(DomainError):
        T.sample_density(res.history, 1.5, [0.0], t_end=1.0)


def test_trajectory_slopes_match_recorded_speeds():
    st = start(P((-0.5, 0.0, 0.4), (0.2, 0.5, 0.7, 0.1)), P((0.3, 1.0), (0.2, 0.6, 0.1)))
    res = T.run(st, 2.0)
    pts = T.av_trajectory(res.history, 2.0)
    starts = [c.t0 for c in res.history]
    for (t0, y0), (t1, y1) in zip(pts, pts[1:]):
        i = int(np.searchsorted(starts, t0, side="right")) - 1
        assert (y1 - y0) / (t1 - t0) == pytest.approx(res.history[i].av.speed, abs=1e-9)


def test_run_requires_future_end_time():
    st = start(P.constant(0.3), P.constant(0.5))
    with pytest.raises(DomainError):
        T.run(st, 0.0)


def test_event_cap_turns_runaway_into_error():
    st = start(P((0.0, 0.5, 1.0), (0.1, 0.5, 0.2, 0.9)), P((0.5,), (0.3, 0.6)), event_cap=1)
    with pytest.raises(T.EventCapExceeded):
        T.run(st, 5.0)


def test_ledger_rejects_increase_and_stall_with_more_waves():
    led = T.GlimmLedger(R=1.0, beta=2.0, quantum=0.01)
    led.start(0.0, tv=1.0, gamma=0.0, tv_u=0.0, waves=3)
    led.record(0.1, "collision", 0.0, 1.0, 0.0, 0.0, 3)  # unchanged, same count
    led.record(0.2, "collision", 0.0, 0.98, 0.0, 0.0, 5)  # quantised decrease
    with pytest.raises(T.GlimmViolation):
        led.record(0.3, "collision", 0.0, 0.98, 0.0, 0.0, 6)
    soft = T.GlimmLedger(R=1.0, beta=2.0, quantum=0.01, strict=False)
    soft.start(0.0, 1.0, 0.0, 0.0, 1)
    soft.record(0.1, "collision", 0.0, 1.005, 0.0, 0.0, 1)
    assert len(soft.violations) == 1


def test_initial_upsilon_bound():
    rho0 = P((-1.0, 0.0, 1.0), (0.2, 0.7, 0.3, 0.5))
    u = P((1.0, 2.0), (0.2, 0.8, 0.4))
    st = start(rho0, u, y0=0.5)
    ups0 = st.ledger.upsilon0
    bound = st.rho0.total_variation + 2 * GS.R + (6 / GS.beta) * st.control.total_variation
    assert st.rho0.total_variation <= ups0 <= bound + 1e-12


def test_runs_are_deterministic():
    def go():
        st = start(P((-0.3, 0.2), (0.6, 0.2, 0.8)), P((0.4,), (0.3, 0.7)))
        T.run(st, 2.0)
        return st.history

    assert go() == go()
