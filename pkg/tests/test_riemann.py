from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as O
from conftest import MODELS
from avfront.flux_model import DomainError
from avfront.riemann import (
    ALL_CASES,
    RAREFACTION,
    SHOCK,
    UNDERCOMPRESSIVE,
    check_solution,
    classical_riemann,
    constrained_riemann,
    riemann_case,
)

GS = MODELS["greenshields"]
density = st.floats(0.0, 1.0)
speed = st.floats(0.0, 1.0)


def test_classical_shock_speed():
    sol = classical_riemann(GS, 0.4, 0.6)
    (w,) = sol.waves
    assert w.kind == SHOCK and w.speed == pytest.approx(0.0, abs=1e-15)


def test_classical_constant_has_no_waves():
    assert classical_riemann(GS, 0.3, 0.3).waves == ()


def test_classical_rarefaction_span():
    (w,) = classical_riemann(GS, 0.8, 0.2).waves
    assert w.kind == RAREFACTION
    assert (w.speed_lo, w.speed_hi) == pytest.approx((-0.6, 0.6))


def test_out_of_range_state_rejected():
    with pytest.raises(DomainError):
        classical_riemann(GS, -0.1, 0.5)
    with pytest.raises(DomainError):
        constrained_riemann(GS, 0.1, 0.5, 1.2)


def test_worked_constrained_example():
    sol = constrained_riemann(GS, 0.1, 0.4, 0.6)
    assert sol.constrained and sol.av_speed == 0.1
    kinds = [w.kind for w in sol.waves]
    assert kinds == [SHOCK, UNDERCOMPRESSIVE, SHOCK]
    s1, uc, s2 = sol.waves
    assert (s1.left, s1.right, s1.speed) == pytest.approx((0.4, 0.675, -0.075), abs=1e-12)
    assert (uc.left, uc.right, uc.speed) == pytest.approx((0.675, 0.225, 0.1), abs=1e-12)
    assert (s2.left, s2.right, s2.speed) == pytest.approx((0.225, 0.6, 0.175), abs=1e-12)
    assert check_solution(sol) == []


def test_classical_branch_kept_when_flux_below_line():
    sol = constrained_riemann(GS, 0.1, 0.05, 0.95)
    assert not sol.constrained
    (w,) = sol.waves
    assert w.kind == SHOCK and w.speed == pytest.approx(0.0, abs=1e-12)
    assert sol.av_speed == pytest.approx(0.05, abs=1e-12)
    assert riemann_case(GS, 0.1, 0.05, 0.95) == "shock.lt.3"


@pytest.mark.parametrize("u", [0.0, 0.3, 0.9])
@pytest.mark.parametrize("rho", [0.0, 0.1, 0.9, 1.0])
def test_constant_data_outside_band(u, rho):
    geo = GS.geometry(u)
    assert not geo.check_rho < rho < geo.hat_rho
    sol = constrained_riemann(GS, u, rho, rho)
    assert sol.waves == () and not sol.constrained
    assert sol.av_speed == pytest.approx(min(u, O.v(rho)), abs=1e-12)


@pytest.mark.parametrize("u", [0.05, 0.3, 0.9])
def test_fan_straddling_vehicle_is_constrained(u):
    # the fan trace at x = u t maximises f(r) - u r, so it always exceeds the support line
    sol = constrained_riemann(GS, u, 1.0, 0.0)
    assert sol.constrained and sol.av_speed == u
    assert riemann_case(GS, u, 1.0, 0.0).startswith("rare.fan.")
    assert check_solution(sol) == []


@settings(max_examples=300, deadline=None)
@given(speed, density, density)
def test_matches_closed_form_oracle(u, rl, rr):
    sol = constrained_riemann(GS, u, rl, rr)
    # offset keeps sample rays off wave speeds, where one-ulp differences flip sides
    for xi in np.linspace(-1.05, 1.05, 43) + 1e-3 * np.sqrt(2.0):
        assert sol(xi) == pytest.approx(O.constrained(u, rl, rr, xi), abs=1e-9)
    assert sol.av_speed == pytest.approx(O.constrained_speed(u, rl, rr), abs=1e-9)


@settings(max_examples=300, deadline=None)
@given(speed, density, density)
def test_solutions_are_admissible(u, rl, rr):
    for model in MODELS.values():
        sol = constrained_riemann(model, u, rl, rr)
        assert check_solution(sol) == []
        assert riemann_case(model, u, rl, rr) in ALL_CASES + ("constant",)


@settings(max_examples=100, deadline=None)
@given(speed, density, density, st.integers(-4, 4), st.floats(-2.0, 2.0, allow_subnormal=False))
def test_self_similarity(u, rl, rr, k, x):
    # power-of-two scaling keeps x / t bit-identical, so equality is exact
    lam = 2.0**k
    sol = constrained_riemann(GS, u, rl, rr)
    assert sol.density(1.0, x) == sol.density(lam, lam * x)


def _l1(a, b, xs):
    return float(np.mean(np.abs([a(x) - b(x) for x in xs])) * (xs[-1] - xs[0]))


@settings(max_examples=100, deadline=None)
@given(speed, st.floats(0.0, 0.99), st.floats(0.0, 0.99), st.floats(1e-6, 1e-2))
def test_l1_continuity_in_data(u, rl, rr, delta):
    xs = np.linspace(-1.2, 1.2, 4801)
    a = constrained_riemann(GS, u, rl, rr)
    b = constrained_riemann(GS, u, rl + delta, rr + delta)
    if a.constrained != b.constrained:
        return  # switching branch is continuous only in the limit; sampled elsewhere
    # L1 contraction on the domain of dependence [-1.2 - Lip, 1.2 + Lip] of the
    # window: ||a - b|| <= 4.4 delta at t = 1; sampling adds one cell per jump
    assert _l1(a, b, xs) <= 4.4 * delta + 4 * (xs[1] - xs[0])


def test_lattice_hits_every_case():
    grid = np.linspace(0.0, 1.0, 50)
    seen = set()
    for u in grid:
        for rl in grid:
            for rr in grid:
                seen.add(riemann_case(GS, float(u), float(rl), float(rr)))
    assert set(ALL_CASES) <= seen


def test_check_solution_flags_bad_wave():
    from dataclasses import replace

    sol = constrained_riemann(GS, 0.1, 0.4, 0.6)
    s1, uc, s2 = sol.waves
    bad = replace(sol, waves=(replace(s1, speed_lo=s1.speed_lo + 1e-3, speed_hi=s1.speed_hi + 1e-3), uc, s2))
    assert any("Rankine" in p for p in check_solution(bad))
    bad = replace(sol, waves=(s1, replace(uc, left=uc.left + 1e-3), s2))
    assert any("undercompressive" in p for p in check_solution(bad))
