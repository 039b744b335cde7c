import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from hydrate_transport.batch_kinetics import (BatchState, KineticRate, batch_trajectory,
                                              equivalent_rate_k1, kin1_root, kin1_step, kin2_step,
                                              kin3_local_solve, kin3_step, mass_drift,
                                              q_discrepancy, trajectory_q)
from hydrate_transport.errors import PreconditionError
from hydrate_transport.monotone_graph import CornerGraph
from hydrate_transport.phase_closure import equilibrium_closure, total_u
from oracles import kin1_root_bisection

UNIT = KineticRate(1.0, 1.0)


def test_rate_derived_values():
    r = KineticRate(4.0, 0.5)
    assert r.k_bar == 2.0 and r.k_tilde == pytest.approx(2 / 3)
    with pytest.raises(PreconditionError):
        KineticRate(0.0, 1.0)
    with pytest.raises(PreconditionError):
        KineticRate(1.0, -1.0)


def test_kin1_two_steps_unsaturated():
    s1 = kin1_step(BatchState(0.25, 0.2), 1.0, 2.0, UNIT)
    s2 = kin1_step(s1, 1.0, 2.0, UNIT)
    assert s2.chi == pytest.approx(0.7536, abs=5e-5)
    assert s2.s == pytest.approx(-0.1232, abs=5e-5)


def test_kin1_fixed_point_and_oracle():
    out = kin1_step(BatchState(1.0, 0.3), 1.0, 2.0, UNIT)
    assert out.chi == pytest.approx(1.0, abs=1e-15) and out.s == pytest.approx(0.3, abs=1e-15)
    out = kin1_step(BatchState(0.2, 0.8), 1.0, 2.0, UNIT)
    # chi rises toward chi*, so the saturation falls while u stays at 1.64
    assert 0.2 < out.chi < 1.0 and out.s < 0.8
    assert out.s == pytest.approx(0.8 + (out.chi - 1.0) / 2.0, abs=1e-14)
    assert out.chi == pytest.approx(kin1_root_bisection(0.2, 0.8, 1.0, 2.0, 1.0), abs=1e-13)


def test_kin2_examples():
    out = kin2_step(BatchState(0.25, 0.2), 1.0, 2.0, UNIT)
    assert out.chi == pytest.approx(0.625, abs=1e-12)
    assert out.s == pytest.approx(-0.025 / 1.375, abs=1e-12)
    out = kin2_step(BatchState(0.2, 0.8), 1.0, 2.0, UNIT)
    assert out.chi == pytest.approx(0.6) and out.psi(2.0) == pytest.approx(1.04)
    assert out.s == pytest.approx(1.04 / 1.4)
    same = kin2_step(BatchState(1.0, 0.4), 1.0, 2.0, UNIT)
    assert (same.chi, same.s) == (1.0, 0.4)


def test_kin3_examples():
    out, w = kin3_step(BatchState(0.25, 0.2), 1.0, 2.0, UNIT)
    assert out.chi == pytest.approx(0.6, abs=1e-15) and out.s == 0.0
    eq = equilibrium_closure(0.6, 1.0, 2.0)
    assert out.chi == pytest.approx(eq.chi) and out.s == eq.s
    assert CornerGraph(1.0).contains(out.psi(2.0), w)
    out3, _ = kin3_step(BatchState(0.2, 0.8), 1.0, 2.0, UNIT)
    out2 = kin2_step(BatchState(0.2, 0.8), 1.0, 2.0, UNIT)
    assert (out3.chi, out3.s) == (out2.chi, out2.s)
    fixed, w = kin3_step(BatchState(1.0, 0.5), 1.0, 2.0, UNIT)
    assert (fixed.chi, fixed.s, w) == (1.0, 0.5, 1.0)


def test_equivalent_rate_examples():
    prev = BatchState(0.2, 0.8)
    k1 = equivalent_rate_k1(UNIT, prev, 1.0, 2.0)
    a = kin1_step(prev, 1.0, 2.0, KineticRate(k1, 1.0))
    assert a.chi == pytest.approx(0.6, abs=1e-12)
    assert equivalent_rate_k1(UNIT, BatchState(0.2, 1 - 1e-12), 1.0, 2.0) < 1e-10
    prev = BatchState(1.0, 0.3)
    k1 = equivalent_rate_k1(UNIT, prev, 1.0, 2.0)
    a = kin1_step(prev, 1.0, 2.0, KineticRate(k1, 1.0))
    b = kin2_step(prev, 1.0, 2.0, UNIT)
    assert a.chi == pytest.approx(b.chi, abs=1e-12) and a.s == pytest.approx(b.s, abs=1e-12)


def test_q_discrepancy_examples():
    assert q_discrepancy(BatchState(1.0, 0.0), 1.0, 5.0) == 0.0
    assert q_discrepancy(BatchState(0.625, 0.0), 1.0, 1.0) == pytest.approx(-0.375)
    assert q_discrepancy(BatchState(1.4, 0.0), 1.0, 10.0) == pytest.approx(4.0)


def test_trajectories():
    tr = batch_trajectory("KIN3", BatchState(0.25, 0.2), 1.0, 2.0, UNIT, 10)
    assert len(tr) == 11
    for st_ in tr[1:]:
        assert st_.chi == pytest.approx(0.6) and st_.s == 0.0
    assert batch_trajectory("KIN2", BatchState(0.3, 0.1), 1.0, 2.0, UNIT, 0) == [BatchState(0.3, 0.1)]
    for model in ("KIN1", "KIN2", "KIN3"):
        for init in (BatchState(0.2, 0.8), BatchState(1.4, 0.4)):
            tr = batch_trajectory(model, init, 1.0, 2.0, UNIT, 100)
            assert abs(tr[-1].chi - 1.0) < 1e-6 and abs(tr[-1].s - 0.64) < 1e-6
            assert mass_drift(tr, 2.0) <= 1e-12
    q = trajectory_q("KIN3", batch_trajectory("KIN3", BatchState(0.25, 0.2), 1.0, 2.0, UNIT, 3),
                     1.0, 1.0)
    assert q[-1] == 0.0


def test_preconditions():
    with pytest.raises(PreconditionError):
        batch_trajectory("KIN1", BatchState(-0.1, 0.0), 1.0, 2.0, UNIT, 3)
    with pytest.raises(PreconditionError):
        kin2_step(BatchState(0.5, 0.1), 2.0, 2.0, UNIT)
    with pytest.raises(PreconditionError):
        kin1_step(BatchState(2.0, 0.1), 1.0, 2.0, UNIT)


# --- properties over random physical states -------------------------------------------

@st.composite
def setups(draw):
    R = draw(st.floats(0.1, 5))
    chi_star = draw(st.floats(0.02, 0.98)) * R
    chi = draw(st.floats(0, 0.999)) * R
    s = draw(st.floats(0, 0.999))
    k = draw(st.floats(1e-3, 1e3))
    tau = draw(st.floats(1e-3, 10))
    return R, chi_star, BatchState(chi, s), KineticRate(k, tau)


def _step(model, prev, c, R, rate):
    if model == "KIN3":
        return kin3_step(prev, c, R, rate)[0]
    return {"KIN1": kin1_step, "KIN2": kin2_step}[model](prev, c, R, rate)


@pytest.mark.parametrize("model", ["KIN1", "KIN2", "KIN3"])
@given(setups())
@settings(max_examples=400)
def test_mass_conservation_and_bounds(model, setup):
    R, c, prev, rate = setup
    out = _step(model, prev, c, R, rate)
    u0 = prev.u(R)
    assert total_u(out.chi, out.s, R) == pytest.approx(u0, rel=1e-12, abs=1e-12 * R)
    assert 0 <= out.chi < R and out.s < 1
    if model == "KIN3" or u0 >= c:
        assert out.s >= -1e-12


@given(setups())
@settings(max_examples=400)
def test_kin1_root_matches_bisection(setup):
    R, c, prev, rate = setup
    x = kin1_root(prev.chi, prev.s, c, R, rate.k_bar)
    assert 0 <= x < R
    assert x == pytest.approx(kin1_root_bisection(prev.chi, prev.s, c, R, rate.k_bar),
                              abs=1e-12 * max(1.0, R))


@given(setups())
@settings(max_examples=400)
def test_kin1_ordering(setup):
    R, c, prev, rate = setup
    out = kin1_step(prev, c, R, rate)
    if prev.chi < c:
        assert prev.chi <= out.chi <= c
    elif prev.chi > c:
        assert c <= out.chi <= prev.chi


@pytest.mark.parametrize("model", ["KIN1", "KIN2", "KIN3"])
@given(setups())
@settings(max_examples=400)
def test_q_decays_strictly(model, setup):
    R, c, prev, rate = setup
    tr = batch_trajectory(model, prev, c, R, rate, 1)
    q = trajectory_q(model, tr, c, rate.k)
    if q[0] != 0:
        assert abs(q[1]) < abs(q[0])


@given(setups())
@settings(max_examples=400)
def test_kin2_equals_kin3_when_saturated(setup):
    R, c, prev, rate = setup
    a = kin2_step(prev, c, R, rate)
    b = kin3_step(prev, c, R, rate)[0]
    if prev.u(R) >= c:
        assert (a.chi, a.s) == (b.chi, b.s)
    elif a.s < 0:
        assert (a.chi, a.s) != (b.chi, b.s)


@given(setups())
@settings(max_examples=400)
def test_equivalent_rate_one_step(setup):
    R, c, prev, rate = setup
    k1 = equivalent_rate_k1(rate, prev, c, R)
    assume(k1 > 0)
    a = kin1_step(prev, c, R, KineticRate(k1, rate.tau))
    b = kin2_step(prev, c, R, rate)
    assert a.chi == pytest.approx(b.chi, abs=1e-12 * max(1, R))
    # s = psi / (R - X) amplifies rounding in X by R / (R - X)
    assert a.s == pytest.approx(b.s, abs=1e-12 * max(1.0, abs(b.s), R / (R - b.chi)))


floats = st.floats(-3, 3)


@given(floats, floats, floats, floats, st.floats(0.01, 2), st.floats(1e-3, 1e3))
@settings(max_examples=600)
def test_local_solve_comparison(F, G, F2, G2, c, k_bar):
    X, P, _ = kin3_local_solve(F, abs(G), c, k_bar)
    X2, P2, _ = kin3_local_solve(F2, abs(G2), c, k_bar)
    lhs = abs(X - X2) + abs(P - P2)
    assert lhs <= abs(F - F2) + abs(abs(G) - abs(G2)) + 1e-12


@given(floats, st.floats(0, 3), st.floats(0.01, 2), st.floats(1e-3, 1e3))
@settings(max_examples=400)
def test_local_solve_equations(F, G, c, k_bar):
    X, P, W = (float(v) for v in kin3_local_solve(F, G, c, k_bar))
    assert P >= 0
    assert X - k_bar * (W - X) == pytest.approx(F, abs=1e-10 * (1 + k_bar))
    assert P + k_bar * (W - X) == pytest.approx(G, abs=1e-10 * (1 + k_bar))
    assert CornerGraph(c).contains(P, W, tol=1e-9 * (1 + abs(W)))
