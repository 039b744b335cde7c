import math

import numpy as np
import pytest

from hydrate_transport.batch_kinetics import BatchState, KineticRate, kin3_step
from hydrate_transport.diagnostics import l1_norm
from hydrate_transport.errors import CFLError, ConfigError, DegenerateFlowError, ParameterError
from hydrate_transport.flux import ExponentialDepth, FlowField, Linear
from hydrate_transport.phase_closure import equilibrium_closure
from hydrate_transport.transport import (BoundaryConditions, BoxProfile, CustomProfile,
                                         EquilibriumField, Grid1D, KineticField, RunConfig,
                                         ZeroProfile, apply_initial_data, diffusion_solve,
                                         equilibrium_step, kinetic_step, max_stable_tau,
                                         run_simulation, step_profile, time_stepping)
from oracles import cell_averages, dense_diffusion, loglog_slope

CHI = ExponentialDepth(1.0, 0.5)


def test_grid():
    g = Grid1D(-1.0, 3.0, 100)
    assert g.h == pytest.approx(0.04)
    assert g.centers[0] == pytest.approx(-0.98) and np.all(np.diff(g.centers) > 0)
    assert g.edges.size == 101
    with pytest.raises(ParameterError):
        Grid1D(0.0, 1.0, 1)
    with pytest.raises(ParameterError):
        Grid1D(1.0, 0.0, 10)


def test_initial_data():
    g = Grid1D(-1.0, 3.0, 100)
    u = apply_initial_data(step_profile(1.0), g)
    assert np.count_nonzero(np.isclose(u, 1.0, rtol=0, atol=1e-12)) == 25
    assert np.count_nonzero(u) == 25
    box = apply_initial_data(BoxProfile(1.0, -1.0, 0.0), g)
    np.testing.assert_array_equal(box, u)
    half = apply_initial_data(BoxProfile(1.0, -1.0, 0.02), g)
    assert half[25] == pytest.approx(0.5)
    assert not np.any(apply_initial_data(ZeroProfile(), g))
    with pytest.raises(ConfigError):
        apply_initial_data(CustomProfile(np.ones(3)), g)


def test_max_stable_tau():
    g = Grid1D(-1.0, 3.0, 100)
    assert max_stable_tau(g, FlowField(1.0), 0.9) == pytest.approx(0.036)
    assert max_stable_tau(Grid1D(0, 2, 2), FlowField(1.0), 1.0) == 1.0
    assert max_stable_tau(g, FlowField(2.0), 0.9) == pytest.approx(0.018)
    with pytest.raises(DegenerateFlowError):
        max_stable_tau(g, FlowField(0.0))


def _eq_state(U, chi):
    X, S = equilibrium_closure(U, chi, 2.0)
    return EquilibriumField(U, X, S)


def test_constant_state_unchanged():
    g = Grid1D(0.0, 1.0, 20)
    U = np.full(20, 0.3)
    st, fl = equilibrium_step(_eq_state(U, CHI(g.centers)), g, FlowField(1.0), CHI, 0.04,
                              BoundaryConditions("dirichlet", 0.3), 2.0)
    np.testing.assert_allclose(st.U, U, rtol=0, atol=1e-15)
    assert fl.net == pytest.approx(0.0, abs=1e-15)


def test_single_step_hand_evaluated():
    g = Grid1D(0.0, 1.0, 10)
    U = np.zeros(10)
    U[1] = 0.4
    tau = 0.05  # lambda = tau / h = 0.5
    st, _ = equilibrium_step(_eq_state(U, np.ones(10)), g, FlowField(1.0), np.ones(10), tau,
                             BoundaryConditions(), 2.0)
    expected = np.zeros(10)
    expected[1], expected[2] = 0.2, 0.2
    np.testing.assert_allclose(st.U, expected, atol=1e-16)
    assert l1_norm(st.U, g.h) == pytest.approx(0.4 * g.h)


def test_cfl_refused():
    g = Grid1D(0.0, 1.0, 10)
    st = _eq_state(np.zeros(10), np.ones(10))
    with pytest.raises(CFLError):
        equilibrium_step(st, g, FlowField(1.0), np.ones(10), 0.11, BoundaryConditions(), 2.0)
    cfg = RunConfig(grid=g, solubility=CHI, flow=FlowField(1.0), R=2.0, T_final=1.0, tau=0.2)
    with pytest.raises(CFLError):
        run_simulation(cfg)


def test_diffusion_matches_dense_oracle():
    rng = np.random.default_rng(7)
    v = rng.uniform(0, 1, 16)
    for left, lv in (("dirichlet", 0.3), ("noflux", 0.0)):
        got = diffusion_solve(v, 0.1, 0.02, 0.5, left, lv)
        want = dense_diffusion(v, 0.1, 0.02, 0.5, left if left == "dirichlet" else "none", lv)
        np.testing.assert_allclose(got, want, rtol=1e-13, atol=1e-14)


def test_diffusion_basic_properties():
    v = np.zeros(17)
    v[8] = 1.0
    assert np.array_equal(diffusion_solve(v, 0.1, 0.0, 1.0), v)
    c = diffusion_solve(np.full(17, 0.7), 0.1, 0.05, 1.0, "noflux")
    np.testing.assert_allclose(c, 0.7, rtol=1e-14)
    out = diffusion_solve(v, 0.1, 0.05, 1.0, "noflux")
    assert out.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(out, out[::-1], rtol=1e-12)
    assert np.argmax(out) == 8 and np.all(out > 0)
    with pytest.raises(ParameterError):
        diffusion_solve(v, 0.1, -1.0, 1.0)


def test_kinetic_zero_flow_equals_batch():
    g = Grid1D(0.0, 1.0, 8)
    rng = np.random.default_rng(3)
    X = rng.uniform(0, 1.5, 8)
    S = rng.uniform(0, 0.9, 8)
    Psi = S * (2.0 - X)
    chi = np.full(8, 1.0)
    st = KineticField(X, Psi, np.full(8, 1.0), S)
    out, _ = kinetic_step(st, g, FlowField(0.0), chi, 3.0, 0.25, BoundaryConditions(), 2.0)
    rate = KineticRate(3.0, 0.25)
    for j in range(8):
        b, w = kin3_step(BatchState(X[j], S[j]), 1.0, 2.0, rate)
        assert out.X[j] == b.chi and out.S[j] == b.s and out.W[j] == w


def test_kinetic_stiff_limit_matches_equilibrium():
    g = Grid1D(0.0, 2.0, 100)
    chi = CHI(g.centers)
    U = np.where(g.centers < 0.5, 1.2, 0.2)
    eq0 = _eq_state(U, chi)
    bcs = BoundaryConditions("dirichlet", 0.8395)
    tau = 0.9 * g.h
    eq1, _ = equilibrium_step(eq0, g, FlowField(1.0), chi, tau, bcs, 2.0)
    kin0 = KineticField(eq0.X, eq0.Psi, chi, eq0.S)
    kin1, _ = kinetic_step(kin0, g, FlowField(1.0), chi, 1e6, tau, bcs, 2.0)
    assert l1_norm(kin1.U - eq1.U, g.h) < 1e-4
    assert l1_norm(kin1.X - eq1.X, g.h) < 1e-4


def test_time_stepping():
    g = Grid1D(-1.0, 3.0, 100)
    cfg = RunConfig(grid=g, solubility=CHI, flow=FlowField(1.0), R=2.0, T_final=1.0)
    tau, N = time_stepping(cfg)
    assert N == 28 and tau == pytest.approx(1 / 28)
    cfg = RunConfig(grid=g, solubility=CHI, flow=FlowField(1.0), R=2.0, T_final=1.0, K=5)
    tau, N = time_stepping(cfg)
    assert N % 5 == 0 and tau <= 0.036
    cfg = RunConfig(grid=g, solubility=CHI, flow=FlowField(1.0), R=2.0, T_final=1.0, tau=0.01)
    assert time_stepping(cfg) == (pytest.approx(0.01), 100)


def test_validation():
    g = Grid1D(0.0, 2.0, 10)
    base = dict(grid=g, solubility=CHI, flow=FlowField(1.0), R=2.0, T_final=1.0)
    for bad in (dict(model="KIN1"), dict(model="KIN3"), dict(nu=1.5), dict(K=0),
                dict(R=0.5), dict(snapshot_times=(2.0,)), dict(reg_alpha=-1.0)):
        with pytest.raises(ConfigError):
            RunConfig(**{**base, **bad}).validate()


def _ex61(model="EQ", **kw):
    return RunConfig(grid=Grid1D(-1.0, 3.0, 100), solubility=CHI, flow=FlowField(1.0), R=2.0,
                     T_final=1.0, init=BoxProfile(1.0, -1.0, 0.0), model=model, **kw)


def test_run_mass_positivity_and_determinism():
    a = run_simulation(_ex61(snapshot_times=(0.0, 0.5, 1.0)))
    b = run_simulation(_ex61(snapshot_times=(0.0, 0.5, 1.0)))
    assert len(a.snapshots) == 3 and a.snapshots[0].t == 0.0
    assert abs(a.snapshots[1].t - 0.5) <= a.tau / 2
    assert a.diagnostics.mass_defect().max() <= 1e-12 * a.diagnostics.mass[0]
    for s1, s2 in zip(a.snapshots, b.snapshots):
        assert np.array_equal(s1.u, s2.u) and np.array_equal(s1.s, s2.s)
    assert np.all(a.final.u >= 0)
    np.testing.assert_allclose(a.final.chi, np.minimum(a.final.u, CHI(a.final.x)))


def test_zero_data_stays_zero():
    cfg = RunConfig(grid=Grid1D(0, 1, 20), solubility=CHI, flow=FlowField(1.0), R=2.0, T_final=0.5)
    res = run_simulation(cfg)
    assert not np.any(res.final.u) and not np.any(res.final.s)


def test_kinetic_run_invariants():
    res = run_simulation(_ex61("KIN3", k3=100.0))
    d = res.diagnostics.as_arrays()
    assert np.all(np.diff(d["l1_xpsi"]) <= 1e-15)
    assert res.diagnostics.mass_defect().max() <= 1e-12
    assert np.all(res.final.psi >= 0)


def test_diffusion_run_conserves_mass():
    cfg = RunConfig(grid=Grid1D(0, 2, 50), solubility=CHI, flow=FlowField(1.0, d_m=0.05), R=2.0,
                    T_final=0.5, bcs=BoundaryConditions("dirichlet", 0.8395))
    for model, extra in (("EQ", {}), ("KIN3", {"k3": 10.0})):
        res = run_simulation(RunConfig(**{**cfg.__dict__, "model": model, **extra}))
        assert res.diagnostics.mass_defect().max() <= 1e-13


def test_source_and_porosity():
    cfg = RunConfig(grid=Grid1D(0, 1, 20), solubility=CHI, flow=FlowField(0.5, source=0.1),
                    R=2.0, T_final=0.4, phi=0.5)
    res = run_simulation(cfg)
    assert res.tau <= 0.9 * 0.05 / 1.0 + 1e-15
    assert res.diagnostics.mass_defect().max() <= 1e-13


def test_interpolated_solubility_option():
    from hydrate_transport.flux import AffineRampLaw, WarmingScenario
    sc = WarmingScenario(ExponentialDepth(1.0, 0.5), 2.0, law=AffineRampLaw(0.0, -0.2),
                         temp_rise_rate=1.0)
    cfg = RunConfig(grid=Grid1D(0, 2, 40), solubility=sc.field(), flow=FlowField(1.0), R=2.0,
                    T_final=1.0, K=4, init=BoxProfile(1.2, 0.0, 1.0),
                    bcs=BoundaryConditions("dirichlet", 0.5))
    a = run_simulation(cfg)
    b = run_simulation(RunConfig(**{**cfg.__dict__, "interpolate_chi": True}))
    assert a.diagnostics.mass_defect().max() <= 1e-13
    assert b.diagnostics.mass_defect().max() <= 1e-13
    assert not np.array_equal(a.final.u, b.final.u)


def test_upwind_first_order_on_smooth_data():
    # u stays below chi*, so the flux is q u and the exact solution is a translation
    bump = lambda x: 0.5 * np.exp(-40 * (x - 0.6) ** 2)
    hs, errs = [], []
    for M in (100, 200, 400, 800):
        g = Grid1D(0.0, 3.0, M)
        cfg = RunConfig(grid=g, solubility=Linear(1.9, 0.0), flow=FlowField(1.0), R=2.0,
                        T_final=1.0, init=CustomProfile(cell_averages(bump, g.edges, 50)))
        res = run_simulation(cfg)
        exact = cell_averages(lambda x: bump(x - 1.0), g.edges, 50)
        hs.append(g.h)
        errs.append(l1_norm(res.final.u - exact, g.h))
    assert 0.9 <= loglog_slope(hs, errs) <= 1.1
