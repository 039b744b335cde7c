import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hydrate_transport.errors import DomainError, ParameterError
from hydrate_transport.monotone_graph import graph_distance_estar
from hydrate_transport.phase_closure import (PhasePoint, Region, classify_region,
                                             equilibrium_closure, in_d0, psi_from, s_from_psi,
                                             total_u)


def test_total_u_examples():
    assert total_u(1.0, 0.64, 2.0) == pytest.approx(1.64, abs=1e-15)
    assert total_u(0.25, 0.2, 2.0) == pytest.approx(0.6, abs=1e-15)
    assert total_u(0.3, 0.0, 7.0) == 0.3


@pytest.mark.parametrize("u, expected", [(1.64, (1.0, 0.64)), (0.6, (0.6, 0.0)), (0.0, (0.0, 0.0))])
def test_closure_examples(u, expected):
    chi, s = equilibrium_closure(u, 1.0, 2.0)
    assert chi == pytest.approx(expected[0], abs=1e-14)
    assert s == pytest.approx(expected[1], abs=1e-14)


def test_closure_rejects_r_below_chistar():
    with pytest.raises(ParameterError):
        equilibrium_closure(0.5, 2.0, 2.0)


def test_psi_examples():
    assert psi_from(0.25, 0.2, 2.0) == pytest.approx(0.35)
    assert psi_from(0.2, 0.8, 2.0) == pytest.approx(1.44)
    assert psi_from(1.9, 0.0, 2.0) == 0.0
    assert s_from_psi(1.04, 0.6, 2.0) == pytest.approx(1.04 / 1.4)
    assert s_from_psi(0.0, 0.3, 2.0) == 0.0
    assert s_from_psi(-0.025, 0.625, 2.0) == pytest.approx(-0.0181818, abs=1e-6)
    with pytest.raises(DomainError):
        psi_from(2.0, 0.1, 2.0)
    with pytest.raises(DomainError):
        s_from_psi(0.1, 2.5, 2.0)


def test_classify_examples():
    assert classify_region(PhasePoint(0.2, 0.8), 1.0, 2.0) is Region.IN_D0_PLUS
    assert classify_region(PhasePoint(0.25, 0.2), 1.0, 2.0) is Region.IN_D0_MINUS
    assert classify_region(PhasePoint(-0.1, 0.0), 1.0, 2.0) is Region.OUTSIDE_D0
    assert classify_region(PhasePoint(1.0, 0.0), 1.0, 2.0) is Region.ON_BOUNDARY_CURVE
    assert classify_region(PhasePoint(0.625, -0.018), 1.0, 2.0) is Region.OUTSIDE_D0


R_vals = st.floats(0.05, 10)


@given(R_vals, st.floats(0.01, 0.99), st.floats(0, 0.999999))
@settings(max_examples=500)
def test_closure_roundtrip_and_complementarity(R, frac, ufrac):
    chi_star, u = frac * R, ufrac * R
    chi, s = equilibrium_closure(u, chi_star, R)
    assert total_u(chi, s, R) == pytest.approx(u, rel=1e-14, abs=1e-15)
    assert chi <= chi_star and s >= 0
    assert (chi_star - chi) * s == 0.0
    assert graph_distance_estar(chi, s, chi_star) <= 1e-14 * R
    assert 0 <= chi <= chi_star and 0 <= s < 1


@given(R_vals, st.floats(0, 0.999999), st.floats(-0.5, 0.999))
@settings(max_examples=500)
def test_psi_inversion(R, chifrac, s):
    chi = chifrac * R
    assert s_from_psi(psi_from(chi, s, R), chi, R) == pytest.approx(s, rel=1e-14, abs=1e-14)


@given(R_vals, st.floats(0.01, 0.99), st.floats(0, 1), st.floats(0, 0.999999))
@settings(max_examples=300)
def test_physical_states_on_graph_have_u_in_range(R, frac, chifrac, s):
    chi_star = frac * R
    # points of the equilibrium graph inside D0: below the knee with s=0, or at the knee
    for chi, ss in ((chifrac * chi_star, 0.0), (chi_star, s)):
        assert in_d0(chi, ss, R)
        assert 0 <= total_u(chi, ss, R) < R


def test_vectorized_closure():
    u = np.array([0.0, 0.5, 1.0, 1.5])
    chi, s = equilibrium_closure(u, np.array([1.0, 1.0, 1.0, 1.0]), 2.0)
    np.testing.assert_allclose(chi, [0, 0.5, 1, 1])
    np.testing.assert_allclose(s, [0, 0, 0, 0.5])
