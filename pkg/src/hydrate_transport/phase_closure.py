"""Phase variables and the equilibrium closure.

Notation: ``u`` total methane, ``chi`` dissolved mass fraction, ``s`` hydrate
saturation, ``psi = s * (R - chi)`` methane stored in hydrate beyond
saturation, so that ``u = chi + psi``.
"""

from __future__ import annotations

import enum
from typing import NamedTuple

import numpy as np

from .errors import DomainError, ParameterError
from .monotone_graph import KNEE_TOL, CornerGraph, Orientation


class PhasePoint(NamedTuple):
    chi: float
    s: float


class Region(enum.Enum):
    IN_D0_PLUS = "saturated"
    IN_D0_MINUS = "unsaturated"
    ON_BOUNDARY_CURVE = "boundary"
    OUTSIDE_D0 = "outside"


def total_u(chi, s, R):
    """Total methane ``chi + s (R - chi)``."""
    return chi + s * (R - chi)


def _check_r_above(R, chi_star):
    if np.any(np.asarray(R) <= np.asarray(chi_star)):
        raise ParameterError("hydrate fraction R must exceed the solubility chi*")


def equilibrium_closure(u, chi_star, R) -> PhasePoint:
    """Split total methane into dissolved and hydrate parts at equilibrium.

    This is the resolvent of the equilibrium graph with parameter
    ``R - chi*``: the dissolved part is ``min(u, chi*)`` and the saturation is
    the corresponding Yosida value ``(u - chi*)_+ / (R - chi*)``.

    Parameters
    ----------
    u : float or ndarray
        Total methane per cell.
    chi_star : float or ndarray
        Maximum solubility, broadcastable against ``u``.
    R : float
        Methane mass fraction of hydrate.

    Returns
    -------
    PhasePoint
        ``(chi, s)`` lying on the equilibrium graph.
    """
    _check_r_above(R, chi_star)
    graph = CornerGraph(chi_star, Orientation.ESTAR)
    r_star = R - chi_star
    chi = graph.resolvent(r_star, u)
    s = graph.yosida(r_star, u)
    return PhasePoint(chi, s)


def _check_below_r(chi, R):
    if np.any(np.asarray(chi) >= R):
        raise DomainError("dissolved fraction must be below R")


def psi_from(chi, s, R):
    """Stored methane ``s (R - chi)``."""
    _check_below_r(chi, R)
    return s * (R - chi)


def s_from_psi(psi, chi, R):
    """Saturation ``psi / (R - chi)``; inverse of :func:`psi_from`."""
    _check_below_r(chi, R)
    return psi / (R - chi)


def in_d0(chi, s, R) -> bool:
    return 0.0 <= chi < R and 0.0 <= s < 1.0


def classify_region(p: PhasePoint, chi_star: float, R: float) -> Region:
    """Locate a state relative to the physical region and the curve u = chi*."""
    chi, s = p
    if not in_d0(chi, s, R):
        return Region.OUTSIDE_D0
    u = total_u(chi, s, R)
    if abs(u - chi_star) <= KNEE_TOL:
        return Region.ON_BOUNDARY_CURVE
    return Region.IN_D0_PLUS if u > chi_star else Region.IN_D0_MINUS
