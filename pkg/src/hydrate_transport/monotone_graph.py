"""Two-ray maximal monotone graphs and their resolvents.

Two graphs are needed by the phase model:

* ``ESTAR``: the equilibrium graph of admissible (chi, S) pairs.  It is the
  horizontal ray ``(-inf, knee] x {0}`` joined to the vertical ray
  ``{knee} x [0, inf)``.
* ``WSTAR``: the graph mapping stored methane ``psi`` to the dissolved
  concentration.  It is the vertical ray ``{0} x (-inf, knee]`` joined to the
  plateau ``(0, inf) x {knee}``.

Both are parameterized by the knee value alone, so every operation has a
closed form.  Functions accept scalars or numpy arrays.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, ParameterError

KNEE_TOL = 1e-12


class Orientation(enum.Enum):
    ESTAR = "estar"
    WSTAR = "wstar"


class GraphStep(NamedTuple):
    """Result of one implicit step: the new point and the graph value used."""

    a_n: float
    selection: float


class ScalarGraphPoint(NamedTuple):
    input: float
    output_selection: float
    is_multivalued_here: bool


def _finite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise DomainError("non-finite input to graph operation")


def _positive_lambda(lam):
    if not np.all(np.asarray(lam) > 0):
        raise ParameterError(f"resolvent parameter must be positive, got {lam!r}")


@dataclass(frozen=True)
class CornerGraph:
    """A two-ray graph with knee at ``knee`` (the solubility limit)."""

    knee: float
    orientation: Orientation = Orientation.WSTAR

    def resolvent(self, lam, f):
        """Return ``a`` solving ``a + lam * G(a) ∋ f``."""
        _positive_lambda(lam)
        _finite(lam, f, self.knee)
        if self.orientation is Orientation.WSTAR:
            return np.maximum(f - lam * self.knee, 0.0)
        return np.minimum(f, self.knee)

    def yosida(self, lam, a):
        """Yosida approximation ``(a - resolvent(lam, a)) / lam``."""
        if self.orientation is Orientation.WSTAR:
            # same value without the cancellation of a - (a - lam c)_+
            _positive_lambda(lam)
            _finite(lam, a, self.knee)
            return np.minimum(np.asarray(a, dtype=float) / lam, self.knee)
        return (a - self.resolvent(lam, a)) / lam

    def selection_interval(self, a: float) -> tuple[float, float] | None:
        """Closed interval ``G(a)``, or None when ``a`` is outside the domain."""
        if self.orientation is Orientation.WSTAR:
            if a < -KNEE_TOL:
                return None
            if abs(a) <= KNEE_TOL:
                return (-np.inf, self.knee)
            return (self.knee, self.knee)
        if a > self.knee + KNEE_TOL:
            return None
        if abs(a - self.knee) <= KNEE_TOL:
            return (0.0, np.inf)
        return (0.0, 0.0)

    def contains(self, a: float, b: float, tol: float = KNEE_TOL) -> bool:
        """Membership test for the pair ``(a, b)``."""
        interval = self.selection_interval(a)
        if interval is None:
            return False
        lo, hi = interval
        return lo - tol <= b <= hi + tol

    def is_multivalued_at(self, a: float) -> bool:
        interval = self.selection_interval(a)
        return interval is not None and interval[0] != interval[1]

    def point(self, a: float, b: float) -> ScalarGraphPoint:
        if not self.contains(a, b):
            raise DomainError(f"({a}, {b}) is not on the graph")
        return ScalarGraphPoint(a, b, self.is_multivalued_at(a))


def resolvent_wstar(lam, chi_star, w_in):
    """Resolvent of the stored-methane graph.

    Parameters
    ----------
    lam : float
        Positive step parameter.
    chi_star : float or ndarray
        Knee (solubility limit).
    w_in : float or ndarray
        Right-hand side of ``psi + lam * w*(psi) ∋ w_in``.

    Returns
    -------
    float or ndarray
        ``psi = (w_in - lam * chi_star)_+``.
    """
    _positive_lambda(lam)
    _finite(lam, chi_star, w_in)
    return np.maximum(w_in - lam * chi_star, 0.0)


def yosida_wstar(lam, chi_star, psi):
    """Yosida approximation of the stored-methane graph.

    Nondecreasing in ``psi``, Lipschitz with constant ``1/lam`` and bounded
    above by ``chi_star``.
    """
    return CornerGraph(chi_star).yosida(lam, psi)


def graph_distance_estar(chi, s, chi_star):
    """L1 distance from ``(chi, s)`` to the equilibrium graph.

    Zero exactly when ``chi <= chi_star`` with ``s == 0`` or ``chi == chi_star``
    with ``s >= 0``.
    """
    to_horizontal = np.abs(s) + np.maximum(chi - chi_star, 0.0)
    to_vertical = np.abs(chi - chi_star) + np.maximum(-s, 0.0)
    return np.minimum(to_horizontal, to_vertical)


def implicit_graph_step(a_prev: float, tau: float, graph: CornerGraph, f_n: float) -> GraphStep:
    """One backward Euler step of ``a' + G(a) ∋ f``.

    The new point is the resolvent of ``a_prev + tau * f_n`` and the graph
    value actually used is recovered from the step equation, so the returned
    pair satisfies ``(a_n - a_prev)/tau + selection = f_n`` with
    ``selection`` in ``G(a_n)``.
    """
    _positive_lambda(tau)
    a_n = float(graph.resolvent(tau, a_prev + tau * f_n))
    selection = f_n - (a_n - a_prev) / tau
    return GraphStep(a_n, selection)
