"""Implicit one-step solvers for batch (no transport) hydrate kinetics.

Three relaxation models move a closed cell toward the equilibrium graph
while conserving total methane ``u = chi + s (R - chi)``:

* ``KIN1`` relaxes saturation at a rate proportional to ``chi - chi*``;
  its implicit step is a quadratic in the new ``chi``.
* ``KIN2`` is linear in ``(chi, psi)`` and has an explicit step.  It can
  leave the physical region when the cell is undersaturated.
* ``KIN3`` replaces ``chi*`` by a selection of the stored-methane graph.  Its
  step is a resolvent evaluation, and the stored methane stays nonnegative.

All steps use the scaled rates ``k_bar = tau k`` and
``k_tilde = k_bar / (1 + k_bar)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import PreconditionError, SolverInternalError
from .phase_closure import in_d0, total_u


class Model(enum.Enum):
    KIN1 = "KIN1"
    KIN2 = "KIN2"
    KIN3 = "KIN3"


@dataclass(frozen=True)
class KineticRate:
    """Exchange rate ``k`` (1/time) paired with a time step ``tau``."""

    k: float
    tau: float

    def __post_init__(self):
        if not (self.k > 0 and math.isfinite(self.k)):
            raise PreconditionError(f"rate must be positive and finite, got {self.k}")
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise PreconditionError(f"time step must be positive, got {self.tau}")

    @property
    def k_bar(self) -> float:
        return self.tau * self.k

    @property
    def k_tilde(self) -> float:
        return self.k_bar / (1.0 + self.k_bar)


@dataclass(frozen=True)
class BatchState:
    """Cell state ``(chi, s)``.  ``w`` is the graph selection used by KIN3."""

    chi: float
    s: float
    w: Optional[float] = None

    def psi(self, R: float) -> float:
        return self.s * (R - self.chi)

    def u(self, R: float) -> float:
        return total_u(self.chi, self.s, R)


def _check_step_input(prev: BatchState, chi_star: float, R: float):
    # Steps accept s < 0: KIN1 and KIN2 produce such states from the
    # undersaturated region and are iterated from them.
    if not R > chi_star:
        raise PreconditionError("R must exceed chi*")
    if not (0.0 <= prev.chi < R and prev.s < 1.0):
        raise PreconditionError(f"state ({prev.chi}, {prev.s}) is outside the admissible region")


def kin1_root(chi_bar: float, s_bar: float, chi_star: float, R: float, k_bar: float) -> float:
    """Smaller root of the KIN1 quadratic, in conjugate form.

    The quadratic is ``k_bar X^2 - B X + C = 0`` with
    ``B = R (1 - s_bar) + k_bar (R + chi*)`` and
    ``C = R (k_bar chi* + (1 - s_bar) chi_bar)``.  Writing the smaller root
    as ``2C / (B + sqrt(B^2 - 4 k_bar C))`` avoids cancellation for small
    ``k_bar``.
    """
    b = R * (1.0 - s_bar) + k_bar * (R + chi_star)
    c = R * (k_bar * chi_star + (1.0 - s_bar) * chi_bar)
    disc = b * b - 4.0 * k_bar * c
    if disc < 0.0:
        raise SolverInternalError(f"negative discriminant {disc} in KIN1 step")
    return 2.0 * c / (b + math.sqrt(disc))


def kin1_step(prev: BatchState, chi_star: float, R: float, rate: KineticRate) -> BatchState:
    """One implicit KIN1 step; the new ``chi`` is the root in ``[0, R)``."""
    _check_step_input(prev, chi_star, R)
    k_bar = rate.k_bar
    chi = kin1_root(prev.chi, prev.s, chi_star, R, k_bar)
    # equal to s_bar + k_bar (chi - chi*) / R at the exact root; the mass
    # balance form does not amplify the rounding of chi by k_bar / R
    s = (prev.u(R) - chi) / (R - chi)
    return BatchState(chi, s)


def _relax(chi_bar, chi_star, k_bar):
    # chi after an implicit linear relaxation toward chi*
    return (chi_bar + k_bar * chi_star) / (1.0 + k_bar)


def kin2_step(prev: BatchState, chi_star: float, R: float, rate: KineticRate) -> BatchState:
    """One implicit KIN2 step (explicit formula).

    The stored methane may become negative when the cell is undersaturated;
    the result is returned as is.
    """
    _check_step_input(prev, chi_star, R)
    chi = _relax(prev.chi, chi_star, rate.k_bar)
    psi = prev.psi(R) + rate.k_tilde * (prev.chi - chi_star)
    return BatchState(chi, psi / (R - chi))


def kin3_local_solve(F, G, chi_star, k_bar):
    """Solve the per-cell KIN3 exchange system.

    Finds ``(X, psi, W)`` with ``X - k_bar (W - X) = F``,
    ``psi + k_bar (W - X) = G`` and ``W`` in the stored-methane graph at
    ``psi``.  Eliminating ``X`` gives ``psi + k_tilde W = G + k_tilde F``, so
    ``psi`` is the graph resolvent with parameter ``k_tilde``.

    Parameters
    ----------
    F, G : float or ndarray
        Dissolved and stored inputs (previous values in a batch step, the
        advected values in a transport step).
    chi_star : float or ndarray
        Solubility limit per cell.
    k_bar : float
        Scaled rate ``tau k``.

    Returns
    -------
    X, psi, W : ndarray
    """
    F = np.asarray(F, dtype=float)
    G = np.asarray(G, dtype=float)
    k_tilde = k_bar / (1.0 + k_bar)
    unclamped = G + k_tilde * (F - chi_star)
    saturated = unclamped >= 0.0
    psi = np.where(saturated, unclamped, 0.0)
    chi = np.where(saturated, _relax(F, chi_star, k_bar), F + G)
    w = np.where(saturated, chi_star, F + G / k_tilde)
    return chi, psi, w


def kin3_step(prev: BatchState, chi_star: float, R: float, rate: KineticRate) -> tuple[BatchState, float]:
    """One implicit KIN3 step.

    Returns the new state (carrying its selection) and the selection ``W``.
    """
    _check_step_input(prev, chi_star, R)
    chi, psi, w = kin3_local_solve(prev.chi, prev.psi(R), chi_star, rate.k_bar)
    chi, psi, w = float(chi), float(psi), float(w)
    return BatchState(chi, psi / (R - chi), w), w


def initial_selection(state: BatchState, chi_star: float, R: float) -> float:
    """Graph value closest to ``chi`` at the state's stored methane."""
    if state.psi(R) > 0.0:
        return chi_star
    return min(state.chi, chi_star)


def equivalent_rate_k1(k2: KineticRate, prev: BatchState, chi_star: float, R: float) -> float:
    """KIN1 rate whose first step from ``prev`` coincides with a KIN2 step.

    Equating the KIN1 update to the KIN2 value of ``chi`` gives the scaled
    rate ``k1_bar = R k2_bar (1 - s) / ((R - chi) + k2_tilde (chi - chi*))``.
    The returned value is the rate ``k1_bar / tau``, to be paired with the
    same time step as ``k2``.
    """
    if not in_d0(prev.chi, prev.s, R):
        raise PreconditionError("state must lie in the physical region")
    denom = (R - prev.chi) + k2.k_tilde * (prev.chi - chi_star)
    k1_bar = R * k2.k_bar * (1.0 - prev.s) / denom
    return k1_bar / k2.tau


def q_discrepancy(state: BatchState, w_or_chistar: float, k: float) -> float:
    """Exchange term ``k (chi - w)``; pass ``chi*`` for KIN1 and KIN2."""
    return k * (state.chi - w_or_chistar)


_STEPS = {
    Model.KIN1: kin1_step,
    Model.KIN2: kin2_step,
}


def batch_trajectory(model, init: BatchState, chi_star: float, R: float,
                     rate: KineticRate, n_steps: int) -> list[BatchState]:
    """Iterate a batch model ``n_steps`` times starting from ``init``.

    KIN3 states carry the selection ``w`` used to reach them; the initial
    state gets the graph value nearest to its ``chi``.
    """
    model = Model(model)
    if not in_d0(init.chi, init.s, R):
        raise PreconditionError(f"initial state ({init.chi}, {init.s}) is outside [0,R) x [0,1)")
    if n_steps < 0:
        raise PreconditionError("n_steps must be nonnegative")
    if model is Model.KIN3:
        init = BatchState(init.chi, init.s, initial_selection(init, chi_star, R))
    states = [init]
    for _ in range(n_steps):
        if model is Model.KIN3:
            nxt, _w = kin3_step(states[-1], chi_star, R, rate)
        else:
            nxt = _STEPS[model](states[-1], chi_star, R, rate)
        states.append(nxt)
    return states


def trajectory_q(model, states: list[BatchState], chi_star: float, k: float) -> np.ndarray:
    """Exchange term along a trajectory."""
    model = Model(model)
    if model is Model.KIN3:
        return np.array([q_discrepancy(st, st.w, k) for st in states])
    return np.array([q_discrepancy(st, chi_star, k) for st in states])


def mass_drift(states: list[BatchState], R: float) -> float:
    """Largest deviation of total methane from its initial value."""
    u = np.array([st.u(R) for st in states])
    return float(np.max(np.abs(u - u[0])))
