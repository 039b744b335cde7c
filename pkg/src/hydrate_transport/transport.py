"""Finite-volume transport of methane with equilibrium or kinetic closure.

The grid is uniform with ``M`` cells.  Advection is first-order upwind for
``q >= 0``: the flux through the right face of cell ``j`` is
``q(x_{j+1/2}) X_j``.  The left ghost cell holds the inflow concentration.
The right boundary is a free outflow.  Diffusion of the dissolved part is
implicit.  The exchange with hydrate is either the equilibrium closure or
the per-cell implicit KIN3 solve.

:func:`run_simulation` drives macro steps (where ``q`` and ``chi*`` are
refreshed) each made of ``K`` transport steps.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.linalg import solve_banded

from . import diagnostics as dg
from .batch_kinetics import kin3_local_solve
from .errors import (CFLError, ConfigError, DegenerateFlowError, ParameterError,
                     SolverInternalError)
from .flux import FlowField, SolubilityField, regularized_min
from .phase_closure import equilibrium_closure

log = logging.getLogger(__name__)

CFL_SLACK = 1e-12


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    M: int

    def __post_init__(self):
        if self.M < 2:
            raise ParameterError("grid needs at least two cells")
        if not self.x_max > self.x_min:
            raise ParameterError("x_max must exceed x_min")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / self.M

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.M) + 0.5) * self.h

    @property
    def edges(self) -> np.ndarray:
        return self.x_min + np.arange(self.M + 1) * self.h


@dataclass(frozen=True)
class BoundaryConditions:
    """Inflow at ``x_min``: a prescribed concentration or nothing at all.

    ``inflow="dirichlet"`` feeds ``chi_left`` through the left face, both by
    advection and as the diffusion boundary value.  ``inflow="compact"``
    feeds zero.  The right end is always a free outflow with no diffusive
    flux.
    """

    inflow: str = "compact"
    chi_left: float = 0.0

    def __post_init__(self):
        if self.inflow not in ("dirichlet", "compact"):
            raise ConfigError(f"unknown inflow condition {self.inflow!r}")
        if self.chi_left < 0:
            raise ConfigError("inflow concentration must be nonnegative")

    @property
    def inflow_value(self) -> float:
        return self.chi_left if self.inflow == "dirichlet" else 0.0


@dataclass
class EquilibriumField:
    U: np.ndarray
    X: np.ndarray
    S: np.ndarray

    @property
    def Psi(self) -> np.ndarray:
        return self.U - self.X


@dataclass
class KineticField:
    X: np.ndarray
    Psi: np.ndarray
    W: np.ndarray
    S: np.ndarray

    @property
    def U(self) -> np.ndarray:
        return self.X + self.Psi


@dataclass
class StepFluxes:
    """Methane (per unit cross-section) entering the domain during one step."""

    advective_in: float = 0.0
    advective_out: float = 0.0
    diffusive_in: float = 0.0
    source: float = 0.0

    @property
    def net(self) -> float:
        return self.advective_in - self.advective_out + self.diffusive_in + self.source


# ---------------------------------------------------------------------------
# initial data


@dataclass(frozen=True)
class BoxProfile:
    """``value`` on ``(a, b)``, zero elsewhere; ``a = -inf`` gives a step."""

    value: float
    a: float = -math.inf
    b: float = 0.0


def step_profile(value: float) -> BoxProfile:
    return BoxProfile(value, -math.inf, 0.0)


@dataclass(frozen=True)
class ZeroProfile:
    pass


@dataclass
class CustomProfile:
    """Cell values given directly, or a function sampled at cell centers."""

    values: Union[np.ndarray, Callable]


def apply_initial_data(profile, grid: Grid1D) -> np.ndarray:
    """Cell averages of the initial total methane.

    Box profiles are averaged exactly through the overlap length of each
    cell with ``(a, b)``.
    """
    if isinstance(profile, ZeroProfile):
        return np.zeros(grid.M)
    if isinstance(profile, BoxProfile):
        e = grid.edges
        overlap = np.clip(np.minimum(e[1:], profile.b) - np.maximum(e[:-1], profile.a), 0.0, None)
        return profile.value * overlap / grid.h
    if isinstance(profile, CustomProfile):
        if callable(profile.values):
            return np.asarray(profile.values(grid.centers), dtype=float)
        vals = np.asarray(profile.values, dtype=float)
        if vals.shape != (grid.M,):
            raise ConfigError(f"custom initial data has {vals.size} values for {grid.M} cells")
        return vals.copy()
    raise ConfigError(f"unknown initial profile {profile!r}")


# ---------------------------------------------------------------------------
# single steps


def max_stable_tau(grid: Grid1D, flow: FlowField, nu: float = 0.9, t: float = 0.0) -> float:
    """Largest step ``nu h / L_q`` allowed by the CFL condition."""
    if not 0 < nu <= 1:
        raise ParameterError("CFL number must lie in (0, 1]")
    L_q = float(np.max(np.abs(flow.q_at(grid.edges, t))))
    if L_q == 0.0:
        raise DegenerateFlowError("zero Darcy flux: no advective time step")
    return nu * grid.h / L_q


def _check_cfl(q_faces, tau, h):
    if np.any(q_faces < 0):
        raise ParameterError("upwind scheme assumes q >= 0")
    courant = tau * float(np.max(q_faces)) / h
    if courant > 1.0 + CFL_SLACK:
        raise CFLError(f"time step violates CFL: (tau/h) max q = {courant:.6g} > 1")


def _advect(X, q_faces, chi_in, tau, h):
    """Upwind update increment and boundary fluxes for dissolved profile X."""
    face_flux = np.empty(X.size + 1)
    face_flux[0] = q_faces[0] * chi_in
    face_flux[1:] = q_faces[1:] * X
    delta = -(tau / h) * (face_flux[1:] - face_flux[:-1])
    return delta, tau * face_flux[0], tau * face_flux[-1]


def _diffusion_bands(M, r, left):
    ab = np.zeros((3, M))
    ab[0, 1:] = -r
    ab[2, :-1] = -r
    ab[1, :] = 1.0 + 2.0 * r
    ab[1, -1] = 1.0 + r
    if left == "noflux":
        ab[1, 0] = 1.0 + r
    return ab


def diffusion_solve(values, h: float, d_m: float, tau: float, left: str = "dirichlet",
                    left_value: float = 0.0) -> np.ndarray:
    """Implicit diffusion step ``(I + (d_m tau / h^2) A) X = values``.

    ``A`` is the three-point Laplacian.  At the left end the ghost value is
    ``left_value`` (``left="dirichlet"``) or a copy of the first cell
    (``left="noflux"``).  The right end is always no-flux.
    """
    values = np.asarray(values, dtype=float)
    if d_m < 0:
        raise ParameterError("diffusivity must be nonnegative")
    if d_m == 0:
        return values.copy()
    if left not in ("dirichlet", "noflux"):
        raise ParameterError(f"unknown diffusion boundary {left!r}")
    r = d_m * tau / h**2
    rhs = values.copy()
    if left == "dirichlet":
        rhs[0] += r * left_value
    out = solve_banded((1, 1), _diffusion_bands(values.size, r, left), rhs)
    if not np.all(np.isfinite(out)):
        raise SolverInternalError("diffusion solve produced non-finite values")
    return out


def _diffusive_inflow(X, h, d_m, tau, bcs):
    return tau * d_m * (bcs.inflow_value - X[0]) / h


def _closure(U, chi_star, R, eps):
    if eps is None:
        X, S = equilibrium_closure(U, chi_star, R)
        return X, S
    X = regularized_min(U, chi_star, eps)
    return X, (U - X) / (R - X)


def equilibrium_step(state: EquilibriumField, grid: Grid1D, flow: FlowField,
                     solubility: Union[SolubilityField, np.ndarray], tau: float,
                     bcs: BoundaryConditions, R: float, t: float = 0.0,
                     eps: Optional[float] = None, q_faces=None,
                     picard_tol: float = 1e-10, picard_max: int = 50):
    """Advance the equilibrium model by one step.

    Advection and the source act explicitly on the totals.  With diffusion,
    the dissolved part is diffused implicitly and re-closed.  The stored
    part is lagged and the pair is iterated to a fixed point.  Every
    iterate conserves mass exactly.

    Parameters
    ----------
    state : EquilibriumField
        Totals and their closure at the previous step.
    solubility : SolubilityField or ndarray
        ``chi*`` for this step: a field evaluated at ``(centers, t)`` or the
        cell values directly.
    eps : float, optional
        Half-width of the regularization band; ``None`` for the sharp flux.
    q_faces : ndarray, optional
        Precomputed face values of ``q``.

    Returns
    -------
    (EquilibriumField, StepFluxes)
    """
    h = grid.h
    if q_faces is None:
        q_faces = flow.q_at(grid.edges, t)
    _check_cfl(q_faces, tau, h)
    chi_star = _cell_values(solubility, grid, t)

    delta, f_in, f_out = _advect(state.X, q_faces, bcs.inflow_value, tau, h)
    U_star = state.U + delta
    src = 0.0
    if flow.has_source:
        s_vals = tau * flow.source_at(grid.centers, t)
        U_star = U_star + s_vals
        src = h * float(np.sum(s_vals))

    diff_in = 0.0
    if flow.d_m > 0:
        X, _ = _closure(U_star, chi_star, R, eps)
        psi = U_star - X
        for _ in range(picard_max):
            X_d = diffusion_solve(U_star - psi, h, flow.d_m, tau, "dirichlet", bcs.inflow_value)
            U = X_d + psi
            X_new, _ = _closure(U, chi_star, R, eps)
            psi_new = U - X_new
            change = float(np.max(np.abs(psi_new - psi)))
            psi = psi_new
            if change < picard_tol:
                break
        else:
            log.warning("diffusion/closure iteration did not converge (last change %.3g)", change)
        diff_in = _diffusive_inflow(X_d, h, flow.d_m, tau, bcs)
        U_star = U

    X, S = _closure(U_star, chi_star, R, eps)
    return EquilibriumField(U_star, X, S), StepFluxes(f_in, f_out, diff_in, src)


def kinetic_step(state: KineticField, grid: Grid1D, flow: FlowField,
                 solubility: Union[SolubilityField, np.ndarray], k3: float, tau: float,
                 bcs: BoundaryConditions, R: float, t: float = 0.0, q_faces=None):
    """Advance the KIN3 transport model by one step.

    The dissolved part is advected (and diffused) to ``F``; each cell then
    solves the implicit exchange system with ``G = Psi^{n-1}``, whose stored
    part is the stored-methane resolvent of ``G + k_tilde F``.

    Returns
    -------
    (KineticField, StepFluxes)
    """
    h = grid.h
    if q_faces is None:
        q_faces = flow.q_at(grid.edges, t)
    _check_cfl(q_faces, tau, h)
    chi_star = _cell_values(solubility, grid, t)

    delta, f_in, f_out = _advect(state.X, q_faces, bcs.inflow_value, tau, h)
    F = state.X + delta
    src = 0.0
    if flow.has_source:
        s_vals = tau * flow.source_at(grid.centers, t)
        F = F + s_vals
        src = h * float(np.sum(s_vals))
    diff_in = 0.0
    if flow.d_m > 0:
        F = diffusion_solve(F, h, flow.d_m, tau, "dirichlet", bcs.inflow_value)
        diff_in = _diffusive_inflow(F, h, flow.d_m, tau, bcs)

    X, Psi, W = kin3_local_solve(F, state.Psi, chi_star, tau * k3)
    return KineticField(X, Psi, W, Psi / (R - X)), StepFluxes(f_in, f_out, diff_in, src)


def _cell_values(solubility, grid, t):
    if isinstance(solubility, SolubilityField):
        return solubility(grid.centers, t)
    vals = np.asarray(solubility, dtype=float)
    if vals.shape != (grid.M,):
        raise ConfigError("solubility values do not match the grid")
    return vals


# ---------------------------------------------------------------------------
# driver


@dataclass
class RunConfig:
    """Everything a transport run needs.

    ``model`` is ``"EQ"`` or ``"KIN3"``.  ``reg_alpha`` switches the
    equilibrium model to the regularized flux with band half-width
    ``reg_alpha * h``.  The run takes ``N`` steps of size ``T_final / N``,
    with ``N`` the smallest multiple of ``K`` whose step is at most the CFL
    step (or ``tau`` if given).  ``phi`` is a constant porosity divided out
    of ``q``, ``d_m`` and the source.
    """

    grid: Grid1D
    solubility: SolubilityField
    flow: FlowField
    R: float
    T_final: float
    model: str = "EQ"
    k3: float = 0.0
    nu: float = 0.9
    tau: Optional[float] = None
    K: int = 1
    n_min: int = 100
    bcs: BoundaryConditions = field(default_factory=BoundaryConditions)
    init: object = field(default_factory=ZeroProfile)
    initial_psi: Optional[np.ndarray] = None
    reg_alpha: Optional[float] = None
    snapshot_times: Sequence[float] = ()
    interpolate_chi: bool = False
    phi: float = 1.0
    name: str = "run"

    def validate(self):
        if self.model not in ("EQ", "KIN3"):
            raise ConfigError(f"transport supports models EQ and KIN3, not {self.model!r}")
        if self.model == "KIN3" and not self.k3 > 0:
            raise ConfigError("KIN3 runs need a positive rate k3")
        if self.model == "KIN3" and self.reg_alpha is not None:
            raise ConfigError("flux regularization applies to the EQ model only")
        if not self.T_final > 0:
            raise ConfigError("T_final must be positive")
        if int(self.K) != self.K or self.K < 1:
            raise ConfigError("macro ratio K must be a positive integer")
        if not 0 < self.nu <= 1:
            raise ConfigError("CFL number must lie in (0, 1]")
        if not self.phi > 0:
            raise ConfigError("porosity must be positive")
        if self.reg_alpha is not None and not self.reg_alpha > 0:
            raise ConfigError("regularization alpha must be positive")
        chi = self.solubility(self.grid.centers, 0.0)
        if np.any(chi <= 0) or np.any(chi >= self.R):
            raise ConfigError("solubility must satisfy 0 < chi* < R on the grid")
        for ts in self.snapshot_times:
            if ts < 0 or ts > self.T_final * (1 + 1e-12):
                raise ConfigError(f"snapshot time {ts} outside [0, T_final]")

    @property
    def eps(self) -> Optional[float]:
        return None if self.reg_alpha is None else self.reg_alpha * self.grid.h

    def effective_flow(self) -> FlowField:
        if self.phi == 1.0:
            return self.flow
        phi, f = self.phi, self.flow
        q = (lambda x, t: f.q_at(x, t) / phi) if callable(f.q) else f.q / phi
        src = (lambda x, t: f.source_at(x, t) / phi) if callable(f.source) else f.source / phi
        return FlowField(q, f.d_m / phi, src)


@dataclass
class Snapshot:
    t: float
    step: int
    x: np.ndarray
    u: np.ndarray
    chi: np.ndarray
    s: np.ndarray
    psi: np.ndarray


@dataclass
class RunDiagnostics:
    """Per-step series; index 0 is the initial state."""

    t: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    boundary_net: list = field(default_factory=list)
    l1_u: list = field(default_factory=list)
    tv_u: list = field(default_factory=list)
    l1_xpsi: list = field(default_factory=list)
    tv_xpsi: list = field(default_factory=list)
    q_l1: list = field(default_factory=list)
    support: list = field(default_factory=list)
    max_s: list = field(default_factory=list)
    l1_s: list = field(default_factory=list)

    COLUMNS = ("t", "mass", "boundary_net", "l1_u", "tv_u", "l1_xpsi", "tv_xpsi", "q_l1",
               "support", "max_s", "l1_s")

    def record(self, t, grid, U, X, Psi, S, Q, chi_in, net):
        h = grid.h
        self.t.append(float(t))
        self.mass.append(h * float(np.sum(U)))
        self.boundary_net.append(float(net))
        self.l1_u.append(dg.l1_norm(U, h))
        # the inflow ghost value extends the profile to the left
        self.tv_u.append(dg.tv(np.concatenate(([chi_in], U))))
        self.l1_xpsi.append(dg.l1_norm(X, h) + dg.l1_norm(Psi, h))
        self.tv_xpsi.append(dg.tv(np.concatenate(([chi_in], X))) + dg.tv(np.concatenate(([0.0], Psi))))
        self.q_l1.append(math.nan if Q is None else dg.l1_norm(Q, h))
        self.support.append(h * int(np.count_nonzero(np.abs(U) > 1e-14)))
        self.max_s.append(float(np.max(S)))
        self.l1_s.append(dg.l1_norm(S, h))

    def as_arrays(self) -> dict:
        return {c: np.asarray(getattr(self, c)) for c in self.COLUMNS}

    def mass_defect(self) -> np.ndarray:
        """``|mass^n - mass^0 - (net inflow up to n)|``."""
        m = np.asarray(self.mass)
        net = np.asarray(self.boundary_net)
        return np.abs(m - m[0] - net)


@dataclass
class RunResult:
    config: RunConfig
    tau: float
    n_steps: int
    snapshots: list
    final: Snapshot
    diagnostics: RunDiagnostics
    initial: Snapshot


def time_stepping(cfg: RunConfig) -> tuple[float, int]:
    """Step size and step count for a run (``N`` a multiple of ``K``)."""
    flow = cfg.effective_flow()
    K = int(cfg.K)
    try:
        tau_max = max_stable_tau(cfg.grid, flow, cfg.nu, 0.0)
        if cfg.solubility.time_dependent or callable(flow.q):
            taus = [max_stable_tau(cfg.grid, flow, cfg.nu, t)
                    for t in np.linspace(0, cfg.T_final, 11)]
            tau_max = min(taus)
    except DegenerateFlowError:
        if cfg.tau is None:
            log.warning("no advection: time step set from T_final / %d", cfg.n_min)
            tau_max = cfg.T_final / cfg.n_min
        else:
            tau_max = math.inf
    if cfg.tau is not None:
        if cfg.tau > tau_max * (1 + CFL_SLACK):
            raise CFLError(f"requested tau={cfg.tau} exceeds the stable step {tau_max:.6g}")
        target = cfg.tau
    else:
        target = tau_max
    n_macro = max(1, math.ceil(cfg.T_final / (K * target) - 1e-9))
    N = n_macro * K
    return cfg.T_final / N, N


def _snapshot(t, step, grid, U, X, S, Psi) -> Snapshot:
    return Snapshot(float(t), int(step), grid.centers, U.copy(), X.copy(), S.copy(), Psi.copy())


def run_simulation(cfg: RunConfig) -> RunResult:
    """Run the macro/micro time-stepping loop and collect diagnostics.

    At macro step ``m`` the solubility and flux are evaluated at
    ``T^m = m K tau`` and held for its ``K`` transport steps, unless
    ``interpolate_chi`` is set, in which case ``chi*`` is interpolated
    linearly in time between ``T^{m-1}`` and ``T^m``.
    """
    cfg.validate()
    grid, R = cfg.grid, cfg.R
    flow = cfg.effective_flow()
    tau, N = time_stepping(cfg)
    K = int(cfg.K)
    eps = cfg.eps
    bcs = cfg.bcs
    chi_in = bcs.inflow_value
    x = grid.centers

    U0 = apply_initial_data(cfg.init, grid)
    chi0 = cfg.solubility(x, 0.0)
    diag = RunDiagnostics()
    if cfg.model == "EQ":
        X, S = _closure(U0, chi0, R, eps)
        state = EquilibriumField(U0, X, S)
        Q = None
    else:
        if cfg.initial_psi is not None:
            Psi = np.asarray(cfg.initial_psi, dtype=float).copy()
            X = U0 - Psi
        else:
            X, _ = equilibrium_closure(U0, chi0, R)
            Psi = U0 - X
        W = np.where(Psi > 0, chi0, np.minimum(X, chi0))
        state = KineticField(X, Psi, W, Psi / (R - X))
        Q = state.W - state.X

    snap_steps = {}
    for ts in cfg.snapshot_times:
        snap_steps.setdefault(int(min(N, max(0, round(ts / tau)))), []).append(ts)

    def emit(n, t):
        st = state
        return _snapshot(t, n, grid, st.U, st.X, st.S, st.Psi if cfg.model == "EQ" else st.Psi)

    initial = emit(0, 0.0)
    snapshots = [initial for _ in snap_steps.get(0, [])]
    net = 0.0
    diag.record(0.0, grid, state.U, state.X, state.Psi, state.S, Q, chi_in, net)

    n_macro = N // K
    n = 0
    for m in range(1, n_macro + 1):
        T_prev, T_m = (m - 1) * K * tau, m * K * tau
        chi_m = cfg.solubility(x, T_m)
        chi_prev = cfg.solubility(x, T_prev) if cfg.interpolate_chi else None
        q_faces = flow.q_at(grid.edges, T_m)
        step_flow = flow if not flow.has_source else FlowField(
            flow.q, flow.d_m, lambda xx, tt, T_m=T_m: flow.source_at(xx, T_m))
        for i in range(1, K + 1):
            n += 1
            t_n = n * tau
            if cfg.interpolate_chi:
                w = i / K
                chi_n = (1 - w) * chi_prev + w * chi_m
            else:
                chi_n = chi_m
            if cfg.model == "EQ":
                state, fl = equilibrium_step(state, grid, step_flow, chi_n, tau, bcs, R,
                                             t=T_m, eps=eps, q_faces=q_faces)
                Q = None
            else:
                state, fl = kinetic_step(state, grid, step_flow, chi_n, cfg.k3, tau, bcs, R,
                                         t=T_m, q_faces=q_faces)
                Q = state.W - state.X
            net += fl.net
            diag.record(t_n, grid, state.U, state.X, state.Psi, state.S, Q, chi_in, net)
            for _ in snap_steps.get(n, []):
                snapshots.append(emit(n, t_n))

    final = emit(N, N * tau)
    return RunResult(cfg, tau, N, snapshots, final, diag, initial)
