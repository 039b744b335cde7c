"""Methane hydrate transport with equilibrium and kinetic phase exchange.

Finite-volume upwind transport of total methane, closed either by the
equilibrium phase relation (a monotone graph) or by a kinetic exchange
model, with batch kinetics, analytic reference solutions and the a priori
stability constants of the schemes.
"""

from .batch_kinetics import (BatchState, KineticRate, Model, batch_trajectory, equivalent_rate_k1,
                             kin1_step, kin2_step, kin3_local_solve, kin3_step, mass_drift)
from .diagnostics import (ConvergenceTable, StabilityLedger, analytical_solution_box,
                          fit_convergence_rate, l1_error, l1_norm, stability_ledger_eval, tv)
from .errors import (CFLError, ConfigError, DegenerateFlowError, DomainError, HydrateError,
                     ParameterError, PreconditionError, SolverInternalError)
from .flux import (AffineRampLaw, ExponentialDepth, FlowField, FrozenLaw, Layered, Linear, Shifted,
                   Tabulated, WarmingScenario, flux_eval, flux_reg_eval, lipschitz_constants,
                   regularized_min, warming_update)
from .monotone_graph import CornerGraph, Orientation, implicit_graph_step, resolvent_wstar, yosida_wstar
from .phase_closure import PhasePoint, classify_region, equilibrium_closure, in_d0
from .transport import (BoundaryConditions, BoxProfile, CustomProfile, Grid1D, RunConfig, ZeroProfile,
                        equilibrium_step, kinetic_step, run_simulation, step_profile)

__version__ = "0.1.0"
