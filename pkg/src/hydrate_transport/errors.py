"""Exception types shared by the solver modules."""

from __future__ import annotations


class HydrateError(Exception):
    """Base class for all package errors."""


class DomainError(HydrateError, ValueError):
    """An argument lies outside the set where the operation is defined."""


class ParameterError(HydrateError, ValueError):
    """A model parameter violates its admissible range."""


class PreconditionError(HydrateError, ValueError):
    """A state handed to a solver does not satisfy its precondition."""


class CFLError(HydrateError, ValueError):
    """A time step exceeds the stable explicit step."""


class DegenerateFlowError(HydrateError, ValueError):
    """No advective velocity is available to derive a time step from."""


class ConfigError(HydrateError, ValueError):
    """A run configuration is malformed or inconsistent."""


class SolverInternalError(HydrateError, RuntimeError):
    """A condition that valid inputs cannot produce was reached."""
