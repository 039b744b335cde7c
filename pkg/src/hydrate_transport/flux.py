"""Solubility fields, Darcy flux data and the transport flux function.

The conservation law transports total methane ``u`` with flux
``f(x, t; u) = q(x, t) * min(chi*(x, t), u)``: only the dissolved part moves.
The flux has a corner at ``u = chi*``; :func:`flux_reg_eval` provides a C2
replacement on a band of half-width ``eps`` around the corner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import DomainError, ParameterError

ArrayLike = Union[float, np.ndarray]


# ---------------------------------------------------------------------------
# solubility fields


class SolubilityField:
    """Maximum solubility ``chi*(x, t)``.

    Subclasses implement ``_value`` and, where cheap, the analytic
    derivatives.  The generic derivatives fall back to centered differences.
    """

    domain: tuple[float, float] = (-math.inf, math.inf)
    breakpoints: tuple[float, ...] = ()
    time_dependent: bool = False

    def __call__(self, x: ArrayLike, t: float = 0.0) -> np.ndarray:
        return self._value(np.asarray(x, dtype=float), t)

    def _value(self, x, t):
        raise NotImplementedError

    def derivative(self, x: ArrayLike, t: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = 1e-6 * np.maximum(1.0, np.abs(x))
        return (self._value(x + d, t) - self._value(x - d, t)) / (2 * d)

    def second_derivative(self, x: ArrayLike, t: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = 1e-4 * np.maximum(1.0, np.abs(x))
        return (self._value(x + d, t) - 2 * self._value(x, t) + self._value(x - d, t)) / d**2

    def time_derivative(self, x: ArrayLike, t: float = 0.0) -> np.ndarray:
        return np.zeros_like(np.asarray(x, dtype=float))

    def with_domain(self, lo: float, hi: float) -> "SolubilityField":
        self.domain = (float(lo), float(hi))
        return self


@dataclass
class ExponentialDepth(SolubilityField):
    """``a * exp(-b x)``."""

    a: float
    b: float

    def _value(self, x, t):
        return self.a * np.exp(-self.b * x)

    def derivative(self, x, t=0.0):
        return -self.b * self(x, t)

    def second_derivative(self, x, t=0.0):
        return self.b**2 * self(x, t)


@dataclass
class Linear(SolubilityField):
    """``intercept + slope * x``."""

    intercept: float
    slope: float

    def _value(self, x, t):
        return self.intercept + self.slope * x

    def derivative(self, x, t=0.0):
        return np.full_like(np.asarray(x, dtype=float), self.slope)

    def second_derivative(self, x, t=0.0):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass
class Shifted(SolubilityField):
    """``base(x - shift) + offset``; builds layer formulas like ``e^{-b(x-1)} - c``."""

    base: SolubilityField
    shift: float = 0.0
    offset: float = 0.0

    def _value(self, x, t):
        return self.base(x - self.shift, t) + self.offset

    def derivative(self, x, t=0.0):
        return self.base.derivative(np.asarray(x, dtype=float) - self.shift, t)

    def second_derivative(self, x, t=0.0):
        return self.base.second_derivative(np.asarray(x, dtype=float) - self.shift, t)


class Layered(SolubilityField):
    """Piecewise field: ``layers[i]`` owns ``(breakpoints[i-1], breakpoints[i]]``.

    The value at a breakpoint belongs to the layer on its left.
    Derivatives are taken from the owning layer's formula, so they never
    straddle a jump.
    """

    def __init__(self, breakpoints: Sequence[float], layers: Sequence[SolubilityField]):
        if len(layers) != len(breakpoints) + 1:
            raise ParameterError("need exactly one more layer than breakpoints")
        if any(b2 <= b1 for b1, b2 in zip(breakpoints, breakpoints[1:])):
            raise ParameterError("breakpoints must be strictly increasing")
        self.breakpoints = tuple(float(b) for b in breakpoints)
        self.layers = tuple(layers)

    def layer_index(self, x: ArrayLike) -> np.ndarray:
        return np.searchsorted(self.breakpoints, np.asarray(x, dtype=float), side="left")

    def _dispatch(self, method: str, x, t):
        x = np.asarray(x, dtype=float)
        idx = self.layer_index(x)
        out = np.empty_like(x)
        for i, layer in enumerate(self.layers):
            mask = idx == i
            if np.any(mask):
                out[mask] = getattr(layer, method)(x[mask], t)
        return out

    def _value(self, x, t):
        return self._dispatch("__call__", x, t)

    def derivative(self, x, t=0.0):
        return self._dispatch("derivative", x, t)

    def second_derivative(self, x, t=0.0):
        return self._dispatch("second_derivative", x, t)

    def jumps(self, t: float = 0.0) -> list[tuple[float, float]]:
        """``(position, right value - left value)`` at each breakpoint."""
        out = []
        for i, b in enumerate(self.breakpoints):
            left = float(self.layers[i](b, t))
            right = float(self.layers[i + 1](b, t))
            out.append((b, right - left))
        return out

    def __repr__(self):
        return f"Layered(breakpoints={self.breakpoints}, layers={self.layers})"


class Tabulated(SolubilityField):
    """Linear interpolation of samples ``(x_k, chi*_k)``."""

    def __init__(self, xs: Sequence[float], values: Sequence[float]):
        xs = np.asarray(xs, dtype=float)
        values = np.asarray(values, dtype=float)
        if xs.ndim != 1 or xs.shape != values.shape or xs.size < 2:
            raise ParameterError("tabulated field needs two equal-length columns with >= 2 rows")
        if np.any(np.diff(xs) <= 0):
            raise ParameterError("tabulated x values must be strictly increasing")
        self.xs = xs
        self.values = values
        self.domain = (float(xs[0]), float(xs[-1]))

    @classmethod
    def from_file(cls, path) -> "Tabulated":
        """Read whitespace- or comma-separated ``x chi*`` rows; ``#`` starts a comment."""
        with open(path) as fh:
            text = fh.read().replace(",", " ")
        data = np.loadtxt(text.splitlines(), ndmin=2)
        if data.shape[1] != 2:
            raise ParameterError(f"{path}: expected two columns, found {data.shape[1]}")
        return cls(data[:, 0], data[:, 1])

    def _value(self, x, t):
        return np.interp(x, self.xs, self.values)

    def derivative(self, x, t=0.0):
        slopes = np.diff(self.values) / np.diff(self.xs)
        idx = np.clip(np.searchsorted(self.xs, np.asarray(x, dtype=float), side="right") - 1,
                      0, slopes.size - 1)
        return slopes[idx]

    def second_derivative(self, x, t=0.0):
        return np.zeros_like(np.asarray(x, dtype=float))

    def __repr__(self):
        return f"Tabulated({self.xs.size} samples on {self.domain})"


class Frozen(SolubilityField):
    """A field evaluated at a fixed time, whatever time it is asked for."""

    def __init__(self, base: SolubilityField, t_fixed: float):
        self.base = base
        self.t_fixed = float(t_fixed)
        self.domain = base.domain
        self.breakpoints = base.breakpoints

    def _value(self, x, t):
        return self.base(x, self.t_fixed)

    def derivative(self, x, t=0.0):
        return self.base.derivative(x, self.t_fixed)

    def second_derivative(self, x, t=0.0):
        return self.base.second_derivative(x, self.t_fixed)


def chi_star_eval(chi_field: SolubilityField, x: ArrayLike, t: float = 0.0) -> np.ndarray:
    """Evaluate ``chi*`` with a domain check."""
    xa = np.asarray(x, dtype=float)
    lo, hi = chi_field.domain
    if np.any(xa < lo) or np.any(xa > hi):
        raise DomainError(f"x outside the solubility field domain [{lo}, {hi}]")
    return chi_field(xa, t)


# ---------------------------------------------------------------------------
# warming scenario


class FrozenLaw:
    """Solubility does not respond to pressure or temperature changes."""

    is_identity = True

    def __call__(self, chi0, d_pressure, d_temperature):
        return chi0

    def rate(self, chi0, d_pressure_rate, d_temperature_rate):
        return np.zeros_like(chi0)


@dataclass(frozen=True)
class AffineRampLaw:
    """``chi0 * (1 + c_pressure dP + c_temperature dT)``.

    ``dP`` in Pa and ``dT`` in K, measured from the initial reference state.
    """

    c_pressure: float = 0.0
    c_temperature: float = 0.0
    is_identity = False

    def __call__(self, chi0, d_pressure, d_temperature):
        return chi0 * (1.0 + self.c_pressure * d_pressure + self.c_temperature * d_temperature)

    def rate(self, chi0, d_pressure_rate, d_temperature_rate):
        return chi0 * (self.c_pressure * d_pressure_rate + self.c_temperature * d_temperature_rate)


@dataclass
class WarmingScenario:
    """Linear sea-level and bottom-water temperature ramps.

    ``x_top`` is the seafloor position in model coordinates (x points up from
    the base of the stability zone), so a point at ``x`` lies
    ``x_top - x`` below the seafloor.
    """

    base: SolubilityField
    x_top: float
    D_ref0: float = 2145.0
    T_ref0: float = 273.55
    sea_rise_rate: float = 0.003
    temp_rise_rate: float = 0.01
    G_H: float = 1.0e4
    G_T: float = 0.171
    rho_l: float = 1030.0
    g: float = 9.8
    law: object = field(default_factory=FrozenLaw)

    def D_ref(self, t):
        return self.D_ref0 + self.sea_rise_rate * t

    def T_ref(self, t):
        return self.T_ref0 + self.temp_rise_rate * t

    def P_ref(self, t):
        return self.rho_l * self.g * self.D_ref(t)

    def depth_below_sea_level(self, x, t):
        return self.D_ref(t) + (self.x_top - np.asarray(x, dtype=float))

    def pressure(self, x, t):
        return self.P_ref(t) + self.G_H * (self.depth_below_sea_level(x, t) - self.D_ref(t))

    def temperature(self, x, t):
        return self.T_ref(t) + self.G_T * (self.depth_below_sea_level(x, t) - self.D_ref(t))

    def field(self) -> "TimeRamped":
        return TimeRamped(self)


class TimeRamped(SolubilityField):
    """Base field mapped through a warming scenario's solubility law."""

    time_dependent = True

    def __init__(self, scenario: WarmingScenario):
        self.scenario = scenario
        self.domain = scenario.base.domain
        self.breakpoints = scenario.base.breakpoints

    def _factor_args(self, t):
        sc = self.scenario
        return sc.P_ref(t) - sc.P_ref(0.0), sc.T_ref(t) - sc.T_ref(0.0)

    def _value(self, x, t):
        return self.scenario.law(self.scenario.base(x, t), *self._factor_args(t))

    def derivative(self, x, t=0.0):
        return self.scenario.law(self.scenario.base.derivative(x, t), *self._factor_args(t))

    def second_derivative(self, x, t=0.0):
        return self.scenario.law(self.scenario.base.second_derivative(x, t), *self._factor_args(t))

    def time_derivative(self, x, t=0.0):
        sc = self.scenario
        dp_rate = sc.rho_l * sc.g * sc.sea_rise_rate
        return sc.law.rate(sc.base(x, t), dp_rate, sc.temp_rise_rate)


def warming_update(scenario: WarmingScenario, t: float) -> SolubilityField:
    """Solubility field for the thermodynamic state at time ``t``.

    With the frozen law, or at ``t = 0``, the base field itself is returned.
    """
    if t < 0:
        raise ParameterError("warming time must be nonnegative")
    if getattr(scenario.law, "is_identity", False) or t == 0:
        return scenario.base
    return Frozen(scenario.field(), t)


# ---------------------------------------------------------------------------
# Darcy flux and the flux function


@dataclass
class FlowField:
    """Darcy flux ``q``, diffusivity ``d_m`` and methane source.

    ``q`` and ``source`` are constants or callables ``(x, t) -> array``.
    The upwind scheme assumes ``q >= 0`` (flow toward increasing x).
    """

    q: Union[float, Callable] = 0.0
    d_m: float = 0.0
    source: Union[float, Callable] = 0.0

    def q_at(self, x: ArrayLike, t: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if callable(self.q):
            return np.broadcast_to(np.asarray(self.q(x, t), dtype=float), x.shape).copy()
        return np.full(x.shape, float(self.q))

    def source_at(self, x: ArrayLike, t: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if callable(self.source):
            return np.broadcast_to(np.asarray(self.source(x, t), dtype=float), x.shape).copy()
        return np.full(x.shape, float(self.source))

    @property
    def has_source(self) -> bool:
        return callable(self.source) or self.source != 0.0


def flux_eval(q_val, chi_star, u):
    """Flux ``q min(chi*, u)``."""
    return q_val * np.minimum(chi_star, u)


def _band_shape(s):
    # Hermite join on s in [0, 1]: G(0)=0, G'(0)=1, G''(0)=0,
    # G(1)=1/2, G'(1)=0, G''(1)=0.  The quintic coefficient vanishes.
    return s - s**3 + 0.5 * s**4


def _band_shape_d1(s):
    return (1.0 - s) ** 2 * (1.0 + 2.0 * s)


def _band_shape_d2(s):
    return 6.0 * s * (s - 1.0)


def regularized_min(u, chi_star, eps):
    """C2 version of ``min(chi*, u)``, altered only on ``|u - chi*| < eps``."""
    eps = np.asarray(eps, dtype=float)
    if np.any(eps <= 0):
        raise ParameterError("regularization width must be positive")
    if np.any(eps >= chi_star):
        raise ParameterError("regularization width must be smaller than chi*")
    u = np.asarray(u, dtype=float)
    lo = chi_star - eps
    s = np.clip((u - lo) / (2.0 * eps), 0.0, 1.0)
    band = lo + 2.0 * eps * _band_shape(s)
    return np.where(u <= lo, u, np.where(u >= chi_star + eps, chi_star, band))


def flux_reg_eval(q_val, chi_star, u, eps):
    """Regularized flux ``q p_eps(u)``.

    ``p_eps`` equals ``min(chi*, u)`` outside ``[chi* - eps, chi* + eps]``.
    Inside it is the polynomial that matches value, slope and curvature of
    both linear branches at the band edges.  It is nondecreasing and lies
    within ``eps`` of the sharp flux.
    """
    return q_val * regularized_min(u, chi_star, eps)


# ---------------------------------------------------------------------------
# Lipschitz data for the stability bounds


@dataclass
class LipschitzConstants:
    L_q: float
    L_qx: float
    L_chistar: float
    L3: float
    L1: float
    L2: float
    per_layer: list = field(default_factory=list)
    jumps: list = field(default_factory=list)


def _q_derivatives(flow: FlowField, x, t, h):
    d = 1e-3 * h
    q0 = flow.q_at(x, t)
    qp = flow.q_at(x + d, t)
    qm = flow.q_at(x - d, t)
    return q0, (qp - qm) / (2 * d), (qp - 2 * q0 + qm) / d**2


def _flux_partials(q, qx, qxx, c, cx, cxx, u, eps):
    """Partial derivatives of ``q P(u; c)`` where ``P`` is min or its regularization."""
    if eps is None:
        below = u < c
        P = np.minimum(u, c)
        Pu = below.astype(float)
        Px = np.where(below, 0.0, cx)
        Pxu = np.zeros_like(u)
        Pxx = np.where(below, 0.0, cxx)
    else:
        lo, hi = c - eps, c + eps
        s = np.clip((u - lo) / (2 * eps), 0.0, 1.0)
        inside = (u > lo) & (u < hi)
        below = u <= lo
        g1, g2 = _band_shape_d1(s), _band_shape_d2(s)
        P = np.where(below, u, np.where(inside, lo + 2 * eps * _band_shape(s), c))
        Pu = np.where(below, 1.0, np.where(inside, g1, 0.0))
        Px = np.where(below, 0.0, np.where(inside, cx * (1 - g1), cx))
        Pxu = np.where(inside, -cx * g2 / (2 * eps), 0.0)
        Pxx = np.where(below, 0.0, np.where(inside, cxx * (1 - g1) + cx**2 * g2 / (2 * eps), cxx))
    f_u = q * Pu
    f_x = qx * P + q * Px
    f_xu = qx * Pu + q * Pxu
    f_xx = qxx * P + 2 * qx * Px + q * Pxx
    return f_u, f_x, f_xu, f_xx


def lipschitz_constants(chi_field: SolubilityField, flow: FlowField, grid,
                        t_span: tuple[float, float] = (0.0, 0.0),
                        eps: float | None = None, u_max: float | None = None,
                        n_times: int = 11) -> LipschitzConstants:
    """Sampled bounds on the flux data.

    Maxima are taken over cell centers and faces of ``grid`` and over
    ``n_times`` instants in ``t_span``.  ``L1`` and ``L2`` bound the second
    and first partial derivatives of the flux; pass ``eps`` to measure the
    regularized flux.  For the sharp flux the corner is excluded and the
    bounds cover the two smooth branches only.
    """
    xc = np.asarray(grid.centers, dtype=float)
    xe = np.asarray(grid.edges, dtype=float)
    t0, t1 = t_span
    times = np.linspace(t0, t1, n_times) if t1 > t0 else np.array([t0])
    if u_max is None:
        u_max = 2.0 * float(max(np.max(chi_field(xc, t)) for t in times))
    s_band = np.linspace(0.0, 1.0, 33)
    u_base = np.linspace(0.0, u_max, 65)

    L_q = L_qx = L_chi = L3 = L1 = L2 = 0.0
    for t in times:
        qe, qxe, _ = _q_derivatives(flow, xe, t, grid.h)
        q, qx, qxx = _q_derivatives(flow, xc, t, grid.h)
        L_q = max(L_q, float(np.max(np.abs(qe))), float(np.max(np.abs(q))))
        L_qx = max(L_qx, float(np.max(np.abs(qxe))), float(np.max(np.abs(qx))))
        c = chi_field(xc, t)
        cx = chi_field.derivative(xc, t)
        cxx = chi_field.second_derivative(xc, t)
        L_chi = max(L_chi, float(np.max(np.abs(cx))))
        L3 = max(L3, float(np.max(np.abs(chi_field.time_derivative(xc, t)))))

        if eps is None:
            u = np.broadcast_to(u_base, (xc.size, u_base.size))
        else:
            band = (c - eps)[:, None] + 2 * eps * s_band[None, :]
            u = np.concatenate([np.broadcast_to(u_base, (xc.size, u_base.size)), band], axis=1)
        col = lambda a: np.asarray(a)[:, None]
        f_u, f_x, f_xu, f_xx = _flux_partials(col(q), col(qx), col(qxx), col(c), col(cx),
                                              col(cxx), u, eps)
        L1 = max(L1, float(np.max(np.abs(f_xu))), float(np.max(np.abs(f_xx))))
        L2 = max(L2, float(np.max(np.abs(f_u))), float(np.max(np.abs(f_x))))

    per_layer, jumps = [], []
    if isinstance(chi_field, Layered):
        idx = chi_field.layer_index(xc)
        for i in range(len(chi_field.layers)):
            mask = idx == i
            if np.any(mask):
                per_layer.append(float(np.max(np.abs(chi_field.derivative(xc[mask], t0)))))
            else:
                per_layer.append(0.0)
        jumps = [abs(j) for _, j in chi_field.jumps(t0)]
    return LipschitzConstants(L_q, L_qx, L_chi, L3, L1, L2, per_layer, jumps)
