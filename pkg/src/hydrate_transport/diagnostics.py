"""Grid norms, analytical reference solutions, convergence fits and the
stability-bound ledger.

All reductions run in fixed index order so that results do not depend on
how the arrays were produced.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ParameterError, PreconditionError
from .flux import SolubilityField


# ---------------------------------------------------------------------------
# norms


def l1_norm(v, h: float) -> float:
    """``h * sum |v_j|``."""
    return float(h * np.sum(np.abs(v)))


def linf_norm(v) -> float:
    return float(np.max(np.abs(v))) if np.size(v) else 0.0


def tv(v) -> float:
    """Total variation ``sum |v_j - v_{j-1}|``."""
    return float(np.sum(np.abs(np.diff(np.asarray(v, dtype=float)))))


def tv_time(series: Sequence[np.ndarray], tau: float, h: float) -> float:
    """Space-time variation ``sum_{n>=1} [tau TV(V^n) + ||V^n - V^{n-1}||_1]``."""
    total = 0.0
    for prev, cur in zip(series[:-1], series[1:]):
        total += tau * tv(cur) + l1_norm(np.asarray(cur) - np.asarray(prev), h)
    return total


def restrict(fine, factor: int) -> np.ndarray:
    """Cell-average a fine-grid field onto a grid ``factor`` times coarser."""
    fine = np.asarray(fine, dtype=float)
    if factor < 1 or fine.size % factor:
        raise PreconditionError(f"cannot restrict {fine.size} cells by a factor {factor}")
    return fine.reshape(-1, factor).mean(axis=1)


def l1_error(a, b, h: float, restrict_fine: bool = False) -> float:
    """L1 grid distance ``h * sum |a_j - b_j|`` on the grid of ``a``.

    ``b`` may be an array on the same grid, or a finer grid field when
    ``restrict_fine`` is set (its size must be a multiple of ``a``'s).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        if not restrict_fine:
            raise PreconditionError(f"grid mismatch: {a.shape} vs {b.shape}")
        if b.size % a.size:
            raise PreconditionError("fine grid is not an integer refinement")
        b = restrict(b, b.size // a.size)
    return l1_norm(a - b, h)


# ---------------------------------------------------------------------------
# analytical solution for advection into the hydrate zone


def bisect_root(func: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12,
                max_iter: int = 200) -> float:
    """Root of ``func`` on ``[lo, hi]`` by bisection; the ends must bracket it."""
    flo = func(lo)
    if flo == 0.0:
        return lo
    fhi = func(hi)
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ParameterError("interval does not bracket a root")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = func(mid)
        if fmid == 0.0 or hi - lo < tol:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solubility_crossing(chi_field: SolubilityField, chi_L: float, lo: float, hi: float):
    """Position where a decreasing ``chi*`` falls to ``chi_L``.

    Returns ``(x_L, clamped)``.  When ``chi*`` is already below ``chi_L`` at
    ``lo`` the root is set to ``lo`` and ``clamped`` is True.  When it never
    reaches ``chi_L`` the result is ``hi``.
    """
    g = lambda x: float(chi_field(x)) - chi_L
    g_lo = g(lo)
    if g_lo == 0.0:
        return lo, False
    if g_lo < 0.0:
        return lo, True
    if g(hi) > 0.0:
        return hi, False
    return bisect_root(g, lo, hi), False


@dataclass
class BoxSolution:
    u: np.ndarray
    chi: np.ndarray
    s: np.ndarray
    x_L: float
    clamped: bool


def analytical_solution_box(x, t: float, chi_L: float, q: float, R: float,
                            chi_field: SolubilityField, support=(-math.inf, 0.0),
                            x_bounds: tuple[float, float] | None = None) -> BoxSolution:
    """Exact solution for a slug of dissolved methane entering a hydrate zone.

    The initial total methane is ``chi_L`` on ``support = (a, b)`` and zero
    elsewhere; ``q`` is constant and ``chi*`` decreases in x.  Upstream of the
    point ``x_L`` where ``chi*(x_L) = chi_L`` the slug is advected unchanged.
    Downstream, the arriving water is saturated, so the dissolved part is
    ``chi*(x)``.  The divergence of the saturated flux ``q chi*(x)`` then
    deposits hydrate for as long as the front has been present.

    Parameters
    ----------
    x : ndarray
        Evaluation points.
    t : float
        Time; must not exceed the moment the slug's rear reaches ``x_L``
        (after that the hydrate dissolves again and this formula no longer
        applies).
    chi_L, q, R : float
        Slug concentration, Darcy flux (> 0) and hydrate methane fraction.
    chi_field : SolubilityField
        Time-independent solubility, decreasing near ``x_L``.
    support : tuple
        ``(a, b)``; use ``(-inf, 0)`` for a step.
    x_bounds : tuple, optional
        Interval searched for ``x_L``; defaults to ``(b, max(x))``.

    Returns
    -------
    BoxSolution
    """
    if q <= 0:
        raise ParameterError("analytical solution needs q > 0")
    x = np.asarray(x, dtype=float)
    a, b = support
    lo, hi = x_bounds if x_bounds is not None else (b, float(np.max(x)))
    x_L, clamped = solubility_crossing(chi_field, chi_L, lo, hi)
    if clamped:
        warnings.warn("chi* is below chi_L at the start of the search interval; x_L clamped",
                      RuntimeWarning, stacklevel=2)
    if math.isfinite(a) and t > (x_L - a) / q + 1e-14:
        raise ParameterError("the slug's rear has passed x_L; the closed form no longer holds")

    chi_star = chi_field(x)
    xs = x - q * t
    u_init_shifted = np.where((xs > a) & (xs < b), chi_L, 0.0)
    if chi_L > 0:
        chi = np.minimum(1.0, chi_star / chi_L) * u_init_shifted
    else:
        chi = np.zeros_like(x)
    in_zone = (x > x_L) & (x <= q * t + b)
    growth = np.maximum(0.0, t - (x - b) / q) * q * (-chi_field.derivative(x))
    s = np.where(in_zone, growth / (R - chi_star), 0.0)
    u = chi + (R - chi_star) * s
    return BoxSolution(u, chi, s, x_L, clamped)


def cell_average(func: Callable[[np.ndarray], np.ndarray], edges, n_sub: int = 1) -> np.ndarray:
    """Average ``func`` over each cell using ``n_sub`` midpoint sub-samples."""
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1], edges[1:]
    offs = (np.arange(n_sub) + 0.5) / n_sub
    pts = lo[:, None] + (hi - lo)[:, None] * offs[None, :]
    return func(pts.ravel()).reshape(pts.shape).mean(axis=1)


# ---------------------------------------------------------------------------
# convergence tables


def fit_convergence_rate(h, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(h)``."""
    h = np.asarray(h, dtype=float)
    e = np.asarray(errors, dtype=float)
    if h.size < 3:
        raise PreconditionError("need at least three resolutions to fit a rate")
    if np.any(e <= 0) or np.any(h <= 0):
        raise ParameterError("errors and mesh sizes must be positive")
    slope, _ = np.polyfit(np.log(h), np.log(e), 1)
    return float(slope)


@dataclass
class ConvergenceTable:
    M: list = field(default_factory=list)
    h: list = field(default_factory=list)
    err_u: list = field(default_factory=list)
    err_chi: list = field(default_factory=list)
    err_s: list = field(default_factory=list)

    COLUMNS = ("u", "chi", "s")

    def add(self, M: int, h: float, err_u: float, err_chi: float, err_s: float):
        if self.M and M <= self.M[-1]:
            raise PreconditionError("resolutions must be strictly increasing")
        self.M.append(int(M))
        self.h.append(float(h))
        self.err_u.append(float(err_u))
        self.err_chi.append(float(err_chi))
        self.err_s.append(float(err_s))

    def errors(self, name: str) -> list:
        return getattr(self, f"err_{name}")

    def slopes(self) -> dict:
        return {n: fit_convergence_rate(self.h, self.errors(n)) for n in self.COLUMNS}

    def pairwise_rates(self, name: str) -> list:
        e, h = self.errors(name), self.h
        rates = [math.nan]
        for i in range(1, len(e)):
            rates.append(math.log(e[i - 1] / e[i]) / math.log(h[i - 1] / h[i]))
        return rates

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["M", "h", "err_u", "err_chi", "err_s", "rate_u", "rate_chi", "rate_s"])
        rates = [self.pairwise_rates(n) for n in self.COLUMNS]
        for i in range(len(self.M)):
            w.writerow([self.M[i], repr(self.h[i]), repr(self.err_u[i]), repr(self.err_chi[i]),
                        repr(self.err_s[i])] + ["" if math.isnan(r[i]) else repr(r[i]) for r in rates])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"{'M':>7} {'h':>11} {'err_u':>11} {'err_chi':>11} {'err_s':>11}"]
        for i in range(len(self.M)):
            lines.append(f"{self.M[i]:>7d} {self.h[i]:11.4e} {self.err_u[i]:11.4e} "
                         f"{self.err_chi[i]:11.4e} {self.err_s[i]:11.4e}")
        if len(self.M) >= 3:
            sl = self.slopes()
            lines.append("fitted slopes: " + ", ".join(f"{k}={v:.3f}" for k, v in sl.items()))
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# stability ledger


def _exp_growth(t, rate):
    # e^{t L} and e^{t L} - 1 without overflow warnings
    with np.errstate(over="ignore"):
        return np.exp(t * rate), np.expm1(t * rate)


@dataclass
class StabilityLedger:
    """Constants of the a priori TV, L1 and exchange-term bounds.

    The equilibrium bound ``C1`` holds for the regularized flux; the
    kinetic bounds ``C4``..``C8`` hold for the exchange scheme.  Each
    constant is a function of the elapsed time.
    """

    L1: float
    L2: float
    L_q: float
    L_qx: float
    L_chistar: float
    L3: float
    omega_S: float
    k3: float = 0.0
    tv_u0: float = 0.0
    tv_xpsi0: float = 0.0
    norm_xpsi0: float = 0.0
    q0_l1: float = 0.0

    def C1(self, t):
        grow, grow_m1 = _exp_growth(t, self.L1)
        return self.tv_u0 * grow + 2.0 * self.omega_S * grow_m1

    def C2(self, t):
        return self.L2 * (self.C1(t) + self.omega_S)

    def C3(self, t):
        return t * (self.C1(t) + self.C2(t))

    @property
    def C4(self) -> float:
        return 2.0 * self.k3 * self.omega_S * self.L_chistar

    def C5(self, t):
        return self.q0_l1 + t * (self.C6(t) + self.L3 * self.omega_S)

    def C6(self, t):
        return self.L_q * (self.tv_xpsi0 + self.C4 * t) + self.L_qx * self.norm_xpsi0

    def C7(self, t):
        k3 = self.k3
        return 2 * k3 * self.q0_l1 + (1 + 2 * k3 * t) * self.C6(t) + 2 * k3 * t * self.L3 * self.omega_S

    def C8(self, t):
        return t * (self.C4 * t + self.C7(t))

    def summary(self, T: float) -> dict:
        return {"C1": float(self.C1(T)), "C2": float(self.C2(T)), "C3": float(self.C3(T)),
                "C4": self.C4, "C5": float(self.C5(T)), "C6": float(self.C6(T)),
                "C7": float(self.C7(T)), "C8": float(self.C8(T))}


def stability_ledger_eval(lipschitz, omega_S: float, k3: float = 0.0, tv_u0: float = 0.0,
                          tv_xpsi0: float = 0.0, norm_xpsi0: float = 0.0,
                          q0_l1: float = 0.0) -> StabilityLedger:
    """Assemble the ledger from Lipschitz data and initial-state measurements."""
    return StabilityLedger(lipschitz.L1, lipschitz.L2, lipschitz.L_q, lipschitz.L_qx,
                           lipschitz.L_chistar, lipschitz.L3, omega_S, k3, tv_u0, tv_xpsi0,
                           norm_xpsi0, q0_l1)


@dataclass
class LedgerVerdict:
    name: str
    ok: bool
    worst_margin: float
    detail: str = ""


def check_bound(name: str, measured, bound, rel_tol: float = 1e-12) -> LedgerVerdict:
    """Every ``measured[n] <= bound[n]`` (with a small relative allowance)."""
    measured = np.asarray(measured, dtype=float)
    bound = np.asarray(bound, dtype=float)
    slack = rel_tol * np.maximum(1.0, np.abs(bound))
    with np.errstate(invalid="ignore"):
        margin = bound - measured
    ok = bool(np.all(measured <= bound + slack))
    finite = margin[np.isfinite(margin)]
    worst = float(np.min(finite)) if finite.size else math.inf
    return LedgerVerdict(name, ok, worst)


def check_nonincreasing(name: str, series, rel_tol: float = 1e-12) -> LedgerVerdict:
    series = np.asarray(series, dtype=float)
    if series.size < 2:
        return LedgerVerdict(name, True, math.inf)
    inc = np.diff(series)
    slack = rel_tol * np.maximum(1.0, np.abs(series[:-1]))
    return LedgerVerdict(name, bool(np.all(inc <= slack)), float(-np.max(inc)))
