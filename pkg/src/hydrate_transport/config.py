"""INI-style run configuration.

A configuration has the sections ``[run] [grid] [model] [solubility] [flow]
[stepping] [bc] [init] [output]`` plus ``[batch]``, ``[compare]`` and
``[sweep]`` for the non-transport scenario kinds.  ``[run] preset = name``
loads a compiled-in preset first; the remaining keys override it.  Unknown
sections or keys are errors.

Solubility layers use a small call syntax, for example::

    [solubility]
    kind = layered
    breakpoints = 1, 2
    layers = linear(1, -0.3); exponential(1, 0.2, shift=1, offset=-0.2); linear(0.75, -0.1)
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, HydrateError
from .flux import (AffineRampLaw, ExponentialDepth, FlowField, FrozenLaw, Layered, Linear,
                   Shifted, SolubilityField, Tabulated, WarmingScenario)
from .transport import (BoundaryConditions, BoxProfile, CustomProfile, Grid1D, RunConfig,
                        ZeroProfile)

SCHEMA = {
    "run": {"name", "preset", "kind"},
    "grid": {"x_min", "x_max", "M"},
    "model": {"type", "R", "k3", "reg_alpha", "phi", "units"},
    "solubility": {"kind", "a", "b", "intercept", "slope", "breakpoints", "layers", "file",
                   "warming", "c_pressure", "c_temperature", "x_top", "D_ref0", "T_ref0",
                   "sea_rise_rate", "temp_rise_rate", "G_H", "G_T", "rho_l", "g"},
    "flow": {"q", "q_file", "d_m", "source"},
    "stepping": {"T_final", "nu", "tau", "K", "interpolate_chi", "n_min"},
    "bc": {"inflow", "chi_left"},
    "init": {"profile", "value", "a", "b", "file", "spinup_T", "spinup_d_m"},
    "output": {"snapshots", "dir"},
    "batch": {"chi0", "s0", "chi_star", "k", "tau", "steps"},
    "compare": {"k3_values"},
    "sweep": {"resolutions", "reference", "fine_M", "support_a", "support_b"},
}

KINDS = ("simulation", "batch", "kinetic_vs_eq")


@dataclass
class BatchSpec:
    model: str
    chi0: float
    s0: float
    chi_star: float
    R: float
    k: float
    tau: float
    steps: int


@dataclass
class SweepSpec:
    resolutions: list
    reference: str = "fine"
    fine_M: int = 12800
    support: tuple = (-math.inf, 0.0)


@dataclass
class RunSpec:
    """A parsed configuration: what to run and where to write it."""

    name: str
    kind: str
    run: Optional[RunConfig] = None
    batch: Optional[BatchSpec] = None
    compare_k3: list = field(default_factory=list)
    sweep: Optional[SweepSpec] = None
    spinup_T: Optional[float] = None
    spinup_d_m: float = 0.0
    out_dir: str = "."
    units: str = ""
    base_solubility: Optional[SolubilityField] = None


class _Section:
    """Typed access to one config section with key-path error messages."""

    def __init__(self, parser: configparser.ConfigParser, name: str):
        self.name = name
        self.data = dict(parser[name]) if parser.has_section(name) else {}

    def has(self, key):
        return key in self.data

    def _err(self, key, msg):
        return ConfigError(f"{self.name}.{key}: {msg}")

    def str(self, key, default=None):
        if key not in self.data:
            if default is None:
                raise self._err(key, "missing required key")
            return default
        return self.data[key].strip()

    def float(self, key, default=None):
        if key not in self.data:
            if default is None:
                raise self._err(key, "missing required key")
            return default
        try:
            return float(self.data[key])
        except ValueError:
            raise self._err(key, f"expected a number, got {self.data[key]!r}") from None

    def int(self, key, default=None):
        v = self.float(key, default)
        if v is None or v != int(v):
            raise self._err(key, f"expected an integer, got {self.data.get(key)!r}")
        return int(v)

    def bool(self, key, default=False):
        if key not in self.data:
            return default
        v = self.data[key].strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise self._err(key, f"expected a boolean, got {self.data[key]!r}")

    def floats(self, key, default=None):
        if key not in self.data:
            if default is None:
                raise self._err(key, "missing required key")
            return default
        try:
            return [float(v) for v in re.split(r"[,\s]+", self.data[key].strip()) if v]
        except ValueError:
            raise self._err(key, f"expected a list of numbers, got {self.data[key]!r}") from None


def _read(text: str, source: str, strict: bool = True) -> configparser.ConfigParser:
    # presets are layered by repeating sections, so they are read non-strictly
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None,
                                       strict=strict)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"parse error: {exc}") from None
    return parser


def _merge(base: configparser.ConfigParser, over: configparser.ConfigParser):
    for sec in over.sections():
        if not base.has_section(sec):
            base.add_section(sec)
        for k, v in over[sec].items():
            base[sec][k] = v


def _check_keys(parser: configparser.ConfigParser):
    for sec in parser.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"{sec}: unknown section")
        for key in parser[sec]:
            if key not in SCHEMA[sec]:
                raise ConfigError(f"{sec}.{key}: unknown key")


_CALL = re.compile(r"^\s*(\w+)\s*\(([^)]*)\)\s*$")


def _parse_call(expr: str, where: str) -> SolubilityField:
    m = _CALL.match(expr)
    if not m:
        raise ConfigError(f"{where}: cannot parse layer {expr!r}")
    kind, args = m.group(1), [a.strip() for a in m.group(2).split(",") if a.strip()]
    pos, kw = [], {}
    try:
        for a in args:
            if "=" in a:
                k, v = a.split("=", 1)
                kw[k.strip()] = float(v)
            else:
                pos.append(float(a))
    except ValueError:
        raise ConfigError(f"{where}: non-numeric argument in {expr!r}") from None
    shift, offset = kw.pop("shift", 0.0), kw.pop("offset", 0.0)
    if kw:
        raise ConfigError(f"{where}: unknown layer options {sorted(kw)}")
    if kind in ("linear", "exponential") and len(pos) != 2:
        raise ConfigError(f"{where}: {kind}() takes two arguments")
    if kind == "linear":
        base = Linear(*pos)
    elif kind == "exponential":
        base = ExponentialDepth(*pos)
    else:
        raise ConfigError(f"{where}: unknown layer kind {kind!r}")
    return Shifted(base, shift, offset) if (shift or offset) else base


def _solubility(sec: _Section) -> SolubilityField:
    kind = sec.str("kind", "exponential")
    if kind == "exponential":
        return ExponentialDepth(sec.float("a"), sec.float("b"))
    if kind == "linear":
        return Linear(sec.float("intercept"), sec.float("slope"))
    if kind == "layered":
        bps = sec.floats("breakpoints")
        layers = [_parse_call(e, "solubility.layers") for e in sec.str("layers").split(";") if e.strip()]
        try:
            return Layered(bps, layers)
        except HydrateError as exc:
            raise ConfigError(f"solubility.layers: {exc}") from None
    if kind == "tabulated":
        try:
            return Tabulated.from_file(sec.str("file"))
        except OSError as exc:
            raise ConfigError(f"solubility.file: {exc}") from None
    raise ConfigError(f"solubility.kind: unknown kind {kind!r}")


def _warming(sec: _Section, base: SolubilityField, grid: Grid1D) -> SolubilityField:
    mode = sec.str("warming", "none")
    if mode == "none":
        return base
    if mode not in ("affine", "frozen"):
        raise ConfigError(f"solubility.warming: unknown law {mode!r}")
    law = FrozenLaw() if mode == "frozen" else AffineRampLaw(sec.float("c_pressure", 0.0),
                                                             sec.float("c_temperature", 0.0))
    defaults = WarmingScenario(base, grid.x_max)
    opts = {k: sec.float(k, getattr(defaults, k)) for k in
            ("D_ref0", "T_ref0", "sea_rise_rate", "temp_rise_rate", "G_H", "G_T", "rho_l", "g")}
    scenario = WarmingScenario(base, sec.float("x_top", grid.x_max), law=law, **opts)
    return scenario.field()


def _flow(sec: _Section) -> FlowField:
    if sec.has("q") and sec.has("q_file"):
        raise ConfigError("flow.q_file: give either q or q_file, not both")
    if sec.has("q_file"):
        tab = Tabulated.from_file(sec.str("q_file"))
        q = lambda x, t, tab=tab: tab(x)
    else:
        q = sec.float("q", 0.0)
    flow = FlowField(q, sec.float("d_m", 0.0), sec.float("source", 0.0))
    if flow.d_m < 0:
        raise ConfigError("flow.d_m: must be nonnegative")
    return flow


def _init_profile(sec: _Section, grid: Grid1D):
    kind = sec.str("profile", "zero")
    if kind in ("zero", "spinup"):
        return ZeroProfile()
    if kind == "step":
        return BoxProfile(sec.float("value"), -math.inf, sec.float("b", 0.0))
    if kind == "box":
        return BoxProfile(sec.float("value"), sec.float("a"), sec.float("b"))
    if kind == "file":
        tab = Tabulated.from_file(sec.str("file"))
        return CustomProfile(lambda x, tab=tab: tab(x))
    raise ConfigError(f"init.profile: unknown profile {kind!r}")


def build_spec(parser: configparser.ConfigParser) -> RunSpec:
    _check_keys(parser)
    run = _Section(parser, "run")
    name = run.str("name", run.str("preset", "run"))
    kind = run.str("kind", "simulation")
    if kind not in KINDS:
        raise ConfigError(f"run.kind: expected one of {KINDS}, got {kind!r}")
    model = _Section(parser, "model")
    mtype = model.str("type", "EQ").upper()
    out = _Section(parser, "output")
    spec = RunSpec(name=name, kind=kind, out_dir=out.str("dir", "."), units=model.str("units", ""))

    if kind == "batch" or mtype in ("KIN1", "KIN2") and not parser.has_section("grid"):
        if mtype not in ("KIN1", "KIN2", "KIN3"):
            raise ConfigError(f"model.type: batch runs need KIN1, KIN2 or KIN3, not {mtype}")
        b = _Section(parser, "batch")
        spec.kind = "batch"
        spec.batch = BatchSpec(mtype, b.float("chi0"), b.float("s0"), b.float("chi_star"),
                               model.float("R"), b.float("k"), b.float("tau", 1.0), b.int("steps"))
        if spec.batch.steps < 0:
            raise ConfigError("batch.steps: must be nonnegative")
        return spec

    if mtype in ("KIN1", "KIN2"):
        raise ConfigError(f"model.type: {mtype} is a batch model; transport supports EQ and KIN3")
    if mtype not in ("EQ", "KIN3"):
        raise ConfigError(f"model.type: unknown model {mtype!r}")

    g = _Section(parser, "grid")
    M = g.int("M")
    if M < 2:
        raise ConfigError("grid.M: need at least two cells")
    if not g.float("x_max") > g.float("x_min"):
        raise ConfigError("grid.x_max: must exceed grid.x_min")
    grid = Grid1D(g.float("x_min"), g.float("x_max"), M)
    sol_sec = _Section(parser, "solubility")
    base = _solubility(sol_sec)
    solubility = _warming(sol_sec, base, grid)
    flow = _flow(_Section(parser, "flow"))
    st = _Section(parser, "stepping")
    bc = _Section(parser, "bc")
    inflow = bc.str("inflow", "compact")
    if inflow not in ("dirichlet", "compact"):
        raise ConfigError(f"bc.inflow: expected dirichlet or compact, got {inflow!r}")
    bcs = BoundaryConditions(inflow, bc.float("chi_left", 0.0))
    init = _Section(parser, "init")
    reg = model.float("reg_alpha", math.nan)
    tau = st.float("tau", math.nan)
    snapshots = out.floats("snapshots", [])

    cfg = RunConfig(
        grid=grid, solubility=solubility, flow=flow, R=model.float("R"),
        T_final=st.float("T_final"), model=mtype, k3=model.float("k3", 0.0),
        nu=st.float("nu", 0.9), tau=None if math.isnan(tau) else tau, K=st.int("K", 1),
        n_min=st.int("n_min", 100), bcs=bcs, init=_init_profile(init, grid),
        reg_alpha=None if math.isnan(reg) else reg, snapshot_times=snapshots,
        interpolate_chi=st.bool("interpolate_chi"), phi=model.float("phi", 1.0), name=name)
    try:
        cfg.validate()
    except ConfigError:
        raise
    except HydrateError as exc:
        raise ConfigError(str(exc)) from None
    spec.run = cfg
    spec.base_solubility = base

    if init.str("profile", "zero") == "spinup":
        spec.spinup_T = init.float("spinup_T")
        spec.spinup_d_m = init.float("spinup_d_m", 0.0)

    if kind == "kinetic_vs_eq":
        spec.compare_k3 = _Section(parser, "compare").floats("k3_values")
        if len(spec.compare_k3) < 1 or min(spec.compare_k3) <= 0:
            raise ConfigError("compare.k3_values: need positive rates")

    if parser.has_section("sweep"):
        sw = _Section(parser, "sweep")
        res = [int(v) for v in sw.floats("resolutions", [])]
        ref = sw.str("reference", "fine")
        if ref not in ("fine", "analytical"):
            raise ConfigError(f"sweep.reference: expected fine or analytical, got {ref!r}")
        spec.sweep = SweepSpec(res, ref, sw.int("fine_M", 12800),
                               (sw.float("support_a", -math.inf), sw.float("support_b", 0.0)))
    return spec


def parse_config(text: str, source: str = "<config>") -> RunSpec:
    """Parse configuration text, applying a preset when one is named."""
    from .presets import PRESETS

    user = _read(text, source)
    preset = user.get("run", "preset", fallback=None)
    if preset is not None:
        preset = preset.strip()
        if preset not in PRESETS:
            raise ConfigError(f"run.preset: unknown preset {preset!r}")
        merged = _read(PRESETS[preset], f"<preset {preset}>", strict=False)
        _merge(merged, user)
        if not user.has_option("run", "name"):
            merged["run"]["name"] = preset
    else:
        merged = user
    return build_spec(merged)


def load_preset(name: str) -> RunSpec:
    return parse_config(f"[run]\npreset = {name}\n", f"<preset {name}>")
