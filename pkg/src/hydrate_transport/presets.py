"""Compiled-in scenario presets.

Model problems are dimensionless.  The marine-basin presets use metres and
years; their domain length is the thickness of the hydrate stability zone
above its base (123.49 m).
"""

from __future__ import annotations

_MASSCONS = """
[run]
kind = simulation
[grid]
x_min = -1
x_max = 3
M = 100
[model]
type = EQ
R = 2
[flow]
q = 1
[stepping]
T_final = 1
nu = 0.9
[bc]
inflow = compact
[init]
profile = box
value = 1
a = -1
b = 0
[sweep]
reference = analytical
resolutions = 100, 200, 400, 800, 1600
support_a = -1
support_b = 0
"""

_BASIN = """
[run]
kind = simulation
[grid]
x_min = 0
x_max = 123.49
M = 100
[model]
type = EQ
R = 0.1203
units = m, y
[solubility]
kind = exponential
a = 0.0024
b = 0.012
[flow]
q = 5e-3
[stepping]
T_final = 1e4
nu = 0.9
[bc]
inflow = dirichlet
chi_left = 2e-3
[init]
profile = zero
[sweep]
reference = analytical
resolutions = 100, 200, 400, 800, 1600
"""

_WARMING = _BASIN + """
[solubility]
warming = affine
c_pressure = 0
c_temperature = 0.0716
[flow]
d_m = 3e-2
[stepping]
T_final = 150
tau = 1
K = 1
[init]
profile = spinup
spinup_T = 1e5
"""

_KINETIC = """
[run]
kind = simulation
[grid]
x_min = 0
x_max = 2
M = 100
[model]
type = KIN3
R = 2
k3 = 100
[solubility]
kind = exponential
a = 1
b = 0.5
[flow]
q = 1
[stepping]
T_final = 1
nu = 0.9
[bc]
inflow = dirichlet
chi_left = 0.8395
[init]
profile = zero
[sweep]
reference = fine
fine_M = 12800
resolutions = 100, 200, 400, 800
"""

_BATCH = """
[run]
kind = batch
[model]
type = {model}
R = 2
[batch]
chi0 = {chi0}
s0 = {s0}
chi_star = 1
k = 1
tau = 1
steps = {steps}
"""

PRESETS = {
    "masscons_exp": _MASSCONS + """
[solubility]
kind = exponential
a = 1
b = 0.5
""",
    "masscons_lin": _MASSCONS + """
[solubility]
kind = linear
intercept = 1
slope = -0.26
""",
    "ulleung_eq": _BASIN + """
[model]
reg_alpha = 1e-4
""",
    "ulleung_sharp": _BASIN,
    "heterogeneous": """
[run]
kind = simulation
[grid]
x_min = 0
x_max = 3
M = 100
[model]
type = EQ
R = 2
[solubility]
kind = layered
breakpoints = 1, 2
layers = linear(1, -0.3); exponential(1, 0.2, shift=1, offset=-0.2); linear(0.75, -0.1)
[flow]
q = 1
d_m = 0
[stepping]
T_final = 2.4
[bc]
inflow = dirichlet
chi_left = 0.8
[init]
profile = zero
""",
    "kinetic_eq": _KINETIC + """
[model]
type = EQ
""",
    "kinetic_k10": _KINETIC + """
[model]
k3 = 10
""",
    "kinetic_k100": _KINETIC,
    "kinetic_vs_eq": _KINETIC + """
[run]
kind = kinetic_vs_eq
[compare]
k3_values = 10, 100
""",
    "warming_eq": _WARMING,
    "warming_eq_K150": _WARMING + """
[stepping]
K = 150
""",
    "warming_kin100": _WARMING + """
[model]
type = KIN3
k3 = 100
""",
    "warming_kin001": _WARMING + """
[model]
type = KIN3
k3 = 0.01
""",
}

for _model in ("KIN1", "KIN2", "KIN3"):
    _m = _model.lower()
    PRESETS[f"batch_{_m}_sat"] = _BATCH.format(model=_model, chi0=0.2, s0=0.8, steps=100)
    PRESETS[f"batch_{_m}_sat_b"] = _BATCH.format(model=_model, chi0=1.4, s0=0.4, steps=100)
    PRESETS[f"batch_{_m}_unsat"] = _BATCH.format(model=_model, chi0=0.25, s0=0.2, steps=20)

# the kinetic presets feed in water at the solubility of depth 0.35,
# chi_left = exp(-0.5 * 0.35)
KINETIC_X_LEFT = 0.35
