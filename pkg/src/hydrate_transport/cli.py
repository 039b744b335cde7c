"""Command-line driver: run presets or config files, sweeps and batch tests.

Exit codes: 0 on success, 2 when a run finishes but a stability-ledger
bound or the mass balance is violated, 1 on any configuration or
solver error (including a refused time step).
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import diagnostics as dg
from .batch_kinetics import (BatchState, KineticRate, batch_trajectory, mass_drift,
                             trajectory_q)
from .config import RunSpec, load_preset, parse_config
from .errors import ConfigError, HydrateError
from .flux import FlowField, lipschitz_constants
from .presets import PRESETS
from .transport import CustomProfile, RunResult, run_simulation

log = logging.getLogger("hydrate_transport")

EXIT_OK, EXIT_ERROR, EXIT_LEDGER = 0, 1, 2
MASS_TOL = 1e-10


def _fmt(v) -> str:
    # shortest round-trip representation keeps output byte-deterministic
    return repr(float(v))


def _write_csv(path, header, columns):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_snapshot(out_dir, name, snap):
    path = os.path.join(out_dir, f"{name}_t{format(snap.t, '.6g')}.csv")
    _write_csv(path, ("x", "u", "chi", "s", "psi"), (snap.x, snap.u, snap.chi, snap.s, snap.psi))
    return path


def write_diagnostics(out_dir, name, result: RunResult):
    d = result.diagnostics.as_arrays()
    cols = list(d) + ["mass_defect"]
    path = os.path.join(out_dir, f"{name}_diag.csv")
    _write_csv(path, cols, [d[c] for c in d] + [result.diagnostics.mass_defect()])
    return path


# ---------------------------------------------------------------------------
# ledger


def ledger_verdicts(result: RunResult) -> tuple[list, Optional[dg.StabilityLedger]]:
    """Mass balance plus whichever a priori bounds apply to this run.

    The TV and L1 bounds are checked for advective runs without diffusion,
    sources or time-dependent solubility.  The L1 bound on ``(X, Psi)`` is
    applied to ``||(X, Psi)||_1`` minus the cumulative boundary inflow.
    """
    cfg = result.config
    diag = result.diagnostics
    d = diag.as_arrays()
    scale = max(1.0, float(np.max(np.abs(d["mass"]))))
    verdicts = [dg.check_bound("mass balance", diag.mass_defect(), MASS_TOL * scale, rel_tol=0.0)]
    flow = cfg.effective_flow()
    if flow.d_m > 0 or flow.has_source or cfg.solubility.time_dependent:
        return verdicts, None
    if cfg.model == "EQ" and cfg.eps is None:
        return verdicts, None
    u_max = max(cfg.R, float(np.max(result.final.u)), float(np.max(result.initial.u)))
    lip = lipschitz_constants(cfg.solubility, flow, cfg.grid, eps=cfg.eps, u_max=u_max)
    omega = float(np.max(d["support"]))
    t = d["t"]
    if cfg.model == "EQ":
        led = dg.stability_ledger_eval(lip, omega, tv_u0=d["tv_u"][0])
        verdicts.append(dg.check_bound("TV(U) <= C1(t)", d["tv_u"], led.C1(t)))
    else:
        led = dg.stability_ledger_eval(lip, omega, k3=cfg.k3, tv_xpsi0=d["tv_xpsi"][0],
                                       norm_xpsi0=d["l1_xpsi"][0], q0_l1=d["q_l1"][0])
        verdicts.append(dg.check_bound("TV(X,Psi) <= TV0 + C4 t", d["tv_xpsi"],
                                       d["tv_xpsi"][0] + led.C4 * t))
        verdicts.append(dg.check_nonincreasing("||(X,Psi)||_1 - inflow nonincreasing",
                                               d["l1_xpsi"] - d["boundary_net"]))
        verdicts.append(dg.check_bound("||W - X||_1 <= C5(t)", d["q_l1"], led.C5(t)))
    return verdicts, led


# ---------------------------------------------------------------------------
# scenarios


def _spinup(spec: RunSpec):
    """Equilibrium state of the undisturbed basin after ``spinup_T``."""
    cfg = spec.run
    flow = FlowField(cfg.flow.q, spec.spinup_d_m, cfg.flow.source)
    pre = dataclasses.replace(cfg, solubility=spec.base_solubility, flow=flow, model="EQ",
                              k3=0.0, T_final=spec.spinup_T, tau=None, K=1, reg_alpha=None,
                              snapshot_times=(), interpolate_chi=False, initial_psi=None)
    res = run_simulation(pre)
    log.info("spin-up to t=%g took %d steps", spec.spinup_T, res.n_steps)
    return res.final


def prepare_config(spec: RunSpec, snapshots: Optional[Sequence[float]] = None):
    cfg = spec.run
    if snapshots is not None:
        cfg = dataclasses.replace(cfg, snapshot_times=tuple(snapshots))
    elif not cfg.snapshot_times:
        cfg = dataclasses.replace(cfg, snapshot_times=(cfg.T_final,))
    if spec.spinup_T is not None:
        ic = _spinup(spec)
        cfg = dataclasses.replace(cfg, init=CustomProfile(ic.u.copy()),
                                  initial_psi=ic.psi.copy() if cfg.model == "KIN3" else None)
    return cfg


def _run_batch(spec: RunSpec, out_dir: str, stream) -> int:
    b = spec.batch
    init = BatchState(b.chi0, b.s0)
    rate = KineticRate(b.k, b.tau)
    states = batch_trajectory(b.model, init, b.chi_star, b.R, rate, b.steps)
    q = trajectory_q(b.model, states, b.chi_star, b.k)
    chi = np.array([s.chi for s in states])
    s = np.array([s.s for s in states])
    psi = np.array([st.psi(b.R) for st in states])
    u = chi + psi
    path = os.path.join(out_dir, f"{spec.name}_trajectory.csv")
    _write_csv(path, ("n", "chi", "s", "psi", "u", "q"), (np.arange(len(states)), chi, s, psi, u, q))
    drift = mass_drift(states, b.R)
    print(f"{spec.name}: {b.model} {b.steps} steps, final (chi, s) = ({_fmt(chi[-1])}, "
          f"{_fmt(s[-1])}), mass drift {drift:.3e}", file=stream)
    print(f"wrote {path}", file=stream)
    return EXIT_OK if drift <= MASS_TOL * max(1.0, abs(u[0])) else EXIT_LEDGER


def _report(result: RunResult, verdicts, led, stream):
    cfg = result.config
    print(f"{cfg.name}: model {cfg.model}, M={cfg.grid.M}, tau={result.tau:.6g}, "
          f"N={result.n_steps}, T={cfg.T_final:g}", file=stream)
    if led is not None:
        print("ledger constants at T: " + ", ".join(
            f"{k}={v:.4g}" for k, v in led.summary(cfg.T_final).items()), file=stream)
    for v in verdicts:
        print(f"  [{'ok' if v.ok else 'VIOLATED'}] {v.name} (worst margin {v.worst_margin:.3e})",
              file=stream)


def run_scenario(spec: RunSpec, out_dir: Optional[str] = None,
                 snapshots: Optional[Sequence[float]] = None, stream=None) -> int:
    """Execute a parsed configuration, write outputs, return the exit code."""
    stream = stream or sys.stdout
    out_dir = out_dir or spec.out_dir
    os.makedirs(out_dir, exist_ok=True)
    if spec.kind == "batch":
        return _run_batch(spec, out_dir, stream)

    cfg = prepare_config(spec, snapshots)
    if spec.kind == "kinetic_vs_eq":
        return _run_compare(spec, cfg, out_dir, stream)

    result = run_simulation(cfg)
    for snap in result.snapshots:
        print(f"wrote {write_snapshot(out_dir, spec.name, snap)}", file=stream)
    print(f"wrote {write_diagnostics(out_dir, spec.name, result)}", file=stream)
    verdicts, led = ledger_verdicts(result)
    _report(result, verdicts, led, stream)
    return EXIT_OK if all(v.ok for v in verdicts) else EXIT_LEDGER


def _run_compare(spec: RunSpec, cfg, out_dir, stream) -> int:
    eq = run_simulation(dataclasses.replace(cfg, model="EQ", k3=0.0))
    h = cfg.grid.h
    code = EXIT_OK
    rows = []
    for k3 in spec.compare_k3:
        kin = run_simulation(dataclasses.replace(cfg, model="KIN3", k3=k3, reg_alpha=None))
        dist = dg.l1_error(kin.final.u, eq.final.u, h)
        rows.append((k3, dist, dg.l1_error(kin.final.chi, eq.final.chi, h),
                     dg.l1_error(kin.final.s, eq.final.s, h)))
        print(f"k3={k3:g}: ||U_kin - U_eq||_1 = {dist:.6e}", file=stream)
        name = f"{spec.name}_k{format(k3, 'g')}"
        for snap in kin.snapshots:
            write_snapshot(out_dir, name, snap)
        verdicts, _ = ledger_verdicts(kin)
        if not all(v.ok for v in verdicts):
            code = EXIT_LEDGER
    for snap in eq.snapshots:
        write_snapshot(out_dir, f"{spec.name}_eq", snap)
    arr = np.array(rows)
    path = os.path.join(out_dir, f"{spec.name}_distance.csv")
    _write_csv(path, ("k3", "l1_u", "l1_chi", "l1_s"), arr.T)
    print(f"wrote {path}", file=stream)
    return code


# ---------------------------------------------------------------------------
# convergence


def convergence_sweep(spec: RunSpec, resolutions: Optional[Sequence[int]] = None,
                      reference: Optional[str] = None, fine_M: Optional[int] = None) -> dg.ConvergenceTable:
    """L1 errors over a sequence of grids against an analytic or fine-grid reference.

    The analytic reference is the advected slug of the pure-advection
    equilibrium problem, available for constant ``q`` with compact support
    data and no diffusion.
    """
    sw = spec.sweep
    resolutions = list(resolutions or (sw.resolutions if sw else []))
    reference = reference or (sw.reference if sw else "fine")
    fine_M = fine_M or (sw.fine_M if sw else 12800)
    if len(set(resolutions)) < 3:
        raise ConfigError("sweep.resolutions: need at least three distinct resolutions")
    resolutions = sorted(set(resolutions))
    base = prepare_config(spec, ())
    table = dg.ConvergenceTable()

    def run_at(M):
        grid = dataclasses.replace(base.grid, M=int(M))
        return run_simulation(dataclasses.replace(base, grid=grid, snapshot_times=()))

    if reference == "analytical":
        flow = base.effective_flow()
        if callable(flow.q) or flow.d_m > 0 or flow.has_source or base.model != "EQ":
            raise ConfigError("sweep.reference: analytic reference needs constant q, no "
                              "diffusion and the EQ model")
        support = sw.support if sw else (-math.inf, 0.0)
        # slug concentration: the inflow value for a step, the box value otherwise
        chi_L = base.bcs.chi_left if base.bcs.inflow == "dirichlet" else getattr(base.init, "value", 0.0)
        for M in resolutions:
            res = run_at(M)
            x = res.final.x
            ex = dg.analytical_solution_box(x, base.T_final, chi_L, float(flow.q), base.R,
                                            base.solubility, support=support,
                                            x_bounds=(base.grid.x_min, base.grid.x_max))
            h = res.config.grid.h
            table.add(M, h, dg.l1_error(res.final.u, ex.u, h), dg.l1_error(res.final.chi, ex.chi, h),
                      dg.l1_error(res.final.s, ex.s, h))
        return table

    if fine_M % max(resolutions) != 0 or any(fine_M % M for M in resolutions):
        raise ConfigError("sweep.fine_M: must be a multiple of every resolution")
    ref = run_at(fine_M)
    for M in resolutions:
        res = run_at(M)
        h = res.config.grid.h
        table.add(M, h, dg.l1_error(res.final.u, ref.final.u, h, restrict_fine=True),
                  dg.l1_error(res.final.chi, ref.final.chi, h, restrict_fine=True),
                  dg.l1_error(res.final.s, ref.final.s, h, restrict_fine=True))
    return table


# ---------------------------------------------------------------------------
# entry point


def _load(target: str) -> RunSpec:
    if target in PRESETS:
        return load_preset(target)
    if not os.path.isfile(target):
        raise ConfigError(f"{target}: neither a preset nor a readable file")
    with open(target) as fh:
        return parse_config(fh.read(), source=target)


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hydrate-transport",
                                description="Methane hydrate transport and kinetics simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a preset or config file")
    r.add_argument("target")
    r.add_argument("--out-dir", default=None)
    r.add_argument("--snapshots", type=_float_list, default=None)

    s = sub.add_parser("sweep", help="convergence study")
    s.add_argument("target")
    s.add_argument("--resolutions", type=_int_list, default=None)
    s.add_argument("--reference", choices=("analytical", "fine"), default=None)
    s.add_argument("--fine-M", type=int, default=None)
    s.add_argument("--out-dir", default=None)

    b = sub.add_parser("batch", help="batch kinetics trajectory or randomized check")
    b.add_argument("model", choices=("KIN1", "KIN2", "KIN3"))
    b.add_argument("--chi0", type=float, default=0.2)
    b.add_argument("--s0", type=float, default=0.8)
    b.add_argument("--chi-star", type=float, default=1.0)
    b.add_argument("--R", type=float, default=2.0)
    b.add_argument("--k", type=float, default=1.0)
    b.add_argument("--tau", type=float, default=1.0)
    b.add_argument("--steps", type=int, default=100)
    b.add_argument("--random-init", type=int, default=0,
                   help="run this many random admissible initial states instead")
    b.add_argument("--seed", type=int, default=0, help="seed for --random-init")
    b.add_argument("--out-dir", default=".")

    sub.add_parser("list-presets", help="print preset names")
    return p


def _batch_fuzz(args, stream) -> int:
    rng = np.random.default_rng(args.seed)
    rate = KineticRate(args.k, args.tau)
    worst = 0.0
    for _ in range(args.random_init):
        init = BatchState(rng.uniform(0.0, args.R), rng.uniform(0.0, 1.0))
        states = batch_trajectory(args.model, init, args.chi_star, args.R, rate, args.steps)
        worst = max(worst, mass_drift(states, args.R))
    print(f"{args.model}: {args.random_init} random trajectories (seed {args.seed}), "
          f"worst mass drift {worst:.3e}", file=stream)
    return EXIT_OK if worst <= MASS_TOL * args.R else EXIT_LEDGER


def main(argv: Optional[Sequence[str]] = None, stream=None) -> int:
    stream = stream or sys.stdout
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if args.command == "list-presets":
            for name in sorted(PRESETS):
                print(name, file=stream)
            return EXIT_OK
        if args.command == "run":
            return run_scenario(_load(args.target), args.out_dir, args.snapshots, stream)
        if args.command == "sweep":
            spec = _load(args.target)
            table = convergence_sweep(spec, args.resolutions, args.reference, args.fine_M)
            print(table.to_text(), file=stream)
            out_dir = args.out_dir or spec.out_dir
            os.makedirs(out_dir, exist_ok=True)
            path = os.path.join(out_dir, f"{spec.name}_convergence.csv")
            with open(path, "w") as fh:
                fh.write(table.to_csv())
            print(f"wrote {path}", file=stream)
            return EXIT_OK
        if args.command == "batch":
            if args.random_init > 0:
                return _batch_fuzz(args, stream)
            text = (f"[run]\nkind = batch\nname = batch_{args.model.lower()}\n[model]\n"
                    f"type = {args.model}\nR = {args.R!r}\n[batch]\nchi0 = {args.chi0!r}\n"
                    f"s0 = {args.s0!r}\nchi_star = {args.chi_star!r}\nk = {args.k!r}\n"
                    f"tau = {args.tau!r}\nsteps = {args.steps}\n")
            return run_scenario(parse_config(text), args.out_dir, None, stream)
    except HydrateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
