"""Command-line front end.

    switchforce certify|simulate|design|traj <config> [--out DIR] [--seed N]

``<config>`` is a YAML file or the name of a shipped scenario.  The output
directory defaults to ``$SWITCHFORCE_OUT`` or ``./switchforce_out``.

Exit codes: 0 success/certified, 1 input error, 2 negative finding
(not certified, no bracket, negative desired force), 3 Zeno abort.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .conewise import certify
from .design import DesignContext, SearchSpec, find_threshold, lambda_sweep
from .errors import (ConfigError, NegativeForceInContact, NoBracket, SwitchforceError,
                     ZenoGuard)
from .model import closed_loop_matrices
from .sim import (simulate_compliant, simulate_error, simulate_reduced, simulate_rigid,
                  simulate_worst_case)
from .trajectory import design as design_trajectory, validate

log = logging.getLogger("switchforce")

OUT_ENV = "SWITCHFORCE_OUT"
EXIT_OK, EXIT_INPUT, EXIT_NEGATIVE, EXIT_ZENO = 0, 1, 2, 3


def fmt(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v) + 0.0:.9g}"
    return str(v)


def write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def kv_document(d):
    return "".join(f"{k}: {fmt(v)}\n" for k, v in d.items())


def csv_text(header, columns):
    rows = [",".join(header)]
    for row in zip(*columns):
        rows.append(",".join(fmt(v) for v in row))
    return "\n".join(rows) + "\n"


# ---------------------------------------------------------------- commands

def cmd_certify(sc, out):
    sc.require("certify")
    pair = closed_loop_matrices(sc.plant, sc.contact_env(), sc.gains)
    cert = certify(pair)
    doc = {"scenario": sc.name, **cert.as_dict()}
    write_atomic(out / f"{sc.name}.certificate", kv_document(doc))
    print(kv_document(doc), end="")
    return EXIT_OK if cert.certified else EXIT_NEGATIVE


def _sim_files(sc, res, every):
    idx = np.arange(0, len(res.t), every)
    if res.kind in ("worst_case", "error"):
        header = ["t", "z1", "z2", "mode"]
        cols = [res.t[idx], res.state[idx, 0], res.state[idx, 1], res.mode[idx]]
        if res.kind == "error":
            header.insert(3, "x_d")
            cols.insert(3, res.x_d[idx])
    else:
        header = ["t", "x", "x_d", "xdot", "xd_dot", "F_e", "F_d", "F_c", "mode"]
        cols = [res.t[idx], res.column("x")[idx], res.x_d[idx], res.column("xdot")[idx],
                res.xd_dot[idx], res.F_e[idx], res.F_d[idx], res.F_c[idx], res.mode[idx]]
        if res.kind == "compliant":
            header += ["x_t", "xdot_t"]
            cols += [res.column("x_t")[idx], res.column("xdot_t")[idx]]
    ev_lines = ["time,direction," + ",".join(res.labels)]
    for e in res.events:
        ev_lines.append(",".join([fmt(e.time), e.direction] + [fmt(v) for v in e.state]))
    base = f"{sc.name}.{res.kind}"
    return {f"{base}.csv": csv_text(header, cols), f"{base}.events": "\n".join(ev_lines) + "\n"}


def cmd_simulate(sc, out, seed=0):
    sc.require("simulate")
    s = sc.sim
    model = s.model
    traj = design_trajectory(sc.trajectory) if sc.trajectory is not None else None
    z0 = s.z0
    if z0 == "random":
        z0 = tuple(np.random.default_rng(seed).standard_normal(2) * 1e-3)
    try:
        if model in ("rigid", "reduced", "compliant"):
            x0, v0, _, _ = traj.evaluate(s.config.t0)
            if model == "rigid":
                res = simulate_rigid(sc.plant, sc.environment, sc.gains, traj,
                                     s.ic or (x0, v0), s.config)
            elif model == "reduced":
                res = simulate_reduced(sc.plant, sc.wrist, sc.environment, sc.gains, traj,
                                       s.ic or (x0, v0), s.config)
            else:
                res = simulate_compliant(sc.plant, sc.wrist, sc.environment, sc.gains, traj,
                                         s.ic or (x0, v0, x0, v0), s.config)
        else:
            pair = closed_loop_matrices(sc.plant, sc.contact_env(), sc.gains)
            if model == "worst_case":
                res = simulate_worst_case(pair, z0, s.config)
            else:
                w = s.disturbance or (lambda t: 0.0, lambda t: 0.0)
                res = simulate_error(pair, w, traj, z0, s.config)
    except ZenoGuard as e:
        if e.partial is not None:
            for name, text in _sim_files(sc, e.partial, s.output_every).items():
                write_atomic(out / name, text)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ZENO
    for name, text in _sim_files(sc, res, s.output_every).items():
        write_atomic(out / name, text)
    made = len(res.event_times("contact_made")) + len(res.event_times("enter_S2"))
    print(f"{model}: {len(res.t)} samples, {len(res.events)} events "
          f"({made} entering contact), peak |F_e| = {fmt(float(np.max(np.abs(res.F_e))))}")
    return EXIT_OK


def cmd_design(sc, out):
    sc.require("design")
    d = sc.design
    ctx = DesignContext(sc.plant, sc.environment, sc.gains, sc.wrist)
    try:
        thr = find_threshold(SearchSpec(d.parameter, d.lo, d.hi, d.tol, ctx))
    except NoBracket as e:
        print(f"error: {e}", file=sys.stderr)
        for label, c in (("lo", e.lo_certificate), ("hi", e.hi_certificate)):
            print(f"[{label}]", file=sys.stderr)
            print(kv_document(c.as_dict()), end="", file=sys.stderr)
        return EXIT_NEGATIVE
    grid = np.linspace(d.lo, d.hi, d.sweep_points)
    rows = lambda_sweep(ctx, d.parameter, grid)
    sweep_name = f"{sc.name}.sweep.csv"
    write_atomic(out / sweep_name, csv_text(
        [d.parameter, "lambda1", "lambda2", "Lambda", "verdict"],
        list(zip(*[(r.value, r.lambda1, r.lambda2, r.Lambda, r.verdict) for r in rows]))))
    doc = {"scenario": sc.name, "parameter": d.parameter, "threshold": thr.value,
           "bracket_fail": thr.bracket[0], "bracket_certified": thr.bracket[1],
           "sweep_table": sweep_name}
    doc.update({f"certificate.{k}": v for k, v in thr.certificate.as_dict().items()})
    write_atomic(out / f"{sc.name}.design", kv_document(doc))
    print(kv_document(doc), end="")
    return EXIT_OK


def cmd_traj(sc, out, samples=4001):
    sc.require("traj")
    try:
        traj = design_trajectory(sc.trajectory)
    except NegativeForceInContact as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NEGATIVE
    t = np.linspace(traj.t_start, traj.t_end, samples)
    x, v, a, F = traj.evaluate_many(t)
    write_atomic(out / f"{sc.name}.traj.csv",
                 csv_text(["t", "x_d", "xd_dot", "xd_ddot", "F_d"], [t, x, v, a, F]))
    rep = validate(traj)
    doc = {"scenario": sc.name, **rep.as_dict()}
    write_atomic(out / f"{sc.name}.traj_report", kv_document(doc))
    print(kv_document(doc), end="")
    return EXIT_OK if rep.passed else EXIT_NEGATIVE


COMMANDS = {"certify": cmd_certify, "simulate": cmd_simulate, "design": cmd_design,
            "traj": cmd_traj}


def build_parser():
    p = argparse.ArgumentParser(prog="switchforce", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("config", help="YAML scenario file or shipped scenario name")
    p.add_argument("--out", help=f"output directory (overrides ${OUT_ENV})")
    p.add_argument("--seed", type=int, default=0, help="seed for random initial states")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out or os.environ.get(OUT_ENV) or "switchforce_out")
    try:
        sc = cfgmod.load(args.config)
        write_atomic(out / f"{sc.name}.config.yaml", sc.dump())
        if args.command == "simulate":
            return cmd_simulate(sc, out, args.seed)
        return COMMANDS[args.command](sc, out)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (SwitchforceError, ValueError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
