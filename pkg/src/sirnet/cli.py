"""Command-line front end.

Subcommands:

* ``r0``        degree-law reproduction number and criticality verdict;
* ``simulate``  one stochastic epidemic on a sampled degree sequence;
* ``solve``     deterministic limit via ``volz``, ``measures``, or ``miller``;
* ``converge``  Monte-Carlo comparison of scaled simulations to the limit.

Exit codes: 0 success, 1 runtime failure, 2 invalid configuration.  Output
files are written atomically (temp file then rename) and every run also
writes a ``<out>.meta.json`` embedding the resolved configuration, so a
result file is always traceable to the exact inputs that produced it.
Relative output paths resolve against ``$SIRNET_OUTDIR`` when set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

import sirnet
from sirnet.degrees import DegreeSpec
from sirnet.errors import ConfigurationError
from sirnet.harness import manifest_json, run_convergence_study
from sirnet.limit import (
    GeneratingFn,
    SolverConfig,
    limit_initial,
    limit_initial_from_pI0,
    miller_theta,
    solve_measures,
    solve_volz,
)
from sirnet.simulation import SimParams, initialize_state, simulate

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _resolve(path):
    if path is None or os.path.isabs(path):
        return path
    base = os.environ.get("SIRNET_OUTDIR")
    return os.path.join(base, path) if base else path


def _atomic_write(path, lines):
    path = _resolve(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            for line in lines:
                fh.write(line)
                fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _write_metadata(out_path, config):
    meta = dict(config)
    meta["package_version"] = sirnet.__version__
    meta["rng"] = "PCG64"
    return _atomic_write(out_path + ".meta.json",
                         [json.dumps(meta, indent=2, sort_keys=True)])


def _int_list(text):
    try:
        values = [int(x) for x in text.split(",") if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty integer list")
    return values


def build_parser():
    p = argparse.ArgumentParser(
        prog="sirnet",
        description="SIR epidemics on configuration-model networks: "
                    "simulation, deterministic limits, convergence checks.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_degree(sp):
        sp.add_argument("--degree", required=True,
                        help="degree law, e.g. poisson:5:30, geometric:0.5:50, "
                             "powerlaw:2.5:1:100, file:weights.json")

    sp = sub.add_parser("r0", help="reproduction number of a degree law")
    add_degree(sp)

    sp = sub.add_parser("simulate", help="run one stochastic epidemic")
    add_degree(sp)
    sp.add_argument("--n", type=int, required=True, help="population size")
    sp.add_argument("--r", type=float, required=True, help="infection rate per I-S edge")
    sp.add_argument("--beta", type=float, required=True, help="removal rate per node")
    sp.add_argument("--i0", type=float, required=True, help="initial infected fraction")
    sp.add_argument("--selection", choices=("uniform", "size_biased"), default="uniform")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--t-max", type=float, required=True)
    sp.add_argument("--grid", type=float, default=0.05, help="recording grid step")
    sp.add_argument("--out", required=True, help="trajectory CSV path")
    sp.add_argument("--snapshots", help="optional measure snapshots JSON-lines path")
    sp.add_argument("--dry-run", action="store_true", help="validate config and exit")

    sp = sub.add_parser("solve", help="solve the deterministic limit")
    sp.add_argument("which", choices=("volz", "measures", "miller"))
    add_degree(sp)
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--beta", type=float, required=True)
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--i0", type=float, help="initial infected node fraction")
    group.add_argument("--pI0", type=float, help="initial infectious edge fraction")
    sp.add_argument("--t-max", type=float, required=True)
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--eps-is", type=float, default=1e-6,
                    help="stop once per-capita N_IS falls below this")
    sp.add_argument("--kmax", type=int, help="level cap for the measure system")
    sp.add_argument("--pS0", type=float, default=1.0,
                    help="miller only: initial susceptible edge fraction constant")
    sp.add_argument("--out", required=True)
    sp.add_argument("--snapshots", help="measures only: snapshots JSON-lines path")
    sp.add_argument("--dry-run", action="store_true")

    sp = sub.add_parser("converge", help="compare scaled simulations to the limit")
    add_degree(sp)
    sp.add_argument("--n", type=_int_list, required=True,
                    help="comma-separated population sizes, e.g. 1000,10000")
    sp.add_argument("--reps", type=int, required=True)
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--i0", type=float, required=True)
    sp.add_argument("--selection", choices=("uniform", "size_biased"), default="uniform")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--t-max", type=float, required=True)
    sp.add_argument("--grid", type=float, default=0.05)
    sp.add_argument("--eps-prime", type=float, default=0.01,
                    help="edge-density level defining the comparison horizon")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out", required=True, help="report CSV path")
    sp.add_argument("--manifest", help="run manifest JSON path (default <out>.manifest.json)")
    sp.add_argument("--dry-run", action="store_true")
    return p


# -- subcommand bodies --------------------------------------------------------


def cmd_r0(args):
    spec = DegreeSpec.from_string(args.degree)
    value = spec.r0()
    verdict = "supercritical" if value > 1 else "subcritical"
    print(f"r0 = {value:.6g} ({verdict})")
    return EXIT_OK


def cmd_simulate(args):
    spec = DegreeSpec.from_string(args.degree)
    params = SimParams(r=args.r, beta=args.beta, t_max=args.t_max,
                       record_grid=args.grid, seed=args.seed,
                       snapshot_measures=bool(args.snapshots))
    if args.n < 2:
        raise ConfigurationError("need at least 2 nodes")
    if not 0 < args.i0 < 1:
        raise ConfigurationError("i0 must lie in (0,1)")
    config = {
        "command": "simulate", "degree": spec.describe(), "n": args.n,
        "r": args.r, "beta": args.beta, "i0": args.i0,
        "selection": args.selection, "seed": args.seed,
        "t_max": args.t_max, "grid": args.grid,
    }
    if args.dry_run:
        print("config ok (dry run)")
        return EXIT_OK
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(args.seed)))
    degrees = spec.sample(args.n, rng)
    state = initialize_state(degrees, args.i0, selection=args.selection, rng=rng)
    traj = simulate(state, params, rng=rng)
    out = _atomic_write(args.out, traj.to_csv_lines())
    _write_metadata(out, {**config, "terminal": traj.terminal})
    if args.snapshots:
        lines = (
            json.dumps({
                "t": t,
                "mu_S": json.loads(snap["mu_S"].to_json()),
                "mu_IS": json.loads(snap["mu_IS"].to_json()),
                "mu_RS": json.loads(snap["mu_RS"].to_json()),
            })
            for t, snap in traj.snapshots
        )
        _atomic_write(args.snapshots, lines)
    print(f"wrote {out} ({len(traj.times)} rows, terminal={traj.terminal})")
    return EXIT_OK


def cmd_solve(args):
    spec = DegreeSpec.from_string(args.degree)
    if args.i0 is not None:
        init = limit_initial(spec, args.i0)
    else:
        init = limit_initial_from_pI0(spec, args.pI0)
    config = SolverConfig(t_max=args.t_max, dt=args.dt, eps_IS=args.eps_is)
    meta = {
        "command": f"solve {args.which}", "degree": spec.describe(),
        "r": args.r, "beta": args.beta,
        "i0": args.i0, "pI0": init.pI0,
        "t_max": args.t_max, "dt": args.dt, "eps_IS": args.eps_is,
    }
    if args.dry_run:
        print("config ok (dry run)")
        return EXIT_OK
    if args.which == "volz":
        sol = solve_volz(init, args.r, args.beta, config)
        out = _atomic_write(args.out, sol.to_csv_lines())
        _write_metadata(out, {**meta, "terminal": sol.terminal})
    elif args.which == "measures":
        sol = solve_measures(init, args.r, args.beta, config, K=args.kmax)
        out = _atomic_write(args.out, sol.to_csv_lines())
        _write_metadata(out, {**meta, "kmax": args.kmax,
                              "clamped_mass": sol.clamped_mass,
                              "terminal": sol.terminal})
        if args.snapshots:
            _atomic_write(args.snapshots, sol.snapshot_json_lines())
    else:
        exact_pS0 = 1.0 - init.pI0
        if abs(args.pS0 - exact_pS0) > 1e-9:
            print(
                "caveat: one-equation reduction assumes a negligible initial "
                f"infection; with pS0={args.pS0} but initial susceptible edge "
                f"fraction {exact_pS0:.6g} it only approximates the edge-based "
                f"system (pass --pS0 {exact_pS0:.12g} for the exact reduction)"
            )
        ts, theta, S, I, R = miller_theta(
            GeneratingFn(spec.limit_measure()), args.r, args.beta, config,
            pS0=args.pS0,
        )
        lines = ["t,S,I,R,theta"]
        lines += [
            f"{ts[i]:.12g},{S[i]:.12g},{I[i]:.12g},{R[i]:.12g},{theta[i]:.12g}"
            for i in range(len(ts))
        ]
        out = _atomic_write(args.out, lines)
        _write_metadata(out, {**meta, "pS0": args.pS0})
    print(f"wrote {out} ({args.which})")
    return EXIT_OK


def cmd_converge(args):
    spec = DegreeSpec.from_string(args.degree)
    if args.reps < 1:
        raise ConfigurationError("reps must be >= 1")
    if not 0 < args.i0 < 1:
        raise ConfigurationError("i0 must lie in (0,1)")
    if args.dry_run:
        print("config ok (dry run)")
        return EXIT_OK
    report = run_convergence_study(
        spec, args.r, args.beta, args.i0, args.n, args.reps, args.seed,
        args.t_max, args.grid, eps_prime=args.eps_prime,
        selection=args.selection, workers=args.workers,
    )
    out = _atomic_write(args.out, report.to_csv_lines())
    manifest_path = args.manifest or args.out + ".manifest.json"
    _atomic_write(manifest_path, [manifest_json(report)])
    _write_metadata(out, {
        "command": "converge", "degree": spec.describe(),
        "n": args.n, "reps": args.reps, "r": args.r, "beta": args.beta,
        "i0": args.i0, "selection": args.selection, "seed": args.seed,
        "t_max": args.t_max, "grid": args.grid, "eps_prime": args.eps_prime,
        "tau_bar": report.tau_bar,
    })
    print(f"wrote {out} and {_resolve(manifest_path)} "
          f"(horizon {report.t_end:.6g})")
    return EXIT_OK


_COMMANDS = {
    "r0": cmd_r0,
    "simulate": cmd_simulate,
    "solve": cmd_solve,
    "converge": cmd_converge,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; preserve 0 for --help
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime failures
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
