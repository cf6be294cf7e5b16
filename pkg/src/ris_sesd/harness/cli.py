"""Command line entry point (``ris-sesd``)."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from ris_sesd.errors import RisSesdError
from ris_sesd.harness.config import load_config
from ris_sesd.harness.experiments import oracle_check, rows_to_csv, run_convergence, run_power_sweep, write_csv
from ris_sesd.harness.qf_io import read_quadratic_form
from ris_sesd.ils_core import build_alphabet
from ris_sesd.wmmse_bcd import SOLVERS, solve_phase


def _experiment_args(p: argparse.ArgumentParser, with_solver: bool) -> None:
    p.add_argument("--config", help="TOML experiment configuration")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--trials", type=int, help="Monte Carlo trials")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for trials")
    p.add_argument("--timing", action="store_true", help="append a wall_time_ms column (output no longer reproducible)")
    if with_solver:
        p.add_argument("--solver", choices=SOLVERS, help="phase solver inside the BCD loop")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ris-sesd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convergence", help="per-iteration sum rate for each RIS size")
    _experiment_args(p, with_solver=True)

    p = sub.add_parser("power-sweep", help="final sum rate vs UE power, SESD and nearest point")
    _experiment_args(p, with_solver=False)

    p = sub.add_parser("solve", help="solve one discrete phase sub-problem from a file")
    p.add_argument("path", help="quadratic form file")
    p.add_argument("--q", type=int, default=1, help="phase resolution in bits")
    p.add_argument("--solver", choices=SOLVERS, default="sesd")

    p = sub.add_parser("oracle-check", help="randomised SESD vs brute-force comparison")
    p.add_argument("--instances", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    return parser


def _emit(rows, args) -> None:
    if args.out:
        write_csv(rows, args.out, timing=args.timing)
    else:
        sys.stdout.write(rows_to_csv(rows, timing=args.timing))


def _run_experiment(args) -> int:
    cfg = load_config(args.config).with_overrides(
        master_seed=args.seed, trials=args.trials, solver=getattr(args, "solver", None)
    )
    if args.command == "convergence":
        rows = run_convergence(cfg, jobs=args.jobs)
    else:
        rows = run_power_sweep(cfg, jobs=args.jobs)
    _emit(rows, args)
    return 0


def _solve(args) -> int:
    form = read_quadratic_form(args.path)
    al = build_alphabet(args.q)
    config = solve_phase(form, al, args.solver)
    print(f"solver: {args.solver}")
    print("indices:", " ".join(str(i) for i in config.indices))
    print("phases:", " ".join(f"{p:.9g}" for p in config.phases(al)))
    print(f"objective: {config.objective:.12g}")
    if args.solver == "sesd":
        print(f"nodes: {config.stats.nodes}")
    return 0


def _oracle(args) -> int:
    gap, count = oracle_check(instances=args.instances, seed=args.seed)
    ok = gap <= args.tol
    print(f"instances: {count}")
    print(f"max objective gap: {gap:.3e}")
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    np.seterr(all="ignore")
    try:
        if args.command in ("convergence", "power-sweep"):
            return _run_experiment(args)
        if args.command == "solve":
            return _solve(args)
        return _oracle(args)
    except (RisSesdError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
