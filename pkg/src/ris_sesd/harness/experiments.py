"""Seeded Monte Carlo drivers and CSV output.

Every trial derives its own seed from ``(master_seed, experiment, trial)``
so results do not depend on execution order or on how many worker
processes run. Rows are sorted by (sweep point, trial, solver) before
writing.
"""

from __future__ import annotations

import csv
import hashlib
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ris_sesd.channel_model import Scenario, dbm_to_watts, sample_scenario
from ris_sesd.harness.config import ExperimentConfig
from ris_sesd.ils_core import QuadraticForm, brute_force_solve, build_alphabet, factorize, sesd_solve
from ris_sesd.wmmse_bcd import bcd_optimize

__all__ = [
    "ResultRow",
    "CSV_COLUMNS",
    "trial_seed",
    "trial_streams",
    "convergence_trial",
    "power_sweep_trial",
    "run_convergence",
    "run_power_sweep",
    "rows_to_csv",
    "write_csv",
    "oracle_check",
    "read_rows",
    "summarize",
]

CSV_COLUMNS = (
    "experiment", "N", "power_dbm", "trial", "seed", "solver", "iteration",
    "sum_rate", "objective", "converged", "scenario",
)


@dataclass(frozen=True)
class ResultRow:
    """One CSV line. ``iteration`` is the BCD iteration (0 = initial point)
    for convergence rows and the final iteration count for sweep rows."""

    experiment: str
    N: int
    power_dbm: float
    trial: int
    seed: int
    solver: str
    iteration: int
    sum_rate: float
    objective: float
    converged: bool
    scenario: str
    wall_time_ms: float = 0.0

    def sort_key(self):
        return (self.N, self.power_dbm, self.trial, self.solver, self.iteration)

    def cells(self, timing: bool = False) -> list[str]:
        out = []
        for name in CSV_COLUMNS + (("wall_time_ms",) if timing else ()):
            value = getattr(self, name)
            if isinstance(value, bool):
                out.append("1" if value else "0")
            elif isinstance(value, float):
                out.append(f"{value:.9g}")
            else:
                out.append(str(value))
        return out


def trial_seed(master_seed: int, experiment: str, trial: int) -> int:
    digest = hashlib.blake2b(f"{master_seed}:{experiment}:{trial}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def trial_streams(seed: int) -> tuple[np.random.Generator, int]:
    """Channel generator and the integer seed for ``theta^(0)``."""
    channel_ss, init_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(channel_ss), int(init_ss.generate_state(1, np.uint64)[0])


def _with_power(scenario: Scenario, p_dbm: float) -> Scenario:
    return scenario.with_powers(np.full(scenario.K, float(dbm_to_watts(p_dbm))))


def convergence_trial(cfg: ExperimentConfig, N: int, trial: int, solver: str | None = None):
    """Returns ``(seed, scenario, trace, elapsed_ms)`` for one trial at RIS size ``N``."""
    seed = trial_seed(cfg.master_seed, "convergence", trial)
    rng, init_seed = trial_streams(seed)
    scenario = _with_power(sample_scenario(cfg.dims_for(N), cfg.channel, rng), cfg.convergence_power_dbm)
    t0 = time.perf_counter()
    trace = bcd_optimize(scenario, cfg.bcd_options(init_seed, solver))
    return seed, scenario, trace, 1e3 * (time.perf_counter() - t0)


def power_sweep_trial(cfg: ExperimentConfig, trial: int, solvers=("sesd", "nearest"), track_baseline=False):
    """One channel draw shared by every power point and solver.

    Returns ``(seed, [(power_dbm, solver, scenario, trace, elapsed_ms), ...])``.
    """
    seed = trial_seed(cfg.master_seed, "power-sweep", trial)
    rng, init_seed = trial_streams(seed)
    base = sample_scenario(cfg.dims, cfg.channel, rng)
    out = []
    for p in cfg.powers_dbm:
        scenario = _with_power(base, p)
        for solver in solvers:
            opts = cfg.bcd_options(init_seed, solver)
            if track_baseline and solver == "sesd":
                opts = replace(opts, track_baseline=True)
            t0 = time.perf_counter()
            trace = bcd_optimize(scenario, opts)
            out.append((float(p), solver, scenario, trace, 1e3 * (time.perf_counter() - t0)))
    return seed, out


def _convergence_rows(args) -> list[ResultRow]:
    cfg, N, trial, solver = args
    seed, scenario, trace, ms = convergence_trial(cfg, N, trial, solver)
    solver = solver or cfg.bcd.solver
    fp = scenario.fingerprint()
    states = [trace.initial] + trace.iterations
    return [
        ResultRow("convergence", N, cfg.convergence_power_dbm, trial, seed, solver, it,
                  s.sum_rate, s.objective_f, trace.converged, fp, ms)
        for it, s in enumerate(states)
    ]


def _power_rows(args) -> list[ResultRow]:
    cfg, trial = args
    seed, runs = power_sweep_trial(cfg, trial)
    return [
        ResultRow("power-sweep", cfg.dims.N, p, trial, seed, solver, trace.iteration_count,
                  trace.final.sum_rate, trace.final.objective_f, trace.converged, sc.fingerprint(), ms)
        for p, solver, sc, trace, ms in runs
    ]


def _map(func, tasks, jobs: int):
    if jobs <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, tasks))


def run_convergence(cfg: ExperimentConfig, jobs: int = 1, solver: str | None = None) -> list[ResultRow]:
    tasks = [(cfg, N, t, solver) for N in cfg.ris_sizes for t in range(cfg.trials_for("convergence"))]
    rows = [r for chunk in _map(_convergence_rows, tasks, jobs) for r in chunk]
    return sorted(rows, key=ResultRow.sort_key)


def run_power_sweep(cfg: ExperimentConfig, jobs: int = 1) -> list[ResultRow]:
    tasks = [(cfg, t) for t in range(cfg.trials_for("power-sweep"))]
    rows = [r for chunk in _map(_power_rows, tasks, jobs) for r in chunk]
    return sorted(rows, key=ResultRow.sort_key)


def rows_to_csv(rows, timing: bool = False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS + (("wall_time_ms",) if timing else ()))
    for row in rows:
        writer.writerow(row.cells(timing))
    return buf.getvalue()


def write_csv(rows, path: str | Path, timing: bool = False) -> None:
    path = Path(path)
    try:
        path.write_text(rows_to_csv(rows, timing))
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_rows(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def oracle_check(instances: int = 1000, seed: int = 0, n_range=(2, 8), qs=(1, 2), alpha: float = 1.0):
    """SESD against exhaustive search on random PSD forms.

    Half of the forms are rank deficient. Returns ``(max_gap, count)``
    where ``max_gap`` is the largest ``|sesd - brute force|`` objective gap.
    """
    rng = np.random.default_rng(seed)
    max_gap = 0.0
    done = 0
    for i in range(instances):
        q = qs[i % len(qs)]
        N = int(rng.integers(n_range[0], n_range[1] + 1))
        al = build_alphabet(q)
        rank = int(rng.integers(1, N + 1)) if i % 2 else N
        V = (rng.standard_normal((rank, N)) + 1j * rng.standard_normal((rank, N))) / np.sqrt(2)
        b = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        form = QuadraticForm(V.T @ V.conj(), b)
        exact = brute_force_solve(form, al)
        found = sesd_solve(factorize(form, alpha=alpha if i % 4 < 2 else 0.0), al)
        max_gap = max(max_gap, abs(found.objective - exact.objective))
        done += 1
    return max_gap, done


def summarize(rows: list[ResultRow]) -> dict:
    """Trial means keyed by (N, power, solver) using each trial's last row."""
    last = {}
    for r in rows:
        key = (r.N, r.power_dbm, r.solver, r.trial)
        if key not in last or r.iteration >= last[key].iteration:
            last[key] = r
    groups = {}
    for (N, p, solver, _), r in last.items():
        groups.setdefault((N, p, solver), []).append(r.sum_rate)
    return {k: float(np.mean(v)) for k, v in sorted(groups.items())}

