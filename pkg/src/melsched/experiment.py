"""HA-vs-HU sweeps over budgets and seeds, with CSV report output.

Files written by :func:`emit_report`::

    summary.csv              policy,T,seed,final_loss,rounds,total_time
    extras.csv               policy,T,seed,accuracy,status
    rounds/<policy>_T<T>_seed<seed>.csv
                             g,tau,L,max_time_s,beta,delta,global_loss,bound
    loss_vs_T.txt            median final loss per budget and policy

Floats are written with ``repr`` so the files read back bit-exactly.
"""
from __future__ import annotations

import csv
import io
import logging
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, NamedTuple, Optional

import numpy as np

from .config import ExperimentConfig
from .errors import InfeasibleError
from .orchestrator import run_training

logger = logging.getLogger(__name__)

SUMMARY_HEADER = ["policy", "T", "seed", "final_loss", "rounds", "total_time"]
EXTRAS_HEADER = ["policy", "T", "seed", "accuracy", "status"]
ROUND_HEADER = ["g", "tau", "L", "max_time_s", "beta", "delta", "global_loss", "bound"]


class RoundRow(NamedTuple):
    g: int
    tau: int
    L: float
    max_time_s: float
    beta: float
    delta: float
    global_loss: float
    bound: float


@dataclass
class CellResult:
    policy: str
    T: float
    seed: int
    final_loss: float
    rounds: int
    total_time: float
    logs: List[RoundRow] = field(default_factory=list)
    accuracy: Optional[float] = None
    status: str = "ok"

    @property
    def key(self):
        return (self.policy, self.T, self.seed)


@dataclass
class ExperimentReport:
    cells: List[CellResult] = field(default_factory=list)

    def cell(self, policy, T, seed) -> CellResult:
        for c in self.cells:
            if c.key == (policy, float(T), seed):
                return c
        raise KeyError((policy, T, seed))

    @property
    def budgets(self):
        return sorted({c.T for c in self.cells})

    @property
    def policies(self):
        return list(dict.fromkeys(c.policy for c in self.cells))

    def losses(self, policy, T) -> List[float]:
        return [c.final_loss for c in self.cells if c.policy == policy and c.T == float(T)]

    def median_loss(self, policy, T) -> float:
        return statistics.median(self.losses(policy, T))

    def deltas(self, T=None) -> List[float]:
        """HA minus HU final loss for every (T, seed) where both ran."""
        ha = {(c.T, c.seed): c.final_loss for c in self.cells if c.policy == "HA"}
        hu = {(c.T, c.seed): c.final_loss for c in self.cells if c.policy == "HU"}
        keys = sorted(set(ha) & set(hu))
        return [ha[k] - hu[k] for k in keys if T is None or k[0] == float(T)]


def run_cell(cfg: ExperimentConfig, policy: str, T: float, seed: int) -> CellResult:
    tc = cfg.training_config(T=T, policy=policy, seed=seed)
    task = cfg.task(seed)
    try:
        _, rep = run_training(cfg.profiles(), task, tc, refresh=cfg.refresh())
    except InfeasibleError as exc:
        logger.warning("cell %s T=%s seed=%s infeasible: %s", policy, T, seed, exc)
        w0 = task.initial_model()
        return CellResult(policy, float(T), seed, task.eval_loss(w0), 0, 0.0,
                          accuracy=task.accuracy(w0), status="infeasible")
    rows = [RoundRow(l.g, l.tau, l.L, l.max_time_s, l.beta, l.delta, l.global_loss, l.bound)
            for l in rep.logs]
    return CellResult(policy, float(T), seed, rep.final_loss, rep.rounds, rep.total_time,
                      rows, rep.accuracy, rep.status)


def _run_cell_args(args):
    return run_cell(*args)


def run_sweep(cfg: ExperimentConfig, budgets=None, policies=None, seeds=None, workers: int = 1) -> ExperimentReport:
    """Every (policy, T, seed) combination; cells are independent."""
    budgets = cfg["experiment.budgets"] if budgets is None else budgets
    policies = cfg["experiment.policies"] if policies is None else policies
    seeds = cfg["experiment.seeds"] if seeds is None else seeds
    jobs = [(cfg, p, float(T), s) for p in policies for T in budgets for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_run_cell_args, jobs))
    else:
        cells = [run_cell(*job) for job in jobs]
    return ExperimentReport(cells)


# -- output ------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def summary_csv(report: ExperimentReport) -> str:
    return _csv_text(SUMMARY_HEADER, [(c.policy, c.T, c.seed, c.final_loss, c.rounds, c.total_time)
                                      for c in report.cells])


def rounds_csv(rows) -> str:
    return _csv_text(ROUND_HEADER, [tuple(r) for r in rows])


def _round_file(c: CellResult) -> str:
    return f"{c.policy}_T{_fmt(c.T)}_seed{c.seed}.csv"


def loss_table(report: ExperimentReport) -> str:
    policies = report.policies
    lines = ["median final loss vs budget T (s)", ""]
    head = f"{'T':>8}" + "".join(f"{p:>14}" for p in policies)
    both = "HA" in policies and "HU" in policies
    if both:
        head += f"{'HA-HU':>14}{'gain %':>10}"
    lines.append(head)
    for T in report.budgets:
        meds = {p: report.median_loss(p, T) for p in policies}
        line = f"{T:>8g}" + "".join(f"{meds[p]:>14.6f}" for p in policies)
        if both:
            diff = meds["HA"] - meds["HU"]
            line += f"{diff:>14.6f}{-100.0 * diff / meds['HU']:>10.2f}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def emit_report(report: ExperimentReport, path) -> List[Path]:
    out = Path(path)
    (out / "rounds").mkdir(parents=True, exist_ok=True)
    written = []

    def write(p: Path, text: str):
        p.write_text(text)
        written.append(p)

    write(out / "summary.csv", summary_csv(report))
    write(out / "extras.csv", _csv_text(EXTRAS_HEADER, [(c.policy, c.T, c.seed, c.accuracy, c.status)
                                                        for c in report.cells]))
    for c in report.cells:
        write(out / "rounds" / _round_file(c), rounds_csv(c.logs))
    write(out / "loss_vs_T.txt", loss_table(report) if report.cells else "no cells\n")
    return written


def _read_rows(path: Path, header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        got = next(reader)
        if got != header:
            raise ValueError(f"{path}: unexpected header {got!r}")
        return list(reader)


def load_report(path) -> ExperimentReport:
    """Inverse of :func:`emit_report`."""
    out = Path(path)
    cells = []
    for policy, T, seed, loss, rounds, total in _read_rows(out / "summary.csv", SUMMARY_HEADER):
        cells.append(CellResult(policy, float(T), int(seed), float(loss), int(rounds), float(total)))
    extras_path = out / "extras.csv"
    if extras_path.exists():
        extras = {(p, float(T), int(s)): (a, st) for p, T, s, a, st in _read_rows(extras_path, EXTRAS_HEADER)}
        for c in cells:
            acc, c.status = extras[c.key]
            c.accuracy = float(acc) if acc else None
    for c in cells:
        rpath = out / "rounds" / _round_file(c)
        if rpath.exists():
            c.logs = [RoundRow(int(r[0]), int(r[1]), *map(float, r[2:]))
                      for r in _read_rows(rpath, ROUND_HEADER)]
    return ExperimentReport(cells)
