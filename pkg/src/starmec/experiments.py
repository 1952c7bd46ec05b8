"""Benchmark harness: the proposed scheme against three baselines.

A run is a (scenario, scheme) pair solved end to end; sweeps rebuild the
scenario per grid value and solve each point independently. Everything a
run produces lands in one directory as versioned JSON/CSV artifacts whose
bytes depend only on the inputs.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import StarMecError, StructuralError
from .optimizer import BcdOptions, SolveReport, bcd_solve, default_initializer
from .optimizer.bcd import MODE_SPLIT, MODE_STAR
from .scenario import Scenario, heuristic_traversal_trajectory
from .star_ris import write_profile_csv
from .tasks_energy import write_allocation_csv

SCHEMES = ("proposed", "ris_split", "no_trajectory", "heuristic")
SWEEP_VARIABLES = ("M", "T", "L_k", "none")

TRACE_CSV_SCHEMA = "starmec.trace.v1"
TRAJECTORY_CSV_SCHEMA = "starmec.trajectory.v1"
SWEEP_CSV_SCHEMA = "starmec.sweep.v1"


@dataclass
class ExperimentSpec:
    scenario: Scenario
    scheme: str = "proposed"
    sweep_variable: str = "none"
    sweep_values: tuple = ()
    seed: int | None = None
    out_dir: str | None = None
    options: BcdOptions = field(default_factory=BcdOptions)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise StructuralError(f"unknown scheme {self.scheme!r}; pick from {SCHEMES}")
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise StructuralError(f"unknown sweep variable {self.sweep_variable!r}")
        if self.sweep_variable != "none" and not self.sweep_values:
            raise StructuralError("sweep requested but the value grid is empty")


def nearest_neighbor_order(s: Scenario) -> list[int]:
    """Visit order for the fixed benchmark path: greedy from the start pad."""
    remaining = list(range(s.K))
    order = []
    pos = s.q_init[:2]
    while remaining:
        d = [float(np.linalg.norm(s.user_pos[k][:2] - pos)) for k in remaining]
        k = remaining[int(np.argmin(d))]
        order.append(k)
        remaining.remove(k)
        pos = s.user_pos[k][:2]
    return order


def _apply_sweep(s: Scenario, variable: str, value) -> Scenario:
    if variable == "M":
        return s.replace(M=int(value))
    if variable == "T":
        # hold the slot length, scale the slot count (the mission grid is
        # snapped to a whole number of slots)
        n = max(int(round(float(value) / s.delta_t)), 2)
        return s.replace(N=n, T=n * s.delta_t, delta_t=s.delta_t)
    if variable == "L_k":
        return s.replace(task_bits=np.full(s.K, float(value)))
    return s


def run_single(s: Scenario, scheme: str, opts: BcdOptions | None = None,
               seed: int | None = None) -> SolveReport:
    """Solve one scenario under one scheme."""
    opts = opts or BcdOptions()
    if scheme == "proposed":
        o = BcdOptions(**{**opts.__dict__, "mode": MODE_STAR,
                          "optimize_trajectory": True})
        return bcd_solve(s, opts=o, scheme=scheme, seed=seed)
    if scheme == "ris_split":
        o = BcdOptions(**{**opts.__dict__, "mode": MODE_SPLIT,
                          "optimize_trajectory": True})
        return bcd_solve(s, opts=o, scheme=scheme, seed=seed)
    if scheme == "no_trajectory":
        o = BcdOptions(**{**opts.__dict__, "mode": MODE_STAR,
                          "optimize_trajectory": False})
        init = default_initializer(s, mode=MODE_STAR)
        return bcd_solve(s, init=init, opts=o, scheme=scheme, seed=seed)
    if scheme == "heuristic":
        o = BcdOptions(**{**opts.__dict__, "mode": MODE_STAR,
                          "optimize_trajectory": False})
        traj = heuristic_traversal_trajectory(s, nearest_neighbor_order(s))
        init = _traversal_initializer(s, traj)
        return bcd_solve(s, init=init, opts=o, scheme=scheme, seed=seed)
    raise StructuralError(f"unknown scheme {scheme!r}")


def _traversal_initializer(s: Scenario, traj):
    """Greedy feasible start on a fixed path (mirrors the default initializer)."""
    import numpy as np

    from .errors import QosInfeasibleError
    from .optimizer.resource import schedule_matrix
    from .star_ris import mrt_profile
    from .tasks_energy import Allocation, check_feasibility, rate_table

    schedule = np.arange(s.N) % s.K
    profile = mrt_profile(s, traj, schedule)
    r_ua, r_bs = rate_table(s, traj, profile)
    cap_slot_ua = s.delta_t * s.f_uav_max / s.cycles_per_bit_uav
    cap_slot_bs = s.delta_t * s.f_bs_max / s.cycles_per_bit_bs
    remaining = s.task_bits.astype(float).copy()
    l_ua = np.zeros((s.K, s.N))
    l_bs = np.zeros((s.K, s.N))
    for n in range(s.N - 1):
        k = int(schedule[n])
        l_bs[k, n] = max(min(s.delta_t * r_bs[k, n], cap_slot_bs, remaining[k]), 0.0)
        remaining[k] -= l_bs[k, n]
        l_ua[k, n] = max(min(s.delta_t * r_ua[k, n], cap_slot_ua, remaining[k]), 0.0)
        remaining[k] -= l_ua[k, n]
    if np.any(remaining > 1e-6):
        deficits = {int(k): float(remaining[k])
                    for k in np.nonzero(remaining > 1e-6)[0]}
        raise QosInfeasibleError("fixed-path start cannot meet task demands",
                                 deficits=deficits)
    f_ua = np.zeros((s.K, s.N))
    f_bs = np.zeros((s.K, s.N))
    f_ua[:, 1:] = s.cycles_per_bit_uav * l_ua[:, :-1] / s.delta_t
    f_bs[:, 1:] = s.cycles_per_bit_bs * l_bs[:, :-1] / s.delta_t
    alloc = Allocation(l_bs=l_bs, l_ua=l_ua, f_bs=f_bs, f_ua=f_ua,
                       zeta=schedule_matrix(s, schedule))
    bad = check_feasibility(s, traj, profile, alloc, binary=True)
    if bad:
        raise QosInfeasibleError(
            "fixed-path start failed validation: "
            + "; ".join(f"{v.code}: {v.message}" for v in bad[:4]))
    return alloc, profile, traj


def _one_grid_point(args):
    s, scheme, opts, seed, variable, value = args
    scenario = _apply_sweep(s, variable, value)
    try:
        report = run_single(scenario, scheme, opts, seed)
        return value, report, None
    except StarMecError as exc:
        return value, None, f"{type(exc).__name__}: {exc}"


def run_scheme(spec: ExperimentSpec, jobs: int = 1):
    """Solve every grid point; failures are recorded, not fatal.

    Returns a list of (grid value, SolveReport or None, error or None).
    """
    values = list(spec.sweep_values) if spec.sweep_variable != "none" else [None]
    tasks = [(spec.scenario, spec.scheme, spec.options, spec.seed,
              spec.sweep_variable, v) for v in values]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_one_grid_point, tasks))
    return [_one_grid_point(t) for t in tasks]


# -- persistence ----------------------------------------------------------

def _write_trace_csv(path, report: SolveReport) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# schema={TRACE_CSV_SCHEMA}\n")
        w = csv.writer(fh)
        w.writerow(["iteration", "energy_efficiency"])
        for i, ee in enumerate(report.ee_trace):
            w.writerow([i, repr(float(ee))])


def _write_trajectory_csv(path, report: SolveReport) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# schema={TRAJECTORY_CSV_SCHEMA}\n")
        w = csv.writer(fh)
        w.writerow(["slot", "x", "y", "z"])
        for i, row in enumerate(report.trajectory.q):
            w.writerow([i, repr(float(row[0])), repr(float(row[1])),
                        repr(float(row[2]))])


def write_sweep_csv(path, variable: str, results) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# schema={SWEEP_CSV_SCHEMA}\n")
        w = csv.writer(fh)
        w.writerow(["scheme", "sweep_variable", "value", "energy_efficiency",
                    "total_bits", "e_total", "e_users", "e_com_uav", "e_fly",
                    "iterations", "status"])
        for value, report, err in results:
            if report is None:
                w.writerow(["", variable, value, "", "", "", "", "", "", "",
                            err or "failed"])
                continue
            w.writerow([report.scheme, variable, value,
                        repr(report.energy_efficiency),
                        repr(report.total_bits),
                        repr(report.energy["e_total"]),
                        repr(report.energy["e_users"]),
                        repr(report.energy["e_com_uav"]),
                        repr(report.energy["e_fly"]),
                        len(report.ee_trace) - 1, "ok"])


def emit_results(results, out_dir, spec: ExperimentSpec,
                 scenario: Scenario | None = None) -> list[str]:
    """Write the per-run and per-sweep artifacts; returns the paths.

    Identical inputs produce byte-identical files (timings are kept out of
    the canonical report).
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for value, report, err in results:
        tag = "run" if value is None else f"{spec.sweep_variable}_{value:g}"
        base = os.path.join(out_dir, tag)
        if report is None:
            path = base + ".failed.txt"
            with open(path, "w", encoding="utf-8") as fh:
                fh.write((err or "failed") + "\n")
            written.append(path)
            continue
        path = base + ".report.json"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
        written.append(path)
        _write_trace_csv(base + ".trace.csv", report)
        written.append(base + ".trace.csv")
        _write_trajectory_csv(base + ".trajectory.csv", report)
        written.append(base + ".trajectory.csv")
        s_here = _apply_sweep(spec.scenario, spec.sweep_variable, value) \
            if value is not None else spec.scenario
        write_profile_csv(base + ".profile.csv", report.profile)
        written.append(base + ".profile.csv")
        write_allocation_csv(base + ".allocation.csv", s_here,
                             report.trajectory, report.profile,
                             report.allocation)
        written.append(base + ".allocation.csv")
    if spec.sweep_variable != "none":
        path = os.path.join(out_dir, "sweep.csv")
        write_sweep_csv(path, spec.sweep_variable, results)
        written.append(path)
    return written


def file_digest(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def compare_directories(dir_a, dir_b) -> list[str]:
    """Human-readable efficiency deltas between two result directories."""
    lines = []
    for name in sorted(os.listdir(dir_a)):
        if not name.endswith(".report.json"):
            continue
        pa = os.path.join(dir_a, name)
        pb = os.path.join(dir_b, name)
        if not os.path.exists(pb):
            lines.append(f"{name}: only in {dir_a}")
            continue
        with open(pa, encoding="utf-8") as fh:
            ra = json.load(fh)
        with open(pb, encoding="utf-8") as fh:
            rb = json.load(fh)
        ea = ra["ee_trace"][-1]
        eb = rb["ee_trace"][-1]
        lines.append(f"{name}: {ea:.6g} -> {eb:.6g} bits/J "
                     f"(delta {eb - ea:+.6g})")
    return lines
