"""Benchmark the proposed scheme against the baselines and plot the results.

Runs the desk-scale configuration under three schemes, writes the result
CSVs, and (when starmec-plots is installed) renders the convergence and
trajectory figures into demos_output/.
"""

import os

from starmec.experiments import ExperimentSpec, emit_results, run_scheme
from starmec.scenario import load_bundled

OUT = "demos_output"

s = load_bundled("desk")
reports = {}
for scheme in ("proposed", "ris_split", "no_trajectory"):
    spec = ExperimentSpec(scenario=s, scheme=scheme, seed=1)
    results = run_scheme(spec)
    emit_results(results, os.path.join(OUT, scheme), spec)
    _, report, _ = results[0]
    reports[scheme] = report
    print(f"{scheme:14s} EE {report.energy_efficiency:9.1f} bits/J "
          f"({len(report.ee_trace) - 1} rounds)")

try:
    from starmec_plots import FigureSpec, render
except ImportError:
    print("\nstarmec-plots not installed; skipping figures")
else:
    users = [tuple(u[:2]) for u in s.user_pos]
    render(FigureSpec(
        kind="convergence",
        inputs=[os.path.join(OUT, sch, "run.trace.csv") for sch in reports],
        labels=list(reports), output=os.path.join(OUT, "convergence.png")))
    render(FigureSpec(
        kind="trajectory",
        inputs=[os.path.join(OUT, sch, "run.trajectory.csv") for sch in reports],
        labels=list(reports), markers={"users": users, "bs": tuple(s.bs_pos[:2])},
        output=os.path.join(OUT, "trajectories.png")))
    print(f"\nfigures in {OUT}/: convergence.png, trajectories.png")
