"""Figure rendering from the versioned result CSVs.

Consumes only the CSV schemas the solver pipeline emits (trace, trajectory,
sweep); it knows nothing about the optimizer itself. Three figure kinds:
convergence curves, 2-D flight paths with node markers, and sweep curves
with one series per scheme.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

KINDS = ("convergence", "trajectory", "sweep")

_SCHEMAS = {
    "convergence": "starmec.trace.v1",
    "trajectory": "starmec.trajectory.v1",
    "sweep": "starmec.sweep.v1",
}


class SchemaError(ValueError):
    """Input CSV does not carry the expected schema tag."""


@dataclass
class FigureSpec:
    kind: str
    inputs: list
    output: str
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    xlim: tuple | None = None
    ylim: tuple | None = None
    labels: list = field(default_factory=list)
    markers: dict = field(default_factory=dict)   # trajectory overlays

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; pick from {KINDS}")
        if not self.inputs:
            raise ValueError("no input CSVs given")


def read_versioned_csv(path, kind):
    """Rows of a schema-tagged CSV as dicts of strings."""
    expected = _SCHEMAS[kind]
    with open(path, newline="", encoding="utf-8") as fh:
        first = fh.readline().strip()
        if not first.startswith("# schema="):
            raise SchemaError(f"{path}: missing schema tag, expected {expected}")
        found = first.split("=", 1)[1]
        if found != expected:
            raise SchemaError(f"{path}: schema {found!r}, expected {expected!r}")
        return list(csv.DictReader(fh))


def _label_for(spec, i, default):
    return spec.labels[i] if i < len(spec.labels) else default


def _render_convergence(spec, ax):
    for i, path in enumerate(spec.inputs):
        rows = read_versioned_csv(path, "convergence")
        xs = [int(r["iteration"]) for r in rows]
        ys = [float(r["energy_efficiency"]) for r in rows]
        ax.plot(xs, ys, marker="o", label=_label_for(spec, i, path))
    ax.set_xlabel(spec.xlabel or "iteration")
    ax.set_ylabel(spec.ylabel or "energy efficiency (bits/J)")
    if len(spec.inputs) > 1 or spec.labels:
        ax.legend()


def _render_trajectory(spec, ax):
    for i, path in enumerate(spec.inputs):
        rows = read_versioned_csv(path, "trajectory")
        xs = [float(r["x"]) for r in rows]
        ys = [float(r["y"]) for r in rows]
        ax.plot(xs, ys, marker=".", label=_label_for(spec, i, path))
        ax.plot(xs[0], ys[0], marker="^", color="tab:green", markersize=10)
        ax.plot(xs[-1], ys[-1], marker="v", color="tab:red", markersize=10)
    users = spec.markers.get("users", [])
    for j, (ux, uy) in enumerate(users):
        ax.plot(ux, uy, marker="s", color="k")
        ax.annotate(f"user {j + 1}", (ux, uy), textcoords="offset points",
                    xytext=(4, 4), fontsize=8)
    bs = spec.markers.get("bs")
    if bs is not None:
        ax.plot(bs[0], bs[1], marker="*", color="tab:orange", markersize=14)
        ax.annotate("BS", (bs[0], bs[1]), textcoords="offset points",
                    xytext=(4, 4), fontsize=8)
    ax.set_xlabel(spec.xlabel or "x (m)")
    ax.set_ylabel(spec.ylabel or "y (m)")
    ax.set_aspect("equal", adjustable="datalim")
    if len(spec.inputs) > 1 or spec.labels:
        ax.legend()


def _render_sweep(spec, ax):
    for i, path in enumerate(spec.inputs):
        rows = [r for r in read_versioned_csv(path, "sweep") if r["status"] == "ok"]
        if not rows:
            continue
        xs = [float(r["value"]) for r in rows]
        ys = [float(r["energy_efficiency"]) for r in rows]
        name = rows[0]["scheme"] or _label_for(spec, i, path)
        ax.plot(xs, ys, marker="o", label=_label_for(spec, i, name))
        if not spec.xlabel:
            ax.set_xlabel(rows[0]["sweep_variable"])
    if spec.xlabel:
        ax.set_xlabel(spec.xlabel)
    ax.set_ylabel(spec.ylabel or "energy efficiency (bits/J)")
    ax.legend()


def render(spec: FigureSpec) -> str:
    """Draw the figure and write it to spec.output; returns the path."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2), dpi=150)
    try:
        if spec.kind == "convergence":
            _render_convergence(spec, ax)
        elif spec.kind == "trajectory":
            _render_trajectory(spec, ax)
        else:
            _render_sweep(spec, ax)
        if spec.title:
            ax.set_title(spec.title)
        if spec.xlim:
            ax.set_xlim(*spec.xlim)
        if spec.ylim:
            ax.set_ylim(*spec.ylim)
        ax.grid(True, alpha=0.35)
        fig.tight_layout()
        fig.savefig(spec.output)
    finally:
        plt.close(fig)
    return spec.output
