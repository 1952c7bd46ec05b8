"""Declarative convex-program construction with a pluggable conic backend.

The surface is deliberately narrow: named variables/parameters, affine
expressions, and exactly the atom set the convexified subproblems need
(log2(1+affine), cubic powers, norm powers for the path-loss epigraphs,
inverse squares for the flight-energy surrogate). Every program is checked
for disciplined convexity before it reaches the backend; Clarabel solves
the resulting cone program deterministically.
"""

from __future__ import annotations

import os
import time
import warnings
from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from .errors import NonConvexProgramError, StructuralError

LOG2 = float(np.log(2.0))

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"
STATUS_NUMERICAL = "numerical-limit"

_STATUS_MAP = {
    cp.OPTIMAL: STATUS_OPTIMAL,
    cp.OPTIMAL_INACCURATE: STATUS_NUMERICAL,
    cp.INFEASIBLE: STATUS_INFEASIBLE,
    cp.INFEASIBLE_INACCURATE: STATUS_INFEASIBLE,
    cp.UNBOUNDED: STATUS_UNBOUNDED,
    cp.UNBOUNDED_INACCURATE: STATUS_UNBOUNDED,
}


@dataclass(frozen=True)
class SolverTolerances:
    feastol: float = 1e-7
    reltol: float = 1e-7
    max_iters: int = 200

    @classmethod
    def from_env(cls) -> "SolverTolerances":
        """Defaults, overridable through STARMEC_FEASTOL / STARMEC_RELTOL."""
        return cls(
            feastol=float(os.environ.get("STARMEC_FEASTOL", cls.feastol)),
            reltol=float(os.environ.get("STARMEC_RELTOL", cls.reltol)),
            max_iters=int(os.environ.get("STARMEC_MAXITERS", cls.max_iters)),
        )


@dataclass
class SolveResult:
    status: str
    objective: float
    primal: dict
    iterations: int
    wall_time: float

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OPTIMAL


# -- atoms ---------------------------------------------------------------

def atom_log1p_affine(a, x, b: float = 0.0):
    """log2(1 + a^T x + b), concave on a^T x + b > -1."""
    return cp.log1p(a @ x + b) / LOG2


def atom_log1p(expr):
    """log2(1 + expr) for an affine expression."""
    return cp.log1p(expr) / LOG2


def atom_cubic_power(f):
    """f^3 over f >= 0, represented exactly through its power cone epigraph."""
    return cp.power(f, 3)


def atom_norm_power(vec, alpha: float):
    """||vec||^alpha for alpha > 1, exact via the rational power cone."""
    if alpha <= 1:
        raise StructuralError("atom_norm_power needs alpha > 1")
    return cp.power(cp.norm(vec), alpha)


def atom_inv_square(x):
    """1 / x^2 on x > 0 (convex)."""
    return cp.power(x, -2)


def atom_square(x):
    return cp.square(x)


class ConvexProgram:
    """Named-variable builder for one maximize-concave program."""

    def __init__(self, name: str = "program"):
        self.name = name
        self._vars: dict[str, cp.Variable] = {}
        self._params: dict[str, cp.Parameter] = {}
        self._constraints: list = []
        self._objective = None
        self._problem: cp.Problem | None = None

    def variable(self, name: str, shape=(), nonneg: bool = False,
                 lb=None, ub=None) -> cp.Variable:
        if name in self._vars:
            raise StructuralError(f"duplicate variable {name!r}")
        v = cp.Variable(shape, name=name, nonneg=nonneg)
        self._vars[name] = v
        if lb is not None:
            self._constraints.append(v >= lb)
        if ub is not None:
            self._constraints.append(v <= ub)
        return v

    def parameter(self, name: str, shape=(), nonneg: bool = False,
                  value=None) -> cp.Parameter:
        if name in self._params:
            raise StructuralError(f"duplicate parameter {name!r}")
        p = cp.Parameter(shape, name=name, nonneg=nonneg)
        if value is not None:
            p.value = value
        self._params[name] = p
        return p

    def set_parameter(self, name: str, value) -> None:
        self._params[name].value = value

    def subject_to(self, *constraints) -> None:
        self._constraints.extend(constraints)

    def maximize(self, expr) -> None:
        self._objective = cp.Maximize(expr)

    def _build(self) -> cp.Problem:
        if self._objective is None:
            raise StructuralError("objective not set")
        if self._problem is None:
            prob = cp.Problem(self._objective, self._constraints)
            if not prob.is_dcp():
                raise NonConvexProgramError(
                    f"{self.name}: expression failed the disciplined-convexity check")
            self._problem = prob
        return self._problem

    def check_convexity(self) -> None:
        self._build()

    def solve(self, tolerances: SolverTolerances | None = None,
              warm_start: bool = True) -> SolveResult:
        prob = self._build()
        tol = tolerances or SolverTolerances.from_env()
        t0 = time.perf_counter()
        # retry ladder: a cold start, then relaxed tolerances, often recovers
        # a stalled interior-point run on a badly conditioned expansion
        attempts = (
            dict(warm_start=warm_start, max_iter=tol.max_iters,
                 tol_feas=tol.feastol, tol_gap_rel=tol.reltol,
                 tol_gap_abs=tol.feastol),
            dict(warm_start=False, max_iter=2 * tol.max_iters,
                 tol_feas=tol.feastol, tol_gap_rel=tol.reltol,
                 tol_gap_abs=tol.feastol),
            dict(warm_start=False, max_iter=2 * tol.max_iters,
                 tol_feas=100 * tol.feastol, tol_gap_rel=100 * tol.reltol,
                 tol_gap_abs=100 * tol.feastol),
        )
        solved = False
        for kwargs in attempts:
            try:
                with warnings.catch_warnings():
                    # inaccurate solves surface through SolveResult.status
                    warnings.simplefilter("ignore", UserWarning)
                    prob.solve(solver=cp.CLARABEL, **kwargs)
                solved = True
                break
            except cp.error.SolverError:
                continue
        if not solved:
            # first-order fallback: slower to high accuracy but rarely stalls
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", UserWarning)
                    prob.solve(solver=cp.SCS, eps_abs=tol.feastol * 10,
                               eps_rel=tol.reltol * 10, max_iters=50_000)
                solved = True
            except cp.error.SolverError:
                pass
        if not solved:
            return SolveResult(status=STATUS_NUMERICAL, objective=float("nan"),
                               primal={}, iterations=0,
                               wall_time=time.perf_counter() - t0)
        wall = time.perf_counter() - t0
        status = _STATUS_MAP.get(prob.status, STATUS_NUMERICAL)
        primal = {}
        if status in (STATUS_OPTIMAL, STATUS_NUMERICAL):
            for name, v in self._vars.items():
                if v.value is not None:
                    primal[name] = np.array(v.value, dtype=float)
        stats = prob.solver_stats
        iters = int(stats.num_iters) if stats and stats.num_iters is not None else 0
        obj = float(prob.value) if prob.value is not None else float("nan")
        return SolveResult(status=status, objective=obj, primal=primal,
                           iterations=iters, wall_time=wall)

    def value(self, name: str):
        v = self._vars[name].value
        return None if v is None else np.array(v, dtype=float)

    def dump(self) -> str:
        """Plain-text canonical form for offline cross-checking."""
        self._build()
        lines = [f"# program: {self.name}", "maximize",
                 f"  {self._objective.expr}"]
        lines.append("subject to")
        for c in self._constraints:
            lines.append(f"  {c}")
        for name, p in self._params.items():
            lines.append(f"# parameter {name} = {p.value}")
        return "\n".join(lines)
