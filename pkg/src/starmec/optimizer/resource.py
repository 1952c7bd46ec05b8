"""Resource allocation at a fixed binary schedule and fixed rates.

The program is convex: offloaded bits are capped by the scheduled slot
rates, QoS and compute-causality are linear, and the only energy term that
depends on the variables is the cubic UAV compute power. Reused by the
scheduling subproblem's final resolve, the split-array baseline, and the
enumeration oracles in the tests.
"""

from __future__ import annotations

import cvxpy as cp
import numpy as np

from ..convex import ConvexProgram, SolverTolerances, atom_cubic_power
from ..errors import QosInfeasibleError
from ..scenario import Scenario
from ..tasks_energy import Allocation
from .scales import ProgramScales
from .state import dinkelbach_loop

_STATUS_BAD = ("infeasible", "unbounded")


def schedule_matrix(s: Scenario, schedule: np.ndarray) -> np.ndarray:
    """(K, N) one-hot schedule from a per-slot user index array."""
    zeta = np.zeros((s.K, s.N))
    zeta[np.asarray(schedule, dtype=int), np.arange(s.N)] = 1.0
    return zeta


def selection_matrix(s: Scenario, schedule: np.ndarray) -> np.ndarray:
    """(K, N-1) indicator of which user owns each offload slot."""
    sel = np.zeros((s.K, s.N - 1))
    sel[np.asarray(schedule, dtype=int)[:-1], np.arange(s.N - 1)] = 1.0
    return sel


def compute_energy(s: Scenario, f_ua) -> float:
    return float(s.kappa_uav * s.delta_t * np.sum(np.asarray(f_ua) ** 3))


def add_compute_block(p: ConvexProgram, s: Scenario, sel: np.ndarray,
                      scales: ProgramScales, l_ua, l_bs):
    """Frequency variables, caps, and causality for given per-slot bit vars.

    `l_ua`/`l_bs` are normalized per-slot expressions of length N-1 owned by
    the scheduled users in `sel`. Returns (f_ua_hat, f_bs_hat, energy_expr)
    with the energy in joules.
    """
    n_off = s.N - 1
    f_ua = p.variable("f_ua", (s.K, n_off), nonneg=True)
    f_bs = p.variable("f_bs", (s.K, n_off), nonneg=True)
    p.subject_to(cp.sum(f_ua, axis=0) <= 1.0, cp.sum(f_bs, axis=0) <= 1.0)
    lower = np.tril(np.ones((n_off, n_off)))
    cu = scales.causality_coeff_ua(s)
    cb = scales.causality_coeff_bs(s)
    for k in range(s.K):
        own = np.diag(sel[k])
        p.subject_to(cu * (lower @ f_ua[k]) >= lower @ (own @ l_ua),
                     cb * (lower @ f_bs[k]) >= lower @ (own @ l_bs))
    energy = scales.uav_compute_coeff(s) * cp.sum(atom_cubic_power(f_ua))
    return f_ua, f_bs, energy


def assemble_allocation(s: Scenario, schedule, scales: ProgramScales,
                        primal: dict) -> Allocation:
    """De-normalize a solved program's values into a full allocation."""
    sched = np.asarray(schedule, dtype=int)
    idx = np.arange(s.N - 1)
    l_ua = np.zeros((s.K, s.N))
    l_bs = np.zeros((s.K, s.N))
    l_ua[sched[:-1], idx] = np.maximum(primal["l_ua"], 0.0) * scales.bits
    l_bs[sched[:-1], idx] = np.maximum(primal["l_bs"], 0.0) * scales.bits
    f_ua = np.zeros((s.K, s.N))
    f_bs = np.zeros((s.K, s.N))
    f_ua[:, 1:] = np.maximum(primal["f_ua"], 0.0) * scales.f_ua
    f_bs[:, 1:] = np.maximum(primal["f_bs"], 0.0) * scales.f_bs
    return Allocation(l_bs=l_bs, l_ua=l_ua, f_bs=f_bs, f_ua=f_ua,
                      zeta=schedule_matrix(s, sched))


class ResourceProgram:
    """Bit/frequency allocation for one fixed schedule.

    `schedule[n-1]` names the user offloading in slot n; rates are (K, N)
    tables evaluated at the fixed trajectory and RIS profile. The Dinkelbach
    ratio enters as a parameter so repeated solves reuse the canonicalized
    cone program.
    """

    def __init__(self, s: Scenario, r_ua: np.ndarray, r_bs: np.ndarray,
                 schedule: np.ndarray, e_const: float,
                 tolerances: SolverTolerances | None = None):
        self.s = s
        self.schedule = np.asarray(schedule, dtype=int)
        self.e_const = float(e_const)
        self.tol = tolerances or SolverTolerances.from_env()
        self.scales = ProgramScales.for_instance(s, r_ua, r_bs)
        n_off = s.N - 1
        idx = np.arange(n_off)
        cap_ua = s.delta_t * r_ua[self.schedule[:-1], idx] / self.scales.bits
        cap_bs = s.delta_t * r_bs[self.schedule[:-1], idx] / self.scales.bits

        p = ConvexProgram("resource")
        l_ua = p.variable("l_ua", (n_off,), nonneg=True)
        l_bs = p.variable("l_bs", (n_off,), nonneg=True)
        psi = p.parameter("psi", nonneg=True, value=0.0)
        p.subject_to(l_ua <= cap_ua, l_bs <= cap_bs)
        sel = selection_matrix(s, self.schedule)
        p.subject_to(sel @ l_ua + sel @ l_bs >= s.task_bits / self.scales.bits)
        _, _, e_com = add_compute_block(p, s, sel, self.scales, l_ua, l_bs)
        bits = self.scales.bits * (cp.sum(l_ua) + cp.sum(l_bs))
        p.maximize((bits - psi * (self.e_const + e_com)) / self.scales.bits)
        self.program = p

    def solve(self, psi: float):
        """Maximize L - psi * E; returns (L, E, Allocation)."""
        self.program.set_parameter("psi", max(float(psi), 0.0))
        res = self.program.solve(self.tol)
        if res.status in _STATUS_BAD or "l_ua" not in res.primal:
            raise QosInfeasibleError(
                f"resource program {res.status} at psi={psi:.6g}")
        alloc = assemble_allocation(self.s, self.schedule, self.scales, res.primal)
        l_val = float(alloc.l_ua.sum() + alloc.l_bs.sum())
        e_val = self.e_const + compute_energy(self.s, alloc.f_ua)
        return l_val, e_val, alloc


def resource_dinkelbach(s: Scenario, r_ua, r_bs, schedule, e_const: float,
                        warm: Allocation | None = None,
                        eps1: float = 1e-3, max_iters: int = 25,
                        rel_floor: float = 1e-9,
                        tolerances: SolverTolerances | None = None):
    """Fixed-schedule energy-efficiency maximization.

    Returns (Allocation, DinkelbachState).
    """
    prog = ResourceProgram(s, r_ua, r_bs, schedule, e_const, tolerances)
    if warm is not None:
        l_warm = float(warm.l_bs.sum() + warm.l_ua.sum())
        e_warm = e_const + compute_energy(s, warm.f_ua)
    else:
        l_warm, e_warm = 0.0, e_const

    def inner(psi):
        return prog.solve(psi)

    payload, state = dinkelbach_loop(l_warm, e_warm, inner, eps1, max_iters,
                                     rel_floor)
    if payload is None:
        raise QosInfeasibleError("resource allocation produced no iterate")
    return payload, state
