"""Joint resource allocation and user scheduling (first block).

Two-tier loop: an outer ratio iteration turns L/E into L - psi * E, and an
inner penalty iteration drives the relaxed scheduling weights to binary by
subtracting rho_hat * sum(eta_hat) with a geometrically growing rho_hat.
The penalized program is convex because eta_hat is the tangent upper bound
of eta at the previous inner iterate. After convergence the weights are
hard-rounded (per-slot argmax, ties to the lowest user index) and the
resource block is re-solved once at the fixed binary schedule.
"""

from __future__ import annotations

from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from ..convex import ConvexProgram, SolverTolerances, atom_cubic_power
from ..errors import QosInfeasibleError
from ..scenario import Scenario, Trajectory
from ..star_ris import StarRisProfile
from ..tasks_energy import Allocation, flight_energy, rate_table
from .resource import ResourceProgram, compute_energy
from .scales import ProgramScales
from .state import DinkelbachState, PenaltyState, dinkelbach_loop


@dataclass
class SchedulingResult:
    allocation: Allocation
    dinkelbach: DinkelbachState
    penalty: PenaltyState


def _qos_capacity_check(s: Scenario, r_ua, r_bs) -> None:
    """Per-user necessary condition: even sole scheduling cannot meet L_k."""
    cap = s.delta_t * (r_ua[:, :-1] + r_bs[:, :-1]).sum(axis=1)
    deficits = {int(k): float(s.task_bits[k] - cap[k])
                for k in range(s.K) if cap[k] < s.task_bits[k]}
    if deficits:
        raise QosInfeasibleError(
            "users cannot reach their demands even if scheduled in every slot: "
            + ", ".join(f"user {k} short {d:.3e} bits" for k, d in deficits.items()),
            deficits=deficits)


class _RelaxedProgram:
    """Penalized relaxed scheduling program, parameterized in (psi, penalty)."""

    def __init__(self, s: Scenario, r_ua, r_bs, e_const: float,
                 tolerances: SolverTolerances):
        self.s = s
        self.e_const = float(e_const)
        self.tol = tolerances
        self.scales = ProgramScales.for_instance(s, r_ua, r_bs)
        n_off = s.N - 1
        bscale = self.scales.bits

        p = ConvexProgram("scheduling")
        zeta = p.variable("zeta", (s.K, s.N), nonneg=True, ub=1.0)
        l_ua = p.variable("l_ua", (s.K, n_off), nonneg=True)
        l_bs = p.variable("l_bs", (s.K, n_off), nonneg=True)
        f_ua = p.variable("f_ua", (s.K, n_off), nonneg=True)
        f_bs = p.variable("f_bs", (s.K, n_off), nonneg=True)
        psi = p.parameter("psi", nonneg=True, value=0.0)
        # eta_hat summed: rho * sum(zeta (1 - 2 zeta_exp)) + rho * sum(zeta_exp^2),
        # folded into one coefficient matrix and one offset (both in bit units)
        pen_coef = p.parameter("pen_coef", (s.K, s.N))
        pen_off = p.parameter("pen_off")

        p.subject_to(cp.sum(zeta, axis=0) == 1.0)
        p.subject_to(
            l_ua <= cp.multiply(s.delta_t * r_ua[:, :-1] / bscale, zeta[:, :-1]),
            l_bs <= cp.multiply(s.delta_t * r_bs[:, :-1] / bscale, zeta[:, :-1]))
        p.subject_to(cp.sum(l_ua, axis=1) + cp.sum(l_bs, axis=1)
                     >= s.task_bits / bscale)
        p.subject_to(cp.sum(f_ua, axis=0) <= 1.0, cp.sum(f_bs, axis=0) <= 1.0)
        lower = np.tril(np.ones((n_off, n_off)))
        cu = self.scales.causality_coeff_ua(s)
        cb = self.scales.causality_coeff_bs(s)
        p.subject_to(cu * (f_ua @ lower.T) >= l_ua @ lower.T,
                     cb * (f_bs @ lower.T) >= l_bs @ lower.T)

        bits = bscale * (cp.sum(l_ua) + cp.sum(l_bs))
        energy = self.e_const + self.scales.uav_compute_coeff(s) * \
            cp.sum(atom_cubic_power(f_ua))
        penalty = cp.sum(cp.multiply(pen_coef, zeta)) + pen_off
        p.maximize((bits - psi * energy - penalty) / bscale)
        self.program = p

    def solve(self, psi: float, rho_hat: float, zeta_exp: np.ndarray):
        self.program.set_parameter("psi", max(float(psi), 0.0))
        self.program.set_parameter("pen_coef", rho_hat * (1.0 - 2.0 * zeta_exp))
        self.program.set_parameter("pen_off", rho_hat * float(np.sum(zeta_exp**2)))
        res = self.program.solve(self.tol)
        if res.status == "infeasible":
            raise QosInfeasibleError("relaxed scheduling program infeasible")
        if res.status == "unbounded" or "zeta" not in res.primal:
            return None                  # bounded program: solver artifact
        return res

    def full_alloc(self, primal, zeta) -> Allocation:
        s = self.s
        l_ua = np.zeros((s.K, s.N))
        l_bs = np.zeros((s.K, s.N))
        f_ua = np.zeros((s.K, s.N))
        f_bs = np.zeros((s.K, s.N))
        l_ua[:, :-1] = np.maximum(primal["l_ua"], 0.0) * self.scales.bits
        l_bs[:, :-1] = np.maximum(primal["l_bs"], 0.0) * self.scales.bits
        f_ua[:, 1:] = np.maximum(primal["f_ua"], 0.0) * self.scales.f_ua
        f_bs[:, 1:] = np.maximum(primal["f_bs"], 0.0) * self.scales.f_bs
        return Allocation(l_bs=l_bs, l_ua=l_ua, f_bs=f_bs, f_ua=f_ua, zeta=zeta)


def round_schedule(zeta: np.ndarray) -> np.ndarray:
    """Per-slot argmax; numpy breaks ties toward the lowest user index."""
    return np.argmax(zeta, axis=0)


def subproblem1_solve(s: Scenario, traj: Trajectory, profile: StarRisProfile,
                      warm: Allocation, eps1: float = 1e-3, eps2: float = 1e-3,
                      omega: float = 10.0, max_dinkelbach: int = 20,
                      max_penalty: int = 12, rel_floor: float = 1e-9,
                      tolerances: SolverTolerances | None = None) -> SchedulingResult:
    """Outer ratio updates, inner penalty homotopy, final rounding."""
    tol = tolerances or SolverTolerances.from_env()
    r_ua, r_bs = rate_table(s, traj, profile)
    _qos_capacity_check(s, r_ua, r_bs)
    e_const = s.p_tx * s.delta_t * (s.N - 1) + flight_energy(s, traj)

    l_warm = float(warm.l_bs.sum() + warm.l_ua.sum())
    e_warm = e_const + compute_energy(s, warm.f_ua)

    if s.K == 1:
        # a single user is always scheduled; the penalty tier is vacuous
        schedule = np.zeros(s.N, dtype=int)
        prog = ResourceProgram(s, r_ua, r_bs, schedule, e_const, tol)
        alloc, state = dinkelbach_loop(l_warm, e_warm,
                                       lambda psi: prog.solve(psi),
                                       eps1, max_dinkelbach, rel_floor)
        pen = PenaltyState(rho_hat=0.0, omega=omega, v2=0.0, iterations=0)
        return SchedulingResult(allocation=alloc, dinkelbach=state, penalty=pen)

    relaxed = _RelaxedProgram(s, r_ua, r_bs, e_const, tol)
    pen_state = PenaltyState(rho_hat=0.0, omega=omega)

    def tilt(zeta_exp):
        # at an exact tie the tangent coefficient 1 - 2 zeta vanishes and the
        # penalty loses its push; a small lean toward each slot's argmax
        # breaks ties deterministically (the tangent stays a global upper
        # bound at any expansion point, and binary points are unchanged)
        onehot = np.zeros_like(zeta_exp)
        onehot[np.argmax(zeta_exp, axis=0), np.arange(zeta_exp.shape[1])] = 1.0
        return 0.95 * zeta_exp + 0.05 * onehot

    # the incumbent is always a near-binary iterate; a penalty run that
    # cannot binarize (a QoS-pinned fractional basin, or a solver stall)
    # falls back to it, so the ratio loop sees an exact fixed point instead
    # of a corrupted iterate
    incumbent = {
        "alloc": warm, "l": l_warm, "e": e_warm, "v2": 0.0,
        "zeta": np.asarray(warm.zeta, dtype=float),
    }

    def inner(psi):
        zeta_exp = incumbent["zeta"]
        rho = 1e-3 * max(psi * e_warm, 1.0)
        pen_state.trace = []
        best = None                       # lowest binarity gap this run
        v2_prev = np.inf
        stalled = 0
        for t in range(max_penalty):
            res = relaxed.solve(psi, rho, tilt(zeta_exp))
            if res is None:
                break
            zeta_exp = np.clip(res.primal["zeta"], 0.0, 1.0)
            v2 = float(np.max(zeta_exp - zeta_exp**2))
            pen_state.trace.append(v2)
            pen_state.rho_hat = rho
            pen_state.iterations = t + 1
            if best is None or v2 < best[0]:
                best = (v2, res.primal, zeta_exp)
            if v2 <= eps2:
                break
            stalled = stalled + 1 if v2 >= v2_prev * (1 - 1e-3) else 0
            if stalled >= 2:
                break                     # growing rho no longer helps
            v2_prev = v2
            rho *= omega
        if best is not None and best[0] <= eps2:
            alloc = relaxed.full_alloc(best[1], best[2])
            l_val = float(alloc.l_ua.sum() + alloc.l_bs.sum())
            e_val = e_const + compute_energy(s, alloc.f_ua)
            if l_val - psi * e_val > incumbent["l"] - psi * incumbent["e"]:
                incumbent.update(alloc=alloc, l=l_val, e=e_val,
                                 v2=best[0], zeta=best[2])
        pen_state.v2 = incumbent["v2"]
        return incumbent["l"], incumbent["e"], incumbent["alloc"]

    relaxed_alloc, state = dinkelbach_loop(l_warm, e_warm, inner,
                                           eps1, max_dinkelbach, rel_floor)
    if relaxed_alloc is None:
        raise QosInfeasibleError("scheduling loop produced no iterate")

    # hard binarity: round, then one resource resolve at the final ratio;
    # if a hair-thin QoS margin breaks under rounding, the warm binary
    # schedule (feasible by induction) is used instead
    schedule = round_schedule(relaxed_alloc.zeta)
    try:
        prog = ResourceProgram(s, r_ua, r_bs, schedule, e_const, tol)
        _, _, alloc = prog.solve(state.psi)
    except QosInfeasibleError:
        schedule = round_schedule(np.asarray(warm.zeta))
        prog = ResourceProgram(s, r_ua, r_bs, schedule, e_const, tol)
        _, _, alloc = prog.solve(state.psi)
    return SchedulingResult(allocation=alloc, dinkelbach=state, penalty=pen_state)
