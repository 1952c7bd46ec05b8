"""Block coordinate descent over scheduling, beamforming, and trajectory.

Each block update is accepted only if the exact-model energy efficiency
does not decrease, so the reported trace is nondecreasing by construction
and a full round of rejected blocks makes the residual exactly zero.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from ..convex import SolverTolerances
from ..errors import QosInfeasibleError
from ..scenario import (Scenario, Trajectory, straight_line_trajectory,
                        trajectory_violations)
from ..star_ris import StarRisProfile, mrt_profile
from ..tasks_energy import (Allocation, check_feasibility, energy_breakdown,
                            energy_efficiency, rate_table, total_bits)
from .beamforming import (split_profile, subproblem2_solve,
                          subproblem2_split_solve)
from .resource import schedule_matrix
from .scheduling import subproblem1_solve
from .trajectory_opt import subproblem3_solve

MODE_STAR = "star"
MODE_SPLIT = "split"


@dataclass
class BcdOptions:
    eps: float = 1e-3
    eps1: float = 1e-3
    eps2: float = 1e-3
    omega: float = 10.0
    max_bcd_iters: int = 50
    max_dinkelbach: int = 15
    max_penalty: int = 12
    max_sca: int = 10
    rel_floor: float = 1e-9
    optimize_trajectory: bool = True
    mode: str = MODE_STAR
    tolerances: SolverTolerances = field(default_factory=SolverTolerances.from_env)


@dataclass
class SolveReport:
    ee_trace: list
    iterations: list
    termination: str
    scheme: str
    allocation: Allocation
    profile: StarRisProfile
    trajectory: Trajectory
    energy: dict
    total_bits: float
    seed: int | None = None
    timings: dict = field(default_factory=dict)

    def to_dict(self, include_timings: bool = False) -> dict:
        d = {
            "schema": "starmec.report.v1",
            "scheme": self.scheme,
            "seed": self.seed,
            "termination": self.termination,
            "ee_trace": [float(x) for x in self.ee_trace],
            "iterations": self.iterations,
            "energy": self.energy,
            "total_bits": float(self.total_bits),
            "final": {
                "zeta": self.allocation.zeta.tolist(),
                "l_ua": self.allocation.l_ua.tolist(),
                "l_bs": self.allocation.l_bs.tolist(),
                "f_ua": self.allocation.f_ua.tolist(),
                "f_bs": self.allocation.f_bs.tolist(),
                "trajectory": self.trajectory.q.tolist(),
                "beta_r": self.profile.beta_r.tolist(),
                "beta_t": self.profile.beta_t.tolist(),
                "phi_r": self.profile.phi_r.tolist(),
                "phi_t": self.profile.phi_t.tolist(),
            },
        }
        if include_timings:
            d["timings"] = self.timings
        return d

    def to_json(self, include_timings: bool = False) -> str:
        return json.dumps(self.to_dict(include_timings), sort_keys=True, indent=1)

    @property
    def energy_efficiency(self) -> float:
        return float(self.ee_trace[-1])


def _smooth_out_and_back(s: Scenario, target_xy: np.ndarray) -> Trajectory:
    """Out-and-back leg toward a point with a sinusoidal speed profile.

    Used when the mission starts and ends at the same pad: the UAV eases
    toward the target and back with zero boundary speed, with the amplitude
    capped by both flight limits.
    """
    span = (s.N + 1) * s.delta_t
    direction = target_xy - s.q_init[:2]
    dist = float(np.linalg.norm(direction))
    if dist < 1e-9:
        return straight_line_trajectory(s)
    direction = direction / dist
    amp_v = s.v_max * span / np.pi
    amp_a = s.a_max * (span / (2 * np.pi)) ** 2 * 2.0
    amp = 0.9 * min(dist, amp_v, amp_a)
    tau = np.arange(s.N + 2) / (s.N + 1)
    along = amp * (1.0 - np.cos(2.0 * np.pi * tau)) / 2.0
    q = np.zeros((s.N + 2, 3))
    q[:, 0] = s.q_init[0] + along * direction[0]
    q[:, 1] = s.q_init[1] + along * direction[1]
    q[:, 2] = s.uav_alt
    return Trajectory(q)


def default_initializer(s: Scenario, mode: str = MODE_STAR,
                        hover_at_centroid: bool = False):
    """Feasible starting point: round-robin schedule, greedy bits, JIT compute.

    Returns (Allocation, StarRisProfile, Trajectory) passing the binary
    feasibility check, or raises QosInfeasibleError naming the shortfalls.
    """
    if hover_at_centroid and np.allclose(s.q_init, s.q_final):
        traj = _smooth_out_and_back(s, s.user_pos[:, :2].mean(axis=0))
    else:
        traj = straight_line_trajectory(s)
    schedule = np.arange(s.N) % s.K
    if mode == MODE_SPLIT:
        profile = split_profile(s, traj, schedule)
    else:
        profile = mrt_profile(s, traj, schedule)
    r_ua, r_bs = rate_table(s, traj, profile)

    # greedy bit loading: BS link first (its compute energy is not billed),
    # capped by the slot rate and by what one slot of full CPU can absorb
    cap_slot_ua = s.delta_t * s.f_uav_max / s.cycles_per_bit_uav
    cap_slot_bs = s.delta_t * s.f_bs_max / s.cycles_per_bit_bs
    remaining = s.task_bits.astype(float).copy()
    l_ua = np.zeros((s.K, s.N))
    l_bs = np.zeros((s.K, s.N))
    for n in range(s.N - 1):
        k = int(schedule[n])
        take_bs = min(s.delta_t * r_bs[k, n], cap_slot_bs, remaining[k])
        l_bs[k, n] = max(take_bs, 0.0)
        remaining[k] -= l_bs[k, n]
        take_ua = min(s.delta_t * r_ua[k, n], cap_slot_ua, remaining[k])
        l_ua[k, n] = max(take_ua, 0.0)
        remaining[k] -= l_ua[k, n]
    if np.any(remaining > 1e-6):
        deficits = {int(k): float(remaining[k])
                    for k in np.nonzero(remaining > 1e-6)[0]}
        raise QosInfeasibleError(
            "initializer cannot meet task demands (consider a longer mission "
            "period or more RIS elements): "
            + ", ".join(f"user {k} short {d:.3e} bits" for k, d in deficits.items()),
            deficits=deficits)

    # just-in-time computing: process each slot's bits in the next slot
    f_ua = np.zeros((s.K, s.N))
    f_bs = np.zeros((s.K, s.N))
    f_ua[:, 1:] = s.cycles_per_bit_uav * l_ua[:, :-1] / s.delta_t
    f_bs[:, 1:] = s.cycles_per_bit_bs * l_bs[:, :-1] / s.delta_t
    alloc = Allocation(l_bs=l_bs, l_ua=l_ua, f_bs=f_bs, f_ua=f_ua,
                       zeta=schedule_matrix(s, schedule))
    bad = check_feasibility(s, traj, profile, alloc, binary=True)
    if bad:
        raise QosInfeasibleError(
            "initializer allocation failed validation: "
            + "; ".join(f"{v.code}: {v.message}" for v in bad[:4]))
    return alloc, profile, traj


def _ee(s, traj, profile, alloc) -> float:
    return energy_efficiency(s, traj, profile, alloc)


def bcd_solve(s: Scenario, init=None, opts: BcdOptions | None = None,
              scheme: str = "proposed", seed: int | None = None) -> SolveReport:
    """Cycle the three blocks until the efficiency gain falls below eps."""
    opts = opts or BcdOptions()
    t_start = time.perf_counter()
    timings = {}
    if init is None:
        init = default_initializer(s, mode=opts.mode)
    alloc, profile, traj = init
    ee = _ee(s, traj, profile, alloc)
    trace = [ee]
    iter_records = []
    termination = "max-iterations"

    for it in range(1, opts.max_bcd_iters + 1):
        record = {}
        t_it = time.perf_counter()

        sp1 = subproblem1_solve(
            s, traj, profile, alloc, eps1=opts.eps1, eps2=opts.eps2,
            omega=opts.omega, max_dinkelbach=opts.max_dinkelbach,
            max_penalty=opts.max_penalty, rel_floor=opts.rel_floor,
            tolerances=opts.tolerances)
        cand = sp1.allocation
        cand_ee = _ee(s, traj, profile, cand)
        accepted = cand_ee >= ee - 1e-9 * max(ee, 1.0) and not check_feasibility(
            s, traj, profile, cand, binary=True)
        if accepted:
            alloc, ee = cand, max(cand_ee, ee)
        record["sp1"] = {
            "psi": sp1.dinkelbach.psi, "v1": sp1.dinkelbach.v1,
            "psi_trace": list(sp1.dinkelbach.trace),
            "iterations": sp1.dinkelbach.iterations,
            "termination": sp1.dinkelbach.termination,
            "penalty_v2": sp1.penalty.v2, "penalty_rho": sp1.penalty.rho_hat,
            "penalty_trace": list(sp1.penalty.trace),
            "accepted": bool(accepted),
        }

        if opts.mode == MODE_SPLIT:
            sp2 = subproblem2_split_solve(
                s, traj, alloc.zeta, alloc, eps1=opts.eps1,
                max_dinkelbach=opts.max_dinkelbach, rel_floor=opts.rel_floor,
                tolerances=opts.tolerances)
        else:
            sp2 = subproblem2_solve(
                s, traj, alloc.zeta, alloc, profile, eps1=opts.eps1,
                max_dinkelbach=opts.max_dinkelbach, max_sca=opts.max_sca,
                rel_floor=opts.rel_floor, tolerances=opts.tolerances)
        cand_ee = _ee(s, traj, sp2.profile, sp2.allocation)
        accepted = cand_ee >= ee - 1e-9 * max(ee, 1.0) and not check_feasibility(
            s, traj, sp2.profile, sp2.allocation, binary=True)
        if accepted:
            alloc, profile, ee = sp2.allocation, sp2.profile, max(cand_ee, ee)
        record["sp2"] = {
            "psi": sp2.dinkelbach.psi, "v1": sp2.dinkelbach.v1,
            "psi_trace": list(sp2.dinkelbach.trace),
            "iterations": sp2.dinkelbach.iterations,
            "termination": sp2.dinkelbach.termination,
            "accepted": bool(accepted),
        }

        if opts.optimize_trajectory:
            sp3 = subproblem3_solve(
                s, alloc.zeta, profile, alloc, traj, eps1=opts.eps1,
                max_dinkelbach=opts.max_dinkelbach, max_sca=opts.max_sca,
                rel_floor=opts.rel_floor, tolerances=opts.tolerances)
            cand_ee = _ee(s, sp3.trajectory, sp3.profile, sp3.allocation)
            accepted = (cand_ee >= ee - 1e-9 * max(ee, 1.0)
                        and not trajectory_violations(sp3.trajectory, s)
                        and not check_feasibility(s, sp3.trajectory, sp3.profile,
                                                  sp3.allocation, binary=True))
            if accepted:
                alloc, traj, profile, ee = (sp3.allocation, sp3.trajectory,
                                            sp3.profile, max(cand_ee, ee))
            record["sp3"] = {
                "psi": sp3.dinkelbach.psi, "v1": sp3.dinkelbach.v1,
                "psi_trace": list(sp3.dinkelbach.trace),
                "iterations": sp3.dinkelbach.iterations,
                "termination": sp3.dinkelbach.termination,
                "sca_steps": sp3.sca_steps, "rejected_steps": sp3.rejected_steps,
                "accepted": bool(accepted),
            }

        timings[f"iteration_{it}"] = time.perf_counter() - t_it
        residual = abs(ee - trace[-1])
        trace.append(ee)
        record["ee"] = ee
        record["residual"] = residual
        iter_records.append(record)
        if residual <= opts.eps:
            termination = "converged"
            break

    timings["total"] = time.perf_counter() - t_start
    eb = energy_breakdown(s, traj, alloc)
    return SolveReport(
        ee_trace=trace, iterations=iter_records, termination=termination,
        scheme=scheme, allocation=alloc, profile=profile, trajectory=traj,
        energy={"e_users": eb.e_users, "e_com_uav": eb.e_com_uav,
                "e_com_bs": eb.e_com_bs, "e_fly": eb.e_fly,
                "e_total": eb.e_total},
        total_bits=total_bits(alloc), seed=seed, timings=timings)
