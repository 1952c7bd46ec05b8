"""Passive beamforming block: closed-form phases, then amplitude splitting.

Phases come straight from the alignment rule for each slot's scheduled
user. Amplitudes are found by an inner-approximation loop: the quadratic
SNR forms are replaced by their tangents at the previous iterate, which
keeps every solver iterate feasible for the true constraints and makes the
objective nondecreasing. At the fixed point each element pair is rescaled
onto beta_r^2 + beta_t^2 = 1 (the forms are PSD with nonnegative entries
under aligned phases, so scaling up never reduces a rate).
"""

from __future__ import annotations

from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from ..channel import ris_bs_channel, uav_ris_channel, user_ris_channel
from ..convex import ConvexProgram, SolverTolerances
from ..errors import QosInfeasibleError
from ..scenario import Scenario, Trajectory
from ..star_ris import (StarRisProfile, mrt_phases, quadratic_forms,
                        real_quadratic, split_array_masks)
from ..tasks_energy import Allocation, flight_energy, rate_table
from .resource import (add_compute_block, compute_energy,
                       resource_dinkelbach, selection_matrix)
from .scales import ProgramScales
from .state import DinkelbachState, dinkelbach_loop

_DEGENERATE = 1e-300


@dataclass
class BeamformingResult:
    allocation: Allocation
    profile: StarRisProfile
    dinkelbach: DinkelbachState


def slot_quadratic_forms(s: Scenario, traj: Trajectory, schedule: np.ndarray):
    """Per-slot aligned phases and real SNR quadratic forms for the schedule."""
    h_ru = uav_ris_channel(s)
    phi_r = np.zeros((s.N, s.M))
    phi_t = np.zeros((s.N, s.M))
    f_mats = np.zeros((s.N, s.M, s.M))
    e_mats = np.zeros((s.N, s.M, s.M))
    for n in range(1, s.N + 1):
        q = traj.position(n)
        h_rk = user_ris_channel(s, q, int(schedule[n - 1]))
        h_rb = ris_bs_channel(s, q)
        phi_r[n - 1], phi_t[n - 1] = mrt_phases(h_ru, h_rk, h_rb)
        f_c, e_c = quadratic_forms(h_ru, h_rk, h_rb, phi_r[n - 1], phi_t[n - 1],
                                   s.noise_bs, s.noise_uav)
        f_mats[n - 1] = real_quadratic(f_c)
        e_mats[n - 1] = real_quadratic(e_c)
    return phi_r, phi_t, f_mats, e_mats


def saturate_amplitudes(beta_r: np.ndarray, beta_t: np.ndarray):
    """Scale each element pair onto the unit energy-split circle."""
    br = np.clip(np.asarray(beta_r, dtype=float), 0.0, 1.0)
    bt = np.clip(np.asarray(beta_t, dtype=float), 0.0, 1.0)
    norm = np.sqrt(br**2 + bt**2)
    dead = norm < 1e-12
    br = np.where(dead, 1.0 / np.sqrt(2.0), br)
    bt = np.where(dead, 1.0 / np.sqrt(2.0), bt)
    norm = np.where(dead, 1.0, norm)
    return np.minimum(br / norm, 1.0), np.minimum(bt / norm, 1.0)


class _AmplitudeProgram:
    """Amplitude/resource program with tangent SNR lower bounds as parameters."""

    def __init__(self, s: Scenario, schedule, f_mats, e_mats, e_const: float,
                 tolerances: SolverTolerances):
        self.s = s
        self.e_const = float(e_const)
        self.tol = tolerances
        n_off = s.N - 1
        self.n_off = n_off
        self.scales = ProgramScales.for_instance(s)
        bscale = self.scales.bits
        # slots whose scheduled link carries no usable channel get l = 0
        self.alive_bs = np.array([np.abs(f_mats[j]).max() > _DEGENERATE
                                  for j in range(n_off)])
        self.alive_ua = np.array([np.abs(e_mats[j]).max() > _DEGENERATE
                                  for j in range(n_off)])

        p = ConvexProgram("amplitudes")
        beta_r = p.variable("beta_r", (s.M, n_off), nonneg=True, ub=1.0)
        beta_t = p.variable("beta_t", (s.M, n_off), nonneg=True, ub=1.0)
        gam_bs = p.variable("gam_bs", (n_off,), nonneg=True)
        gam_ua = p.variable("gam_ua", (n_off,), nonneg=True)
        l_ua = p.variable("l_ua", (n_off,), nonneg=True)
        l_bs = p.variable("l_bs", (n_off,), nonneg=True)
        psi = p.parameter("psi", nonneg=True, value=0.0)
        # tangent of beta^T Q beta at the expansion: (2 Q b0)^T beta - b0^T Q b0
        a_r = p.parameter("a_r", (s.M, n_off))
        c_r = p.parameter("c_r", (n_off,))
        a_t = p.parameter("a_t", (s.M, n_off))
        c_t = p.parameter("c_t", (n_off,))

        p.subject_to(cp.square(beta_r) + cp.square(beta_t) <= 1.0)
        p.subject_to(gam_bs <= cp.sum(cp.multiply(a_r, beta_r), axis=0) - c_r,
                     gam_ua <= cp.sum(cp.multiply(a_t, beta_t), axis=0) - c_t)
        rate_bs = (s.delta_t * s.bandwidth / bscale) * cp.log1p(gam_bs) / np.log(2.0)
        rate_ua = (s.delta_t * s.bandwidth / bscale) * cp.log1p(gam_ua) / np.log(2.0)
        p.subject_to(l_bs <= rate_bs, l_ua <= rate_ua)
        for j in np.nonzero(~self.alive_bs)[0]:
            p.subject_to(l_bs[int(j)] == 0.0)
        for j in np.nonzero(~self.alive_ua)[0]:
            p.subject_to(l_ua[int(j)] == 0.0)

        sel = selection_matrix(s, schedule)
        p.subject_to(sel @ l_ua + sel @ l_bs >= s.task_bits / bscale)
        _, _, e_com = add_compute_block(p, s, sel, self.scales, l_ua, l_bs)
        bits = bscale * (cp.sum(l_ua) + cp.sum(l_bs))
        p.maximize((bits - psi * (self.e_const + e_com)) / bscale)
        self.program = p
        # gamma models the SNR, so the transmit power scales the forms here
        self.f_mats = s.p_tx * f_mats
        self.e_mats = s.p_tx * e_mats

    def set_expansion(self, br_exp: np.ndarray, bt_exp: np.ndarray) -> None:
        # a floor keeps the tangents away from the fully degenerate all-zero
        # point (any expansion still yields a valid global lower bound)
        br_exp = np.maximum(br_exp, 1e-3)
        bt_exp = np.maximum(bt_exp, 1e-3)
        m, n_off = self.s.M, self.n_off
        a_r = np.zeros((m, n_off))
        c_r = np.zeros(n_off)
        a_t = np.zeros((m, n_off))
        c_t = np.zeros(n_off)
        for j in range(n_off):
            fr, er = self.f_mats[j], self.e_mats[j]
            a_r[:, j] = 2.0 * fr @ br_exp[:, j]
            c_r[j] = float(br_exp[:, j] @ fr @ br_exp[:, j])
            a_t[:, j] = 2.0 * er @ bt_exp[:, j]
            c_t[j] = float(bt_exp[:, j] @ er @ bt_exp[:, j])
        self.program.set_parameter("a_r", a_r)
        self.program.set_parameter("c_r", c_r)
        self.program.set_parameter("a_t", a_t)
        self.program.set_parameter("c_t", c_t)

    def solve(self, psi: float):
        self.program.set_parameter("psi", max(float(psi), 0.0))
        res = self.program.solve(self.tol)
        if res.status == "infeasible":
            raise QosInfeasibleError("amplitude program infeasible")
        if res.status == "unbounded" or "beta_r" not in res.primal:
            return None                  # stall; caller keeps last iterate
        return res

    def bits_and_energy(self, primal):
        l_val = self.scales.bits * float(primal["l_ua"].sum() + primal["l_bs"].sum())
        f_ua = np.maximum(primal["f_ua"], 0.0) * self.scales.f_ua
        return l_val, self.e_const + compute_energy(self.s, f_ua)


def subproblem2_solve(s: Scenario, traj: Trajectory, zeta: np.ndarray,
                      warm_alloc: Allocation, warm_profile: StarRisProfile,
                      eps1: float = 1e-3, max_dinkelbach: int = 15,
                      max_sca: int = 12, sca_rel_tol: float = 1e-6,
                      rel_floor: float = 1e-9,
                      tolerances: SolverTolerances | None = None) -> BeamformingResult:
    """Phases by alignment, amplitudes by the tangent-bound loop."""
    tol = tolerances or SolverTolerances.from_env()
    schedule = np.argmax(np.asarray(zeta), axis=0)
    phi_r, phi_t, f_mats, e_mats = slot_quadratic_forms(s, traj, schedule)
    e_const = s.p_tx * s.delta_t * (s.N - 1) + flight_energy(s, traj)
    prog = _AmplitudeProgram(s, schedule, f_mats, e_mats, e_const, tol)

    br = np.asarray(warm_profile.beta_r[:s.N - 1].T, dtype=float).copy()
    bt = np.asarray(warm_profile.beta_t[:s.N - 1].T, dtype=float).copy()

    l_warm = float(warm_alloc.l_bs.sum() + warm_alloc.l_ua.sum())
    e_warm = e_const + compute_energy(s, warm_alloc.f_ua)
    last_good = None

    def inner(psi):
        nonlocal br, bt, last_good
        prev = -np.inf
        for _ in range(max_sca):
            prog.set_expansion(br, bt)
            res = prog.solve(psi)
            if res is None:
                break
            last_good = res.primal
            br = np.clip(res.primal["beta_r"], 0.0, 1.0)
            bt = np.clip(res.primal["beta_t"], 0.0, 1.0)
            if res.objective - prev <= sca_rel_tol * max(abs(res.objective), 1.0):
                break
            prev = res.objective
        if last_good is None:
            raise QosInfeasibleError("amplitude program stalled before any iterate")
        l_val, e_val = prog.bits_and_energy(last_good)
        return l_val, e_val, dict(last_good)

    payload, state = dinkelbach_loop(l_warm, e_warm, inner, eps1,
                                     max_dinkelbach, rel_floor)
    if payload is None:
        raise QosInfeasibleError("amplitude loop produced no iterate")

    br_fin, bt_fin = saturate_amplitudes(payload["beta_r"], payload["beta_t"])
    beta_r = np.zeros((s.N, s.M))
    beta_t = np.zeros((s.N, s.M))
    beta_r[:-1] = br_fin.T
    beta_t[:-1] = bt_fin.T
    beta_r[-1], beta_t[-1] = saturate_amplitudes(warm_profile.beta_r[-1],
                                                 warm_profile.beta_t[-1])
    profile = StarRisProfile(phi_r=phi_r, phi_t=phi_t, beta_r=beta_r, beta_t=beta_t)

    from .resource import assemble_allocation
    alloc = assemble_allocation(s, schedule, prog.scales, payload)
    return BeamformingResult(allocation=alloc, profile=profile, dinkelbach=state)


def split_profile(s: Scenario, traj: Trajectory, schedule: np.ndarray) -> StarRisProfile:
    """Two conventional arrays: half reflects at full gain, half transmits."""
    reflect, transmit = split_array_masks(s.M)
    h_ru = uav_ris_channel(s)
    phi_r = np.zeros((s.N, s.M))
    phi_t = np.zeros((s.N, s.M))
    for n in range(1, s.N + 1):
        q = traj.position(n)
        h_rk = user_ris_channel(s, q, int(schedule[n - 1]))
        h_rb = ris_bs_channel(s, q)
        phi_r[n - 1], phi_t[n - 1] = mrt_phases(h_ru, h_rk, h_rb)
    beta_r = np.tile(reflect.astype(float), (s.N, 1))
    beta_t = np.tile(transmit.astype(float), (s.N, 1))
    return StarRisProfile(phi_r=phi_r, phi_t=phi_t, beta_r=beta_r, beta_t=beta_t)


def subproblem2_split_solve(s: Scenario, traj: Trajectory, zeta: np.ndarray,
                            warm_alloc: Allocation,
                            eps1: float = 1e-3, max_dinkelbach: int = 15,
                            rel_floor: float = 1e-9,
                            tolerances: SolverTolerances | None = None) -> BeamformingResult:
    """Baseline variant: amplitudes pinned to the element masks, phases aligned."""
    schedule = np.argmax(np.asarray(zeta), axis=0)
    profile = split_profile(s, traj, schedule)
    e_const = s.p_tx * s.delta_t * (s.N - 1) + flight_energy(s, traj)
    r_ua, r_bs = rate_table(s, traj, profile)
    alloc, state = resource_dinkelbach(s, r_ua, r_bs, schedule, e_const,
                                       warm=warm_alloc, eps1=eps1,
                                       max_iters=max_dinkelbach,
                                       rel_floor=rel_floor,
                                       tolerances=tolerances)
    return BeamformingResult(allocation=alloc, profile=profile, dinkelbach=state)
