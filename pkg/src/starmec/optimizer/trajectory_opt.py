"""Trajectory block: distance-relaxed rates plus a flight-energy surrogate.

Path-loss terms enter through auxiliary epigraph variables lam >= d^alpha,
rates through tangent lower bounds in (lam, lam_tilde), and the induced
propulsion term through the reformulated constraint mu^2 + v^2/v0^2 >= 1/mu^2
linearized at the expansion. Each accepted step must not decrease the true
objective L - psi * E (evaluated with the exact channel and energy models,
offloaded bits clipped to the true rates at the candidate); a decrease or a
surrogate/true divergence beyond 1e-3 relative shrinks a trust-region box
around the expansion trajectory and re-solves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from ..channel import ris_bs_channel, uav_ris_channel, user_ris_channel
from ..convex import (ConvexProgram, SolverTolerances, atom_inv_square,
                      atom_norm_power)
from ..errors import QosInfeasibleError
from ..scenario import Scenario, Trajectory
from ..star_ris import StarRisProfile, composite_gain, mrt_profile
from ..tasks_energy import Allocation, flight_energy, rate_table
from .resource import add_compute_block, compute_energy, selection_matrix
from .scales import ProgramScales
from .state import DinkelbachState, dinkelbach_loop
from .surrogates import (induced_factor_sq, rate_taylor_bs_coeffs,
                         rate_taylor_ua_coeffs)

_MU_MIN = 1e-3


@dataclass
class TrajectoryResult:
    allocation: Allocation
    trajectory: Trajectory
    profile: StarRisProfile
    dinkelbach: DinkelbachState
    sca_steps: int = 0
    rejected_steps: int = 0


def composite_constants(s: Scenario, traj: Trajectory, profile: StarRisProfile,
                        schedule: np.ndarray):
    """Distance-stripped SNR numerators per offload slot at a trajectory.

    a_ua[j] multiplies 1/(lam sigma_ua^2); a_bs[j] multiplies
    1/(lam lam_tilde sigma_bs^2). Steering parts are evaluated at the given
    trajectory and treated as constants by the program.
    """
    h_ru = uav_ris_channel(s)
    n_off = s.N - 1
    a_ua = np.zeros(n_off)
    a_bs = np.zeros(n_off)
    for j in range(n_off):
        n = j + 1
        q = traj.position(n)
        k = int(schedule[j])
        h_rk = user_ris_channel(s, q, k)
        h_rb = ris_bs_channel(s, q)
        phi_r, phi_t, beta_r, beta_t = profile.slot(n)
        hk_hat = h_rk.h / h_rk.gain          # unit-modulus steering part
        hb_hat = h_rb.h / h_rb.gain
        a_ua[j] = s.rho_gain * s.p_tx * composite_gain(h_ru.h_ru, hk_hat, phi_t, beta_t)
        a_bs[j] = s.rho_gain**2 * s.p_tx * composite_gain(hb_hat, hk_hat, phi_r, beta_r)
    return a_ua, a_bs


class _TrajectoryProgram:
    def __init__(self, s: Scenario, schedule, tolerances: SolverTolerances):
        self.s = s
        self.tol = tolerances
        n_off = s.N - 1
        self.n_off = n_off
        self.scales = ProgramScales.for_instance(s)
        sched = np.asarray(schedule, dtype=int)
        self.user_xy = s.user_pos[sched[:-1], :2]          # per offload slot
        self.dz_user = s.uav_alt                            # users sit at z = 0
        self.dz_bs = s.uav_alt - float(s.bs_pos[2])
        self.lam_floor = s.uav_alt**s.alpha_rk
        self.lamt_floor = max(abs(self.dz_bs), 1e-3)**s.alpha_rb
        # lam variables are kept near 1 by measuring them in floor units

        p = ConvexProgram("trajectory")
        q = p.variable("q", (s.N, 2))
        lam = p.variable("lam", (n_off,))
        lam_t = p.variable("lam_t", (n_off,))
        mu = p.variable("mu", (s.N,), lb=_MU_MIN)
        l_ua = p.variable("l_ua", (n_off,), nonneg=True)
        l_bs = p.variable("l_bs", (n_off,), nonneg=True)

        psi = p.parameter("psi", nonneg=True, value=0.0)
        a0_ua = p.parameter("a0_ua", (n_off,))
        a1_ua = p.parameter("a1_ua", (n_off,))
        b0 = p.parameter("b0", (n_off,))
        b1 = p.parameter("b1", (n_off,))
        b2 = p.parameter("b2", (n_off,))
        g_mu = p.parameter("g_mu", (s.N,), nonneg=True)
        g_q = p.parameter("g_q", (s.N, 2))
        g_0 = p.parameter("g_0", (s.N,))
        q_exp = p.parameter("q_exp", (s.N, 2))
        tr = p.parameter("tr", nonneg=True)

        dt = s.delta_t
        q0 = s.q_init[:2]
        qf = s.q_final[:2]
        # segments i = 0..N: anchors are constants
        seg = [q[0] - q0]
        for i in range(s.N - 1):
            seg.append(q[i + 1] - q[i])
        seg.append(qf - q[s.N - 1])
        for d in seg:
            p.subject_to(cp.norm(d) <= s.v_max * dt)
        for i in range(s.N):
            p.subject_to(cp.norm(seg[i + 1] - seg[i]) <= s.a_max * dt * dt)
        if s.endpoint_convention == "n":
            p.subject_to(q[s.N - 1] == qf)

        p.subject_to(lam >= 1.0, lam_t >= 1.0)
        du_scale = self.lam_floor ** (1.0 / s.alpha_rk)
        db_scale = self.lamt_floor ** (1.0 / s.alpha_rb)
        for j in range(n_off):
            du = cp.hstack([q[j] - self.user_xy[j], np.array([self.dz_user])])
            p.subject_to(atom_norm_power(du / du_scale, s.alpha_rk) <= lam[j])
            db = cp.hstack([q[j] - s.bs_pos[:2], np.array([self.dz_bs])])
            p.subject_to(atom_norm_power(db / db_scale, s.alpha_rb) <= lam_t[j])

        bscale = self.scales.bits
        p.subject_to(
            l_ua <= (s.delta_t / bscale) * (a0_ua + cp.multiply(a1_ua, lam)),
            l_bs <= (s.delta_t / bscale) * (b0 + cp.multiply(b1, lam)
                                            + cp.multiply(b2, lam_t)))

        # induced-power surrogate per mission segment n = 1..N
        for n in range(1, s.N + 1):
            g_expr = (g_0[n - 1] + g_mu[n - 1] * mu[n - 1]
                      + g_q[n - 1] @ seg[n])
            p.subject_to(atom_inv_square(mu[n - 1]) <= g_expr)

        sel = selection_matrix(s, sched)
        p.subject_to(sel @ l_ua + sel @ l_bs >= s.task_bits / bscale)
        _, _, e_com = add_compute_block(p, s, sel, self.scales, l_ua, l_bs)

        p.subject_to(cp.abs(q - q_exp) <= tr)

        fp = s.flight
        e_fly = 0
        for n in range(1, s.N + 1):
            v2 = cp.sum_squares(seg[n]) / dt**2
            v3 = atom_norm_power(seg[n], 3) / dt**3
            e_fly = e_fly + dt * (fp.p0 * (1.0 + 3.0 * v2 / fp.u_tip**2)
                                  + fp.drag_term * v3
                                  + fp.p0_hat * mu[n - 1])
        e_ut = s.p_tx * dt * (s.N - 1)
        bits = bscale * (cp.sum(l_ua) + cp.sum(l_bs))
        energy = e_ut + e_com + e_fly
        p.maximize((bits - psi * energy) / bscale)
        self.program = p

    def set_expansion(self, s: Scenario, q_full_exp: np.ndarray,
                      a_ua: np.ndarray, a_bs: np.ndarray, tr: float) -> None:
        """Linearize rates and the induced term at the expansion trajectory."""
        n_off = self.n_off
        q_slots = q_full_exp[1:-1, :2]
        lam_exp = np.zeros(n_off)
        lamt_exp = np.zeros(n_off)
        a0u = np.zeros(n_off)
        a1u = np.zeros(n_off)
        b0 = np.zeros(n_off)
        b1 = np.zeros(n_off)
        b2 = np.zeros(n_off)
        for j in range(n_off):
            du = math.hypot(*(q_slots[j] - self.user_xy[j]), self.dz_user)
            db = math.hypot(*(q_slots[j] - s.bs_pos[:2]), self.dz_bs)
            lam_exp[j] = du**s.alpha_rk
            lamt_exp[j] = db**s.alpha_rb
            a0u[j], a1u[j] = rate_taylor_ua_coeffs(
                lam_exp[j], a_ua[j], s.noise_uav, s.bandwidth)
            b0[j], b1[j], b2[j] = rate_taylor_bs_coeffs(
                lam_exp[j], lamt_exp[j], a_bs[j], s.noise_bs, s.bandwidth)
        # slopes rescale onto the floor-normalized lam variables
        a1u *= self.lam_floor
        b1 *= self.lam_floor
        b2 *= self.lamt_floor

        dq = np.diff(q_full_exp[:, :2], axis=0)            # (N+1, 2)
        v = np.linalg.norm(dq, axis=1) / s.delta_t
        mu_exp = np.sqrt(np.maximum(induced_factor_sq(v[1:], s.flight.v0),
                                    _MU_MIN**2))
        g_mu = 2.0 * mu_exp
        g_q = 2.0 * dq[1:] / (s.flight.v0**2 * s.delta_t**2)
        g_0 = (-mu_exp**2
               - np.sum(dq[1:]**2, axis=1) / (s.flight.v0**2 * s.delta_t**2))

        prog = self.program
        prog.set_parameter("a0_ua", a0u)
        prog.set_parameter("a1_ua", a1u)
        prog.set_parameter("b0", b0)
        prog.set_parameter("b1", b1)
        prog.set_parameter("b2", b2)
        prog.set_parameter("g_mu", g_mu)
        prog.set_parameter("g_q", g_q)
        prog.set_parameter("g_0", g_0)
        prog.set_parameter("q_exp", q_full_exp[1:-1, :2])
        prog.set_parameter("tr", tr)

    def solve(self, psi: float):
        self.program.set_parameter("psi", max(float(psi), 0.0))
        res = self.program.solve(self.tol)
        if res.status == "infeasible":
            raise QosInfeasibleError("trajectory program infeasible")
        if res.status == "unbounded" or "q" not in res.primal:
            return None                  # stall; caller shrinks the region
        return res


def _candidate_trajectory(s: Scenario, q_xy: np.ndarray) -> Trajectory:
    q = np.zeros((s.N + 2, 3))
    q[0] = s.q_init
    q[-1] = s.q_final
    q[1:-1, :2] = q_xy
    q[1:-1, 2] = s.uav_alt
    return Trajectory(q)


def _true_objective(s: Scenario, traj: Trajectory, profile: StarRisProfile,
                    schedule, values, psi: float):
    """Exact-model objective of a candidate, bits clipped to the true rates.

    `values` carries real-unit per-slot bits and full-rate frequencies.
    Returns (objective, L, E, clipped l_ua, clipped l_bs, qos_ok).
    """
    r_ua, r_bs = rate_table(s, traj, profile)
    sched = np.asarray(schedule, dtype=int)
    idx = np.arange(s.N - 1)
    cap_ua = s.delta_t * r_ua[sched[:-1], idx]
    cap_bs = s.delta_t * r_bs[sched[:-1], idx]
    l_ua = np.minimum(np.maximum(values["l_ua"], 0.0), cap_ua)
    l_bs = np.minimum(np.maximum(values["l_bs"], 0.0), cap_bs)
    per_user = np.zeros(s.K)
    np.add.at(per_user, sched[:-1], l_ua + l_bs)
    qos_ok = bool(np.all(per_user >= s.task_bits * (1.0 - 1e-9) - 1e-6))
    l_val = float(l_ua.sum() + l_bs.sum())
    e_val = (s.p_tx * s.delta_t * (s.N - 1)
             + compute_energy(s, values["f_ua"]) + flight_energy(s, traj))
    return l_val - psi * e_val, l_val, e_val, l_ua, l_bs, qos_ok


def subproblem3_solve(s: Scenario, zeta: np.ndarray, profile: StarRisProfile,
                      warm_alloc: Allocation, warm_traj: Trajectory,
                      eps1: float = 1e-3, max_dinkelbach: int = 12,
                      max_sca: int = 10, max_rejects: int = 8,
                      divergence_tol: float = 1e-3, rel_floor: float = 1e-9,
                      tolerances: SolverTolerances | None = None) -> TrajectoryResult:
    """Trust-region SCA around the incoming trajectory, ratio loop outside.

    Moving the platform dealigns the phase profile that was synthesized for
    the incoming positions, which would veto every step under the exact
    models; since the alignment rule is a closed form of the trajectory, the
    phases are re-aligned (amplitudes untouched) whenever a candidate is
    evaluated or adopted, and the updated profile is returned.
    """
    tol = tolerances or SolverTolerances.from_env()
    schedule = np.argmax(np.asarray(zeta), axis=0)
    prog = _TrajectoryProgram(s, schedule, tol)
    tr0 = 2.0 * s.v_max * s.T
    tr_memory = {"start": tr0}

    state_payload = {
        "traj": warm_traj,
        "profile": profile,
        "l_ua": warm_alloc.l_ua[schedule[:-1], np.arange(s.N - 1)].copy(),
        "l_bs": warm_alloc.l_bs[schedule[:-1], np.arange(s.N - 1)].copy(),
        "f_ua": warm_alloc.f_ua[:, 1:].copy(),
        "f_bs": warm_alloc.f_bs[:, 1:].copy(),
    }
    counters = {"sca": 0, "rejects": 0}

    l_warm = float(warm_alloc.l_bs.sum() + warm_alloc.l_ua.sum())
    e_warm = (s.p_tx * s.delta_t * (s.N - 1)
              + compute_energy(s, warm_alloc.f_ua) + flight_energy(s, warm_traj))

    def realigned(traj: Trajectory, prof: StarRisProfile) -> StarRisProfile:
        return mrt_profile(s, traj, schedule,
                           beta_r=prof.beta_r, beta_t=prof.beta_t)

    def inner(psi):
        best = state_payload.copy()
        cur_obj, cur_l, cur_e, _, _, _ = _true_objective(
            s, best["traj"], best["profile"], schedule,
            {"l_ua": best["l_ua"], "l_bs": best["l_bs"], "f_ua": best["f_ua"]},
            psi)
        for _ in range(max_sca):
            a_ua, a_bs = composite_constants(s, best["traj"], best["profile"],
                                             schedule)
            tr = tr_memory["start"]
            accepted = False
            for _ in range(max_rejects):
                prog.set_expansion(s, best["traj"].q, a_ua, a_bs, tr)
                res = prog.solve(psi)
                if res is None:
                    counters["rejects"] += 1
                    tr *= 0.5
                    if tr < 1e-6:
                        break
                    continue
                cand_traj = _candidate_trajectory(s, res.primal["q"])
                cand_prof = realigned(cand_traj, best["profile"])
                values = {
                    "l_ua": res.primal["l_ua"] * prog.scales.bits,
                    "l_bs": res.primal["l_bs"] * prog.scales.bits,
                    "f_ua": np.maximum(res.primal["f_ua"], 0.0) * prog.scales.f_ua,
                    "f_bs": np.maximum(res.primal["f_bs"], 0.0) * prog.scales.f_bs,
                }
                cand_obj, l_val, e_val, l_ua, l_bs, qos_ok = _true_objective(
                    s, cand_traj, cand_prof, schedule, values, psi)
                surr_obj = res.objective * prog.scales.bits
                # the surrogate is built conservative (rate lower bounds,
                # energy upper bound), so only an overestimate signals danger;
                # and near a ratio fixed point the objective L - psi*E sits at
                # 0, so the gap is judged against the objective's scale
                obj_scale = max(abs(cand_obj), abs(surr_obj), psi * e_val, 1.0)
                diverged = (surr_obj - cand_obj) > divergence_tol * obj_scale
                if qos_ok and cand_obj >= cur_obj - 1e-12 * max(abs(cur_obj), 1.0) \
                        and not diverged:
                    best = {"traj": cand_traj, "profile": cand_prof,
                            "l_ua": l_ua, "l_bs": l_bs,
                            "f_ua": values["f_ua"], "f_bs": values["f_bs"]}
                    improved = cand_obj - cur_obj
                    cur_obj, cur_l, cur_e = cand_obj, l_val, e_val
                    accepted = True
                    counters["sca"] += 1
                    # reuse the radius that worked, with room to grow
                    tr_memory["start"] = min(tr0, 4.0 * tr)
                    break
                counters["rejects"] += 1
                tr *= 0.5
                if tr < 1e-6:
                    break
            if not accepted:
                break
            if improved <= 1e-6 * max(abs(cur_obj), 1.0):
                break
        state_payload.update(best)
        return cur_l, cur_e, dict(best)

    payload, state = dinkelbach_loop(l_warm, e_warm, inner, eps1,
                                     max_dinkelbach, rel_floor)
    if payload is None:
        raise QosInfeasibleError("trajectory loop produced no iterate")

    from .resource import schedule_matrix
    l_ua = np.zeros((s.K, s.N))
    l_bs = np.zeros((s.K, s.N))
    f_ua = np.zeros((s.K, s.N))
    f_bs = np.zeros((s.K, s.N))
    idx = np.arange(s.N - 1)
    l_ua[schedule[:-1], idx] = payload["l_ua"]
    l_bs[schedule[:-1], idx] = payload["l_bs"]
    f_ua[:, 1:] = payload["f_ua"]
    f_bs[:, 1:] = payload["f_bs"]
    alloc = Allocation(l_bs=l_bs, l_ua=l_ua, f_bs=f_bs, f_ua=f_ua,
                       zeta=schedule_matrix(s, schedule))
    return TrajectoryResult(allocation=alloc, trajectory=payload["traj"],
                            profile=payload["profile"], dinkelbach=state,
                            sca_steps=counters["sca"],
                            rejected_steps=counters["rejects"])
