"""Offloading rates, task accounting, and the energy models.

Evaluates any candidate solution: per-slot achievable rates, the
feasibility of an allocation against the offload/QoS/compute-causality
constraints, and the total-bits / total-energy pair whose ratio is the
system energy efficiency.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .channel import ris_bs_channel, uav_ris_channel, user_ris_channel
from .errors import StarMecError, StructuralError
from .scenario import FlightPowerParams, Scenario, Trajectory, Violation, kinematics
from .star_ris import StarRisProfile, composite_gain

_FEAS_RTOL = 1e-6


@dataclass(frozen=True)
class Allocation:
    """Per-slot, per-user offloaded bits, CPU frequencies and schedule weights.

    Arrays are (K, N); column n-1 holds slot n. Boundary slots obey
    f[:, 0] = 0 (no computing in slot 1) and l[:, N-1] = 0 (no offloading
    in slot N).
    """

    l_bs: np.ndarray
    l_ua: np.ndarray
    f_bs: np.ndarray
    f_ua: np.ndarray
    zeta: np.ndarray

    def __post_init__(self):
        shape = np.asarray(self.l_bs).shape
        for name in ("l_bs", "l_ua", "f_bs", "f_ua", "zeta"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            if arr.shape != shape:
                raise StructuralError(f"{name} shape {arr.shape} != {shape}")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_users(self) -> int:
        return self.l_bs.shape[0]

    @property
    def n_slots(self) -> int:
        return self.l_bs.shape[1]

    def schedule(self) -> np.ndarray:
        """Per-slot argmax user of the scheduling weights (0-based)."""
        return np.argmax(self.zeta, axis=0)


@dataclass(frozen=True)
class EnergyBreakdown:
    e_users: float      # offload transmit energy
    e_com_uav: float
    e_com_bs: float     # reported, excluded from the total
    e_fly: float
    e_total: float      # e_users + e_com_uav + e_fly


def offload_rates(s: Scenario, traj: Trajectory, profile: StarRisProfile,
                  k: int, n: int):
    """(R_ua, R_bs) in bit/s for user k in 1-based slot n.

    The scheduling weight is applied by callers, not here.
    """
    q = traj.position(n)
    h_rk = user_ris_channel(s, q, k)
    h_rb = ris_bs_channel(s, q)
    h_ru = uav_ris_channel(s)
    phi_r, phi_t, beta_r, beta_t = profile.slot(n)
    g_t = composite_gain(h_ru.h_ru, h_rk.h, phi_t, beta_t)
    g_r = composite_gain(h_rb.h, h_rk.h, phi_r, beta_r)
    r_ua = s.bandwidth * math.log2(1.0 + s.p_tx * g_t / s.noise_uav)
    r_bs = s.bandwidth * math.log2(1.0 + s.p_tx * g_r / s.noise_bs)
    return r_ua, r_bs


def rate_table(s: Scenario, traj: Trajectory, profile: StarRisProfile):
    """(K, N) matrices of UAV-link and BS-link rates for all users/slots."""
    h_ru = uav_ris_channel(s)
    r_ua = np.zeros((s.K, s.N))
    r_bs = np.zeros((s.K, s.N))
    for n in range(1, s.N + 1):
        q = traj.position(n)
        h_rb = ris_bs_channel(s, q)
        phi_r, phi_t, beta_r, beta_t = profile.slot(n)
        for k in range(s.K):
            h_rk = user_ris_channel(s, q, k)
            g_t = composite_gain(h_ru.h_ru, h_rk.h, phi_t, beta_t)
            g_r = composite_gain(h_rb.h, h_rk.h, phi_r, beta_r)
            r_ua[k, n - 1] = s.bandwidth * math.log2(1.0 + s.p_tx * g_t / s.noise_uav)
            r_bs[k, n - 1] = s.bandwidth * math.log2(1.0 + s.p_tx * g_r / s.noise_bs)
    return r_ua, r_bs


def _tol(rhs: float, scale: float = 1.0) -> float:
    return _FEAS_RTOL * max(abs(rhs), scale)


def check_feasibility(s: Scenario, traj: Trajectory, profile: StarRisProfile,
                      alloc: Allocation, binary: bool = False) -> list[Violation]:
    """All constraint violations of an allocation; empty list means feasible."""
    out: list[Violation] = []
    K, N = s.K, s.N
    if alloc.l_bs.shape != (K, N):
        return [Violation("shape", f"allocation is {alloc.l_bs.shape}, scenario needs {(K, N)}")]
    dt = s.delta_t

    for name in ("l_bs", "l_ua", "f_bs", "f_ua"):
        arr = getattr(alloc, name)
        if np.any(arr < -_tol(0.0)):
            k, n = np.unravel_index(int(np.argmin(arr)), arr.shape)
            out.append(Violation("negative_entry", f"{name}[{k},{n + 1}] = {arr[k, n]:.3e}"))

    col = alloc.zeta.sum(axis=0)
    for n in np.nonzero(np.abs(col - 1.0) > 1e-9)[0]:
        out.append(Violation("schedule_sum", f"sum_k zeta[:,{n + 1}] = {col[n]:.6g} != 1"))
    if np.any(alloc.zeta < -1e-9) or np.any(alloc.zeta > 1 + 1e-9):
        out.append(Violation("schedule_range", "zeta entries outside [0, 1]"))
    if binary:
        off = np.minimum(np.abs(alloc.zeta), np.abs(alloc.zeta - 1.0))
        if np.any(off > 1e-9):
            k, n = np.unravel_index(int(np.argmax(off)), off.shape)
            out.append(Violation("schedule_binary",
                                 f"zeta[{k},{n + 1}] = {alloc.zeta[k, n]:.6g} not in {{0,1}}"))

    # boundary slots: no computing in slot 1, no offloading in slot N
    if np.any(alloc.f_bs[:, 0] != 0.0) or np.any(alloc.f_ua[:, 0] != 0.0):
        out.append(Violation("boundary", "f[:, slot 1] must be 0"))
    if np.any(alloc.l_bs[:, -1] != 0.0) or np.any(alloc.l_ua[:, -1] != 0.0):
        out.append(Violation("boundary", "l[:, slot N] must be 0"))

    r_ua, r_bs = rate_table(s, traj, profile)
    cap_ua = dt * alloc.zeta * r_ua
    cap_bs = dt * alloc.zeta * r_bs
    for code, cap, l in (("offload_rate_uav", cap_ua, alloc.l_ua),
                         ("offload_rate_bs", cap_bs, alloc.l_bs)):
        bad = l - cap
        for k, n in zip(*np.nonzero(bad > _tol(0.0, cap.max(initial=1.0)))):
            out.append(Violation(code,
                                 f"l[{k},{n + 1}] = {l[k, n]:.4e} exceeds slot capacity {cap[k, n]:.4e}"))

    total = (alloc.l_bs + alloc.l_ua).sum(axis=1)
    for k in np.nonzero(total < s.task_bits - _tol(0.0, float(s.task_bits.max(initial=1.0))))[0]:
        out.append(Violation("qos", f"user {k}: {total[k]:.4e} bits < demand {s.task_bits[k]:.4e}"))

    for code, f, cap in (("freq_cap_uav", alloc.f_ua, s.f_uav_max),
                         ("freq_cap_bs", alloc.f_bs, s.f_bs_max)):
        used = f.sum(axis=0)
        for n in np.nonzero(used > cap * (1 + _FEAS_RTOL))[0]:
            out.append(Violation(code, f"slot {n + 1}: sum_k f = {used[n]:.4e} > {cap:.4e}"))

    # cumulative compute must cover cumulative received bits with one-slot lag
    for code, f, l, cyc in (("causality_uav", alloc.f_ua, alloc.l_ua, s.cycles_per_bit_uav),
                            ("causality_bs", alloc.f_bs, alloc.l_bs, s.cycles_per_bit_bs)):
        done = np.cumsum(f[:, 1:], axis=1) * dt / cyc
        recv = np.cumsum(l[:, :-1], axis=1)
        bad = recv - done
        for k, j in zip(*np.nonzero(bad > _tol(0.0, recv.max(initial=1.0)))):
            out.append(Violation(code,
                                 f"user {k}, through slot {j + 2}: computed {done[k, j]:.4e} "
                                 f"< received {recv[k, j]:.4e} bits"))
    return out


def total_bits(alloc: Allocation) -> float:
    return float(alloc.l_bs.sum() + alloc.l_ua.sum())


def flight_power(v: float, fp: FlightPowerParams) -> float:
    """Rotary-wing propulsion power at horizontal speed v (W).

    Blade profile term grows with v^2, parasite drag with v^3, and the
    induced term decays through the nested radical; at v = 0 the total is
    exactly p0 + p0_hat.
    """
    v2 = v * v
    profile = fp.p0 * (1.0 + 3.0 * v2 / fp.u_tip**2)
    drag = fp.drag_term * v2 * v
    induced = fp.p0_hat * math.sqrt(
        math.sqrt(1.0 + v2 * v2 / (4.0 * fp.v0**4)) - v2 / (2.0 * fp.v0**2))
    return profile + drag + induced


def flight_energy(s: Scenario, traj: Trajectory) -> float:
    """Propulsion energy over the N mission slots (uses v[1..N])."""
    speeds, _ = kinematics(traj, s)
    return s.delta_t * float(sum(flight_power(v, s.flight) for v in speeds[1:]))


def energy_breakdown(s: Scenario, traj: Trajectory, alloc: Allocation) -> EnergyBreakdown:
    e_users = s.p_tx * s.delta_t * (s.N - 1)
    e_com_uav = float(s.kappa_uav * s.delta_t * np.sum(alloc.f_ua**3))
    e_com_bs = float(s.kappa_bs * s.delta_t * np.sum(alloc.f_bs**3))
    e_fly = flight_energy(s, traj)
    return EnergyBreakdown(
        e_users=e_users, e_com_uav=e_com_uav, e_com_bs=e_com_bs, e_fly=e_fly,
        e_total=e_users + e_com_uav + e_fly)


def energy_efficiency(s: Scenario, traj: Trajectory, profile: StarRisProfile,
                      alloc: Allocation) -> float:
    """Completed bits per joule, L_tol / E_tol."""
    e = energy_breakdown(s, traj, alloc).e_total
    if e <= 0.0:
        raise StarMecError("total energy is zero; degenerate instance")
    return total_bits(alloc) / e


ALLOCATION_CSV_SCHEMA = "starmec.allocation.v1"


def write_allocation_csv(path, s: Scenario, traj: Trajectory,
                         profile: StarRisProfile, alloc: Allocation) -> None:
    r_ua, r_bs = rate_table(s, traj, profile)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# schema={ALLOCATION_CSV_SCHEMA}\n")
        w = csv.writer(fh)
        w.writerow(["slot", "user", "R_ua", "R_bs", "l_ua", "l_bs", "f_ua", "f_bs"])
        for n in range(s.N):
            for k in range(s.K):
                w.writerow([n + 1, k + 1,
                            repr(r_ua[k, n]), repr(r_bs[k, n]),
                            repr(alloc.l_ua[k, n]), repr(alloc.l_bs[k, n]),
                            repr(alloc.f_ua[k, n]), repr(alloc.f_bs[k, n])])
