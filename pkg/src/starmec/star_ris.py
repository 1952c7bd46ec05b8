"""STAR-RIS coefficient bookkeeping and closed-form phase alignment.

Every element splits its incident energy between a reflected and a
transmitted component with coupled amplitudes beta_r^2 + beta_t^2 <= 1
(equality at any optimizer fixed point). Phases that maximize both
composite link gains at once follow from maximum ratio transmission:
align every summand of the composite scalar.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .channel import (NearFieldChannel, SteeringChannel, ris_bs_channel,
                      uav_ris_channel, user_ris_channel)
from .errors import DegenerateChannelError, StructuralError
from .scenario import Scenario, Trajectory

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class StarRisProfile:
    """Per-slot reflection/transmission phases and amplitudes.

    Arrays are (N, M); row n-1 holds slot n. Phases live in [0, 2pi),
    amplitudes in [0, 1].
    """

    phi_r: np.ndarray
    phi_t: np.ndarray
    beta_r: np.ndarray
    beta_t: np.ndarray

    def __post_init__(self):
        shape = np.asarray(self.phi_r).shape
        for name in ("phi_r", "phi_t", "beta_r", "beta_t"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            if arr.shape != shape:
                raise StructuralError(f"{name} shape {arr.shape} != {shape}")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_slots(self) -> int:
        return self.phi_r.shape[0]

    @property
    def m_elements(self) -> int:
        return self.phi_r.shape[1]

    def slot(self, n: int):
        """(phi_r, phi_t, beta_r, beta_t) for 1-based slot n."""
        return self.phi_r[n - 1], self.phi_t[n - 1], self.beta_r[n - 1], self.beta_t[n - 1]


def mrt_phases(h_ru: NearFieldChannel, h_rk: SteeringChannel,
               h_rb: SteeringChannel):
    """Optimal reflection/transmission phases for one slot's scheduled user.

    phi_r aligns the BS composite conj(h_rb) o h_rk, phi_t the UAV composite
    conj(h_ru) o h_rk; with them every summand of the composite scalar shares
    a single argument (zero), so its modulus is the sum of entry moduli.
    """
    prod_r = np.conj(h_rb.h) * h_rk.h
    prod_t = np.conj(h_ru.h_ru) * h_rk.h
    if prod_r.shape != prod_t.shape:
        raise StructuralError("channel lengths differ")
    if np.any(np.abs(prod_r) == 0.0) or np.any(np.abs(prod_t) == 0.0):
        raise DegenerateChannelError("zero-modulus channel entry")
    return wrap_phase(np.angle(prod_r)), wrap_phase(np.angle(prod_t))


def composite_gain(h_a: np.ndarray, h_b: np.ndarray,
                   phi: np.ndarray, beta: np.ndarray) -> float:
    """|sum_m beta_m e^{-j phi_m} conj(h_a[m]) h_b[m]|^2."""
    if not (len(h_a) == len(h_b) == len(phi) == len(beta)):
        raise StructuralError("inconsistent lengths")
    scalar = np.sum(beta * np.exp(-1j * phi) * np.conj(h_a) * h_b)
    return float(np.abs(scalar) ** 2)


def quadratic_forms(h_ru: NearFieldChannel, h_rk: SteeringChannel,
                    h_rb: SteeringChannel, phi_r: np.ndarray,
                    phi_t: np.ndarray, noise_bs: float, noise_uav: float):
    """Rank-1 PSD matrices (F, E) with beta^T F beta = BS SNR, beta^T E beta = UAV SNR.

    Built from w = e^{-j phi} o conj(h_other) o h_user so that the real
    quadratic form reproduces composite_gain / sigma^2 for any real beta.
    """
    w_r = np.exp(-1j * phi_r) * np.conj(h_rb.h) * h_rk.h
    w_t = np.exp(-1j * phi_t) * np.conj(h_ru.h_ru) * h_rk.h
    f_mat = np.outer(w_r, np.conj(w_r)) / noise_bs
    e_mat = np.outer(w_t, np.conj(w_t)) / noise_uav
    return f_mat, e_mat


def real_quadratic(mat: np.ndarray) -> np.ndarray:
    """Symmetric real part; the only piece a real quadratic form sees."""
    return 0.5 * (mat.real + mat.real.T)


def wrap_phase(phi: np.ndarray) -> np.ndarray:
    """Map angles into [0, 2pi); values a rounding error below 2pi become 0."""
    wrapped = np.mod(phi, TWO_PI)
    return np.where(wrapped >= TWO_PI * (1.0 - 1e-15), 0.0, wrapped)


def uniform_split_profile(n_slots: int, m_elements: int) -> StarRisProfile:
    """Zero phases, symmetric 1/sqrt(2) energy split on every element."""
    z = np.zeros((n_slots, m_elements))
    b = np.full((n_slots, m_elements), 1.0 / np.sqrt(2.0))
    return StarRisProfile(phi_r=z, phi_t=z.copy(), beta_r=b, beta_t=b.copy())


def split_array_masks(m_elements: int):
    """Element masks for the two-conventional-RIS baseline.

    The first ceil(M/2) elements reflect only, the rest transmit only.
    """
    reflect = np.zeros(m_elements, dtype=bool)
    reflect[: (m_elements + 1) // 2] = True
    return reflect, ~reflect


def mrt_profile(s: Scenario, traj: Trajectory, schedule: np.ndarray,
                beta_r: np.ndarray | None = None,
                beta_t: np.ndarray | None = None) -> StarRisProfile:
    """Profile with per-slot aligned phases for the scheduled users.

    `schedule[n-1]` is the user that offloads in slot n. Amplitudes default
    to the symmetric split; pass (N, M) arrays to keep existing ones.
    """
    h_ru = uav_ris_channel(s)
    phi_r = np.zeros((s.N, s.M))
    phi_t = np.zeros((s.N, s.M))
    for n in range(1, s.N + 1):
        q = traj.position(n)
        h_rk = user_ris_channel(s, q, int(schedule[n - 1]))
        h_rb = ris_bs_channel(s, q)
        phi_r[n - 1], phi_t[n - 1] = mrt_phases(h_ru, h_rk, h_rb)
    if beta_r is None:
        beta_r = np.full((s.N, s.M), 1.0 / np.sqrt(2.0))
    if beta_t is None:
        beta_t = np.sqrt(np.clip(1.0 - np.asarray(beta_r) ** 2, 0.0, 1.0))
    return StarRisProfile(phi_r=phi_r, phi_t=phi_t, beta_r=beta_r, beta_t=beta_t)


def nearest_user_schedule(s: Scenario, traj: Trajectory) -> np.ndarray:
    """Per-slot index of the user closest to the UAV (phase warm start)."""
    sched = np.zeros(s.N, dtype=int)
    for n in range(1, s.N + 1):
        d = np.linalg.norm(s.user_pos - traj.position(n)[None, :], axis=1)
        sched[n - 1] = int(np.argmin(d))
    return sched


PROFILE_CSV_SCHEMA = "starmec.profile.v1"


def write_profile_csv(path, profile: StarRisProfile) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# schema={PROFILE_CSV_SCHEMA}\n")
        w = csv.writer(fh)
        w.writerow(["slot", "element", "phi_r", "phi_t", "beta_r", "beta_t"])
        for n in range(profile.n_slots):
            for m in range(profile.m_elements):
                w.writerow([n + 1, m + 1,
                            repr(profile.phi_r[n, m]), repr(profile.phi_t[n, m]),
                            repr(profile.beta_r[n, m]), repr(profile.beta_t[n, m])])
