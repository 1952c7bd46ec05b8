"""Deterministic LoS channel synthesis.

Far-field links (user -> RIS, RIS -> BS) use UPA steering vectors scaled by
sqrt(rho / d^alpha); the RIS -> UAV hop is a fixed near-field channel built
from the exact per-element distances of the mount geometry. Element m of
the UPA maps to grid position (m_x, m_y) with m = (m_x - 1) * M_y + (m_y - 1),
matching the Kronecker ordering of the steering factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularGeometryError, StructuralError
from .scenario import Scenario

# vertical drop from the UAV antenna to the RIS plane (m); the relative
# mount is rigid, so this only fixes one static vector
MOUNT_DROP = 0.5


@dataclass(frozen=True)
class SteeringChannel:
    h: np.ndarray          # complex (M,), gain * steering
    dist: float
    gain: float            # sqrt(rho / dist^alpha)
    xi: float
    chi: float


@dataclass(frozen=True)
class NearFieldChannel:
    h_ru: np.ndarray       # complex (M,)
    r: np.ndarray          # (M,) element distances


def steering_vector(xi: float, chi: float, m_x: int, m_y: int,
                    d: float, lam: float) -> np.ndarray:
    """UPA steering vector for direction cosines (xi, chi).

    Entry (m_x, m_y) is exp(-j * 2 pi d / lambda * ((m_x-1) xi + (m_y-1) chi));
    the first entry is always 1.
    """
    if abs(xi) > 1 + 1e-12 or abs(chi) > 1 + 1e-12:
        raise StructuralError(f"direction cosines out of range: xi={xi}, chi={chi}")
    coef = -2j * math.pi * d / lam
    ax = np.exp(coef * xi * np.arange(m_x))
    ay = np.exp(coef * chi * np.arange(m_y))
    return np.kron(ax, ay)


def _steering_channel(s: Scenario, src: np.ndarray, dst: np.ndarray,
                      alpha: float, sign: float) -> SteeringChannel:
    # sign=+1: cosines point from src toward dst along +x/+y (user -> RIS);
    # sign=-1 flips the reference (RIS -> BS uses BS minus UAV).
    diff = dst - src
    dist = float(np.linalg.norm(diff))
    if dist <= 0.0:
        raise SingularGeometryError("link endpoints coincide")
    xi = sign * float(diff[0]) / dist
    chi = sign * float(diff[1]) / dist
    gain = math.sqrt(s.rho_gain / dist**alpha)
    h = gain * steering_vector(xi, chi, s.M_x, s.M_y, s.elem_sep, s.wavelength)
    return SteeringChannel(h=h, dist=dist, gain=gain, xi=xi, chi=chi)


def user_ris_channel(s: Scenario, q_uav: np.ndarray, k: int) -> SteeringChannel:
    """Channel from user k up to the RIS when the UAV sits at q_uav."""
    return _steering_channel(s, np.asarray(s.user_pos[k], dtype=float),
                             np.asarray(q_uav, dtype=float), s.alpha_rk, sign=+1.0)


def ris_bs_channel(s: Scenario, q_uav: np.ndarray) -> SteeringChannel:
    """Channel from the RIS down to the BS."""
    q_uav = np.asarray(q_uav, dtype=float)
    diff = s.bs_pos - q_uav
    dist = float(np.linalg.norm(diff))
    if dist <= 0.0:
        raise SingularGeometryError("UAV sits on the BS")
    xi = float(diff[0]) / dist
    chi = float(diff[1]) / dist
    gain = math.sqrt(s.rho_gain / dist**s.alpha_rb)
    h = gain * steering_vector(xi, chi, s.M_x, s.M_y, s.elem_sep, s.wavelength)
    return SteeringChannel(h=h, dist=dist, gain=gain, xi=xi, chi=chi)


def default_mount_offsets(s: Scenario) -> np.ndarray:
    """(M, 3) element offsets relative to the UAV antenna.

    The RIS forms its UPA in a horizontal plane MOUNT_DROP below the antenna,
    centered under it, spaced by elem_sep, in the steering element order.
    """
    ix = np.arange(s.M_x) - (s.M_x - 1) / 2.0
    iy = np.arange(s.M_y) - (s.M_y - 1) / 2.0
    gx, gy = np.meshgrid(ix, iy, indexing="ij")       # (M_x, M_y)
    offsets = np.zeros((s.M, 3))
    offsets[:, 0] = (gx * s.elem_sep).reshape(-1)
    offsets[:, 1] = (gy * s.elem_sep).reshape(-1)
    offsets[:, 2] = -MOUNT_DROP
    return offsets


def near_field_channel(offsets: np.ndarray, lam: float) -> NearFieldChannel:
    """Fixed near-field UAV link from per-element mount offsets."""
    offsets = np.asarray(offsets, dtype=float)
    r = np.linalg.norm(offsets, axis=1)
    if np.any(r <= 0.0):
        raise SingularGeometryError("an RIS element coincides with the antenna")
    h = (lam / (4.0 * math.pi * r)) * np.exp(-2j * math.pi * r / lam)
    return NearFieldChannel(h_ru=h, r=r)


def uav_ris_channel(s: Scenario) -> NearFieldChannel:
    """Near-field channel for the default mount geometry."""
    return near_field_channel(default_mount_offsets(s), s.wavelength)
