"""Physical configuration, time discretization and UAV kinematics.

Slot convention: the mission period T is divided into N slots of length
delta_t. Trajectories carry N+2 points q[0..N+1]; q[0] and q[N+1] are the
boundary anchors and slots 1..N are the optimization slots. Under the
default endpoint convention ("n_plus_1") only q[N+1] is pinned to the
final point; under "n" the point q[N] is pinned there as well, which makes
a uniform straight line cover the distance in exactly N gaps.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from importlib import resources

import numpy as np

from .errors import InfeasibleKinematicsError, StructuralError

SPEED_OF_LIGHT = 2.99792458e8

_REL_TOL = 1e-9


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def closest_square_factors(m: int) -> tuple[int, int]:
    """Factor pair (mx, my) of m with mx <= my and my - mx minimal."""
    best = (1, m)
    for a in range(1, int(math.isqrt(m)) + 1):
        if m % a == 0:
            best = (a, m // a)
    return best


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


@dataclass(frozen=True)
class FlightPowerParams:
    """Rotary-wing propulsion model coefficients.

    drag_term is the combined parasite-drag coefficient multiplying v^3
    (kg/m); p0/p0_hat are blade-profile and induced hover powers (W).
    """

    p0: float = 79.86
    p0_hat: float = 88.63
    u_tip: float = 120.0
    v0: float = 4.03
    drag_term: float = 0.018


def _as_readonly(a, shape=None, dtype=float):
    arr = np.asarray(a, dtype=dtype)
    if shape is not None and arr.shape != shape:
        raise StructuralError(f"expected shape {shape}, got {arr.shape}")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Scenario:
    """Immutable physical configuration of one mission.

    All quantities are SI: meters, seconds, watts, hertz, bits.
    """

    K: int
    N: int
    T: float
    delta_t: float                # slot length, must equal T/N
    bs_pos: np.ndarray            # (3,)
    user_pos: np.ndarray          # (K, 3), ground z = 0
    uav_alt: float                # H
    q_init: np.ndarray            # (3,)
    q_final: np.ndarray           # (3,)
    v_max: float
    a_max: float
    p_tx: float                   # unified user transmit power (W)
    bandwidth: float              # B (Hz)
    f_carrier: float              # Hz
    noise_bs: float               # W
    noise_uav: float              # W
    alpha_rk: float
    alpha_rb: float
    task_bits: np.ndarray         # (K,) minimum demands L_k (bits)
    f_bs_max: float               # Hz
    f_uav_max: float              # Hz
    cycles_per_bit_bs: float
    cycles_per_bit_uav: float
    kappa_bs: float               # effective capacitance coefficient
    kappa_uav: float
    M: int
    M_x: int
    M_y: int
    elem_sep: float               # RIS element spacing d (m)
    flight: FlightPowerParams = field(default_factory=FlightPowerParams)
    endpoint_convention: str = "n_plus_1"   # or "n"

    def __post_init__(self):
        object.__setattr__(self, "bs_pos", _as_readonly(self.bs_pos, (3,)))
        object.__setattr__(self, "q_init", _as_readonly(self.q_init, (3,)))
        object.__setattr__(self, "q_final", _as_readonly(self.q_final, (3,)))
        object.__setattr__(self, "user_pos", _as_readonly(self.user_pos))
        object.__setattr__(self, "task_bits", _as_readonly(self.task_bits))

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.f_carrier

    @property
    def rho_gain(self) -> float:
        """Reference channel power gain (lambda / 4 pi)^2."""
        lam = self.wavelength
        return (lam / (4.0 * math.pi)) ** 2

    def replace(self, **overrides) -> "Scenario":
        """Return a copy with the given fields overridden.

        Overriding M refits (M_x, M_y) to the closest-to-square factor pair
        unless both are supplied explicitly.
        """
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        if "M" in overrides and not {"M_x", "M_y"} <= overrides.keys():
            mx, my = closest_square_factors(int(overrides["M"]))
            overrides.setdefault("M_x", mx)
            overrides.setdefault("M_y", my)
        if ({"T", "N"} & overrides.keys()) and "delta_t" not in overrides:
            t = float(overrides.get("T", self.T))
            n = int(overrides.get("N", self.N))
            overrides["delta_t"] = t / n
        values.update(overrides)
        return Scenario(**values)


@dataclass(frozen=True)
class Trajectory:
    """UAV positions q[0..N+1]; velocity and acceleration are always derived."""

    q: np.ndarray  # (N+2, 3)

    def __post_init__(self):
        arr = np.asarray(self.q, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 3 or arr.shape[0] < 3:
            raise StructuralError(f"trajectory needs (N+2, 3) points, got {arr.shape}")
        object.__setattr__(self, "q", _as_readonly(arr))

    @property
    def n_slots(self) -> int:
        return self.q.shape[0] - 2

    def position(self, n: int) -> np.ndarray:
        """Position during (1-based) slot n."""
        return self.q[n]


def validate_scenario(s: Scenario) -> list[Violation]:
    """Check every invariant that does not require solving anything."""
    v: list[Violation] = []
    if abs(s.delta_t * s.N - s.T) > _REL_TOL * max(abs(s.T), 1.0):
        v.append(Violation("delta_t*N != T", f"delta_t*N = {s.delta_t * s.N} but T = {s.T}"))
    if s.M != s.M_x * s.M_y:
        v.append(Violation("M != Mx*My", f"M = {s.M} but Mx*My = {s.M_x * s.M_y}"))
    for name in ("K", "N", "M", "M_x", "M_y"):
        if getattr(s, name) < 1:
            v.append(Violation("count < 1", f"{name} = {getattr(s, name)}"))
    positive = (
        "T", "uav_alt", "v_max", "a_max", "p_tx", "bandwidth", "f_carrier",
        "noise_bs", "noise_uav", "alpha_rk", "alpha_rb", "f_bs_max",
        "f_uav_max", "cycles_per_bit_bs", "cycles_per_bit_uav",
        "kappa_bs", "kappa_uav", "elem_sep",
    )
    for name in positive:
        if not getattr(s, name) > 0.0:
            v.append(Violation("nonpositive", f"{name} = {getattr(s, name)}"))
    for name in ("p0", "p0_hat", "u_tip", "v0", "drag_term"):
        if not getattr(s.flight, name) > 0.0:
            v.append(Violation("nonpositive", f"flight.{name} = {getattr(s.flight, name)}"))
    if s.user_pos.shape != (s.K, 3):
        v.append(Violation("user_pos shape", f"expected ({s.K}, 3), got {s.user_pos.shape}"))
    elif np.any(s.user_pos[:, 2] != 0.0):
        v.append(Violation("user z != 0", "ground users must sit at z = 0"))
    if s.task_bits.shape != (s.K,):
        v.append(Violation("task_bits shape", f"expected ({s.K},), got {s.task_bits.shape}"))
    elif np.any(s.task_bits < 0.0):
        v.append(Violation("negative demand", "task_bits entries must be >= 0"))
    if s.endpoint_convention not in ("n_plus_1", "n"):
        v.append(Violation("endpoint_convention", f"unknown value {s.endpoint_convention!r}"))
    return v


def kinematics(traj: Trajectory, s: Scenario):
    """Per-slot speeds v[0..N] and acceleration magnitudes a[0..N-1]."""
    if traj.q.shape[0] != s.N + 2:
        raise StructuralError(f"trajectory has {traj.q.shape[0]} points, scenario needs {s.N + 2}")
    vel = np.diff(traj.q, axis=0) / s.delta_t          # (N+1, 3)
    acc = np.diff(vel, axis=0) / s.delta_t             # (N, 3)
    return np.linalg.norm(vel, axis=1), np.linalg.norm(acc, axis=1)


def velocity_vectors(traj: Trajectory, s: Scenario) -> np.ndarray:
    if traj.q.shape[0] != s.N + 2:
        raise StructuralError(f"trajectory has {traj.q.shape[0]} points, scenario needs {s.N + 2}")
    return np.diff(traj.q, axis=0) / s.delta_t


def trajectory_violations(traj: Trajectory, s: Scenario, tol: float = 1e-6) -> list[Violation]:
    """Flight-limit and boundary checks with relative tolerance `tol`."""
    v: list[Violation] = []
    q = traj.q
    if q.shape[0] != s.N + 2:
        return [Violation("length", f"{q.shape[0]} points != N+2 = {s.N + 2}")]
    if not np.allclose(q[0], s.q_init, rtol=0, atol=tol * max(1.0, s.v_max * s.T)):
        v.append(Violation("start anchor", f"q[0] = {q[0]} != q_init"))
    if not np.allclose(q[-1], s.q_final, rtol=0, atol=tol * max(1.0, s.v_max * s.T)):
        v.append(Violation("final anchor", f"q[N+1] = {q[-1]} != q_final"))
    if np.any(np.abs(q[:, 2] - s.uav_alt) > tol * max(1.0, s.uav_alt)):
        v.append(Violation("altitude", "z must stay at H"))
    speeds, accels = kinematics(traj, s)
    if np.any(speeds > s.v_max * (1 + tol)):
        n = int(np.argmax(speeds))
        v.append(Violation("speed", f"v[{n}] = {speeds[n]:.6g} > v_max = {s.v_max}"))
    if np.any(accels > s.a_max * (1 + tol)):
        n = int(np.argmax(accels))
        v.append(Violation("acceleration", f"a[{n}] = {accels[n]:.6g} > a_max = {s.a_max}"))
    return v


def _n_gaps(s: Scenario) -> int:
    # "n" pins q[N] = q_final, so the moving part of the path has N gaps
    # and the last segment is stationary.
    return s.N if s.endpoint_convention == "n" else s.N + 1


def straight_line_trajectory(s: Scenario) -> Trajectory:
    """Uniform-speed direct flight from q_init to q_final at altitude H."""
    dist = float(np.linalg.norm(s.q_final - s.q_init))
    gaps = _n_gaps(s)
    speed = dist / (gaps * s.delta_t)
    if speed > s.v_max * (1 + _REL_TOL):
        raise InfeasibleKinematicsError(
            f"straight line needs {speed:.3f} m/s but v_max = {s.v_max} m/s")
    frac = np.minimum(np.arange(s.N + 2) / gaps, 1.0)
    q = s.q_init[None, :] + frac[:, None] * (s.q_final - s.q_init)[None, :]
    q[:, 2] = s.uav_alt
    return Trajectory(q)


def _sample_by_arclength(poly: np.ndarray, n_points: int) -> np.ndarray:
    seg = np.linalg.norm(np.diff(poly, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total < 1e-12:
        return np.repeat(poly[:1], n_points, axis=0)
    target = np.linspace(0.0, total, n_points)
    x = np.interp(target, cum, poly[:, 0])
    y = np.interp(target, cum, poly[:, 1])
    return np.stack([x, y], axis=1)


def heuristic_traversal_trajectory(s: Scenario, order) -> Trajectory:
    """Constant-speed piecewise-linear flight over the users in `order`.

    Waypoints sit at altitude H above each user; the speed follows from the
    polyline length and the slot grid. At corners the slot-to-slot velocity
    direction jumps, so only the speed limit is enforced here (the paper's
    fixed benchmark path has no acceleration smoothing).
    """
    order = list(order)
    if not order:
        return straight_line_trajectory(s)
    waypoints = np.vstack([
        s.q_init[:2],
        s.user_pos[order][:, :2],
        s.q_final[:2],
    ])
    gaps = _n_gaps(s)
    length = float(np.sum(np.linalg.norm(np.diff(waypoints, axis=0), axis=1)))
    speed = length / (gaps * s.delta_t)
    if speed > s.v_max * (1 + _REL_TOL):
        raise InfeasibleKinematicsError(
            f"traversal path of {length:.1f} m needs {speed:.3f} m/s but v_max = {s.v_max} m/s")
    xy = _sample_by_arclength(waypoints, gaps + 1)
    if s.endpoint_convention == "n":
        xy = np.vstack([xy, xy[-1]])
    q = np.column_stack([xy, np.full(s.N + 2, s.uav_alt)])
    return Trajectory(q)


# -- configuration ingestion -------------------------------------------------

_REQUIRED_KEYS = (
    "K", "N", "T", "bs_pos", "user_pos", "uav_alt", "q_init", "q_final",
    "v_max", "a_max", "bandwidth_hz", "carrier_hz", "alpha_rk", "alpha_rb",
    "f_bs_max_hz", "f_uav_max_hz", "cycles_per_bit_bs", "cycles_per_bit_uav",
    "kappa_bs", "kappa_uav", "M",
)


def scenario_from_dict(cfg: dict) -> Scenario:
    missing = [k for k in _REQUIRED_KEYS if k not in cfg]
    if missing:
        raise StructuralError(f"config missing keys: {missing}")

    if "p_tx_w" in cfg:
        p_tx = float(cfg["p_tx_w"])
    elif "p_tx_dbm" in cfg:
        p_tx = dbm_to_watts(float(cfg["p_tx_dbm"]))
    else:
        raise StructuralError("config needs p_tx_w or p_tx_dbm")

    def noise(which):
        if f"noise_{which}_w" in cfg:
            return float(cfg[f"noise_{which}_w"])
        if f"noise_{which}_dbm" in cfg:
            return dbm_to_watts(float(cfg[f"noise_{which}_dbm"]))
        raise StructuralError(f"config needs noise_{which}_w or noise_{which}_dbm")

    if "task_bits" in cfg:
        task = np.asarray(cfg["task_bits"], dtype=float)
    elif "task_mbits" in cfg:
        task = np.asarray(cfg["task_mbits"], dtype=float) * 1e6
    else:
        raise StructuralError("config needs task_bits or task_mbits")
    if task.ndim == 0:
        task = np.full(int(cfg["K"]), float(task))

    m = int(cfg["M"])
    if "M_x" in cfg or "M_y" in cfg:
        mx, my = int(cfg["M_x"]), int(cfg["M_y"])
    else:
        mx, my = closest_square_factors(m)

    lam = SPEED_OF_LIGHT / float(cfg["carrier_hz"])
    elem_sep = float(cfg.get("elem_sep", lam / 2.0))

    flight = FlightPowerParams(**cfg.get("flight", {}))
    users = np.asarray(cfg["user_pos"], dtype=float)
    if users.shape[1] == 2:
        users = np.column_stack([users, np.zeros(len(users))])

    return Scenario(
        K=int(cfg["K"]), N=int(cfg["N"]), T=float(cfg["T"]),
        delta_t=float(cfg.get("delta_t", float(cfg["T"]) / int(cfg["N"]))),
        bs_pos=np.asarray(cfg["bs_pos"], dtype=float),
        user_pos=users,
        uav_alt=float(cfg["uav_alt"]),
        q_init=np.asarray(cfg["q_init"], dtype=float),
        q_final=np.asarray(cfg["q_final"], dtype=float),
        v_max=float(cfg["v_max"]), a_max=float(cfg["a_max"]),
        p_tx=p_tx,
        bandwidth=float(cfg["bandwidth_hz"]),
        f_carrier=float(cfg["carrier_hz"]),
        noise_bs=noise("bs"), noise_uav=noise("uav"),
        alpha_rk=float(cfg["alpha_rk"]), alpha_rb=float(cfg["alpha_rb"]),
        task_bits=task,
        f_bs_max=float(cfg["f_bs_max_hz"]), f_uav_max=float(cfg["f_uav_max_hz"]),
        cycles_per_bit_bs=float(cfg["cycles_per_bit_bs"]),
        cycles_per_bit_uav=float(cfg["cycles_per_bit_uav"]),
        kappa_bs=float(cfg["kappa_bs"]), kappa_uav=float(cfg["kappa_uav"]),
        M=m, M_x=mx, M_y=my, elem_sep=elem_sep,
        flight=flight,
        endpoint_convention=str(cfg.get("endpoint_convention", "n_plus_1")),
    )


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return scenario_from_dict(json.load(fh))


def load_bundled(name: str) -> Scenario:
    """Load one of the shipped configs, e.g. "table1" or "desk"."""
    ref = resources.files("starmec.configs").joinpath(f"{name}.cfg")
    return scenario_from_dict(json.loads(ref.read_text(encoding="utf-8")))
