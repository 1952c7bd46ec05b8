import numpy as np
import pytest

from starmec.scenario import FlightPowerParams, Scenario, load_bundled


@pytest.fixture(scope="session")
def table1():
    return load_bundled("table1")


@pytest.fixture(scope="session")
def desk():
    return load_bundled("desk")


def micro_scenario(rng=None, k=2, n=4, m=4, task_bits=None, seed=None,
                   bandwidth=1e6):
    """Small random-but-feasible instance for optimizer tests.

    Users sit within ~25 m of the origin, the UAV crosses overhead, and the
    task demands default to a fraction of what a round-robin schedule can
    offload, so the default initializer always succeeds.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    users = np.column_stack([rng.uniform(-25, 25, size=k),
                             rng.uniform(-25, 25, size=k),
                             np.zeros(k)])
    from starmec.scenario import closest_square_factors
    mx, my = closest_square_factors(m)
    s = Scenario(
        K=k, N=n, T=0.2 * n, delta_t=0.2,
        bs_pos=np.array([0.0, 30.0, 20.0]),
        user_pos=users,
        uav_alt=30.0,
        q_init=np.array([-12.0, 0.0, 30.0]),
        q_final=np.array([12.0, 0.0, 30.0]),
        v_max=30.0, a_max=20.0,
        p_tx=0.1, bandwidth=bandwidth, f_carrier=2.4e9,
        noise_bs=1e-13, noise_uav=1e-13,
        alpha_rk=2.3, alpha_rb=2.3,
        task_bits=np.zeros(k),
        f_bs_max=2e10, f_uav_max=1.2e10,
        cycles_per_bit_bs=1e3, cycles_per_bit_uav=1e3,
        kappa_bs=1e-27, kappa_uav=1e-27,
        M=m, M_x=mx, M_y=my,
        elem_sep=(2.99792458e8 / 2.4e9) / 2,
        flight=FlightPowerParams(),
    )
    if task_bits is None:
        # size demands off the straight-line round-robin rates
        from starmec.scenario import straight_line_trajectory
        from starmec.star_ris import mrt_profile, nearest_user_schedule
        from starmec.tasks_energy import rate_table
        traj = straight_line_trajectory(s)
        profile = mrt_profile(s, traj, nearest_user_schedule(s, traj))
        r_ua, r_bs = rate_table(s, traj, profile)
        sched = np.arange(n) % k
        cap = np.zeros(k)
        for slot in range(n - 1):          # slot N carries no bits
            ku = sched[slot]
            cap[ku] += s.delta_t * (r_ua[ku, slot] + r_bs[ku, slot])
        task_bits = np.minimum(0.35 * cap, 2e5)
    return s.replace(task_bits=np.asarray(task_bits, dtype=float))
