import numpy as np
import pytest

from conftest import micro_scenario
from starmec.convex import SolverTolerances
from starmec.errors import QosInfeasibleError
from starmec.optimizer import (BcdOptions, bcd_solve, default_initializer,
                               resource_dinkelbach, subproblem1_solve,
                               subproblem2_solve, subproblem2_split_solve,
                               subproblem3_solve)
from starmec.scenario import trajectory_violations
from starmec.tasks_energy import (check_feasibility, energy_efficiency,
                                  flight_energy, rate_table, total_bits)

TIGHT = SolverTolerances(feastol=1e-9, reltol=1e-9, max_iters=500)


def test_initializer_feasible_and_binary():
    s = micro_scenario(seed=1, k=2, n=5, m=4)
    alloc, profile, traj = default_initializer(s)
    assert check_feasibility(s, traj, profile, alloc, binary=True) == []
    assert energy_efficiency(s, traj, profile, alloc) > 0
    assert np.allclose(alloc.zeta.sum(axis=0), 1.0)


def test_initializer_single_user():
    s = micro_scenario(seed=2, k=1, n=4, m=4)
    alloc, _, _ = default_initializer(s)
    assert np.all(alloc.zeta == 1.0)


def test_initializer_hover_variant(table1):
    s = table1.replace(q_final=table1.q_init, N=10, T=4.0,
                       task_bits=np.full(5, 1e5))
    for flag in (False, True):
        alloc, profile, traj = default_initializer(s, hover_at_centroid=flag)
        assert trajectory_violations(traj, s) == []
        assert check_feasibility(s, traj, profile, alloc, binary=True) == []
    moved = default_initializer(s, hover_at_centroid=True)[2]
    assert np.linalg.norm(moved.q[s.N // 2][:2] - s.q_init[:2]) > 1.0


def test_initializer_reports_infeasible_demand():
    s = micro_scenario(seed=3, k=2, n=4, m=4)
    s = s.replace(task_bits=np.full(2, 1e12))
    with pytest.raises(QosInfeasibleError) as err:
        default_initializer(s)
    assert err.value.deficits


def test_subproblem1_improves_and_binarizes():
    s = micro_scenario(seed=4, k=2, n=5, m=4)
    alloc, profile, traj = default_initializer(s)
    ee0 = energy_efficiency(s, traj, profile, alloc)
    res = subproblem1_solve(s, traj, profile, alloc, tolerances=TIGHT)
    assert check_feasibility(s, traj, profile, res.allocation, binary=True) == []
    ee1 = energy_efficiency(s, traj, profile, res.allocation)
    assert ee1 >= ee0 * (1 - 1e-9)
    assert res.penalty.v2 <= 1e-3
    psi = np.array(res.dinkelbach.trace)
    assert np.all(np.diff(psi) >= -1e-9 * psi.max())


def test_subproblem1_single_user_shortcut():
    s = micro_scenario(seed=5, k=1, n=4, m=2)
    alloc, profile, traj = default_initializer(s)
    res = subproblem1_solve(s, traj, profile, alloc, tolerances=TIGHT)
    assert np.all(res.allocation.zeta == 1.0)
    assert res.penalty.iterations == 0


def test_subproblem1_infeasible_qos():
    s = micro_scenario(seed=6, k=2, n=4, m=4)
    alloc, profile, traj = default_initializer(s)
    s_bad = s.replace(task_bits=np.full(2, 1e12))
    with pytest.raises(QosInfeasibleError):
        subproblem1_solve(s_bad, traj, profile, alloc, tolerances=TIGHT)


def test_subproblem2_energy_split_and_monotone():
    s = micro_scenario(seed=7, k=2, n=5, m=4)
    alloc, profile, traj = default_initializer(s)
    sp1 = subproblem1_solve(s, traj, profile, alloc, tolerances=TIGHT)
    ee1 = energy_efficiency(s, traj, profile, sp1.allocation)
    sp2 = subproblem2_solve(s, traj, sp1.allocation.zeta, sp1.allocation,
                            profile, tolerances=TIGHT)
    split = sp2.profile.beta_r**2 + sp2.profile.beta_t**2
    assert np.all(split <= 1.0 + 1e-8)
    assert np.allclose(split, 1.0, atol=1e-6)
    assert check_feasibility(s, traj, sp2.profile, sp2.allocation, binary=True) == []
    ee2 = energy_efficiency(s, traj, sp2.profile, sp2.allocation)
    assert ee2 >= ee1 * (1 - 1e-6)


def test_subproblem2_split_variant_masks():
    s = micro_scenario(seed=8, k=2, n=4, m=4)
    alloc, profile, traj = default_initializer(s, mode="split")
    sp1 = subproblem1_solve(s, traj, profile, alloc, tolerances=TIGHT)
    sp2 = subproblem2_split_solve(s, traj, sp1.allocation.zeta, sp1.allocation,
                                  tolerances=TIGHT)
    beta_r, beta_t = sp2.profile.beta_r, sp2.profile.beta_t
    assert set(np.unique(beta_r)) <= {0.0, 1.0}
    assert set(np.unique(beta_t)) <= {0.0, 1.0}
    assert np.all(beta_r + beta_t == 1.0)   # disjoint halves at full gain
    assert check_feasibility(s, traj, sp2.profile, sp2.allocation, binary=True) == []


def test_subproblem3_monotone_and_kinematic():
    s = micro_scenario(seed=9, k=2, n=5, m=4)
    alloc, profile, traj = default_initializer(s)
    sp1 = subproblem1_solve(s, traj, profile, alloc, tolerances=TIGHT)
    sp2 = subproblem2_solve(s, traj, sp1.allocation.zeta, sp1.allocation,
                            profile, tolerances=TIGHT)
    ee2 = energy_efficiency(s, traj, sp2.profile, sp2.allocation)
    sp3 = subproblem3_solve(s, sp2.allocation.zeta, sp2.profile,
                            sp2.allocation, traj, tolerances=TIGHT)
    assert trajectory_violations(sp3.trajectory, s) == []
    assert check_feasibility(s, sp3.trajectory, sp3.profile, sp3.allocation,
                             binary=True) == []
    ee3 = energy_efficiency(s, sp3.trajectory, sp3.profile, sp3.allocation)
    assert ee3 >= ee2 * (1 - 1e-6)


def test_subproblem3_hover_fixed_endpoints(table1):
    # pinned start = finish and a tiny speed cap force a constant trajectory
    s = table1.replace(K=1, N=4, T=0.8, q_final=table1.q_init,
                       v_max=1e-6, a_max=20.0,
                       user_pos=np.array([[0.0, 0.0, 0.0]]),
                       task_bits=np.array([1e4]))
    alloc, profile, traj = default_initializer(s)
    assert np.allclose(traj.q, traj.q[0])
    sp3 = subproblem3_solve(s, alloc.zeta, profile, alloc, traj,
                            tolerances=TIGHT)
    assert np.allclose(sp3.trajectory.q, traj.q, atol=1e-5)
    fp = s.flight
    assert flight_energy(s, sp3.trajectory) == pytest.approx(
        s.T * (fp.p0 + fp.p0_hat), rel=1e-9)


def test_resource_dinkelbach_monotone():
    s = micro_scenario(seed=10, k=2, n=4, m=4)
    alloc, profile, traj = default_initializer(s)
    r_ua, r_bs = rate_table(s, traj, profile)
    e_const = s.p_tx * s.delta_t * (s.N - 1) + flight_energy(s, traj)
    sched = np.argmax(alloc.zeta, axis=0)
    out, state = resource_dinkelbach(s, r_ua, r_bs, sched, e_const,
                                     warm=alloc, tolerances=TIGHT)
    trace = np.array(state.trace)
    assert np.all(np.diff(trace) >= -1e-9 * trace.max())
    assert total_bits(out) >= total_bits(alloc) * (1 - 1e-9)


def test_bcd_monotone_micro():
    s = micro_scenario(seed=11, k=1, n=4, m=4)
    rep = bcd_solve(s, opts=BcdOptions(tolerances=TIGHT))
    trace = np.array(rep.ee_trace)
    assert len(trace) - 1 <= 10
    assert np.all(np.diff(trace) >= -1e-9 * trace.max())
    assert check_feasibility(s, rep.trajectory, rep.profile, rep.allocation,
                             binary=True) == []


def test_bcd_fixed_point_stability():
    s = micro_scenario(seed=12, k=2, n=4, m=4)
    rep = bcd_solve(s, opts=BcdOptions(tolerances=TIGHT))
    ee = rep.energy_efficiency
    # re-running one scheduling block from the fixed point moves EE by <= eps
    sp1 = subproblem1_solve(s, rep.trajectory, rep.profile, rep.allocation,
                            tolerances=TIGHT)
    ee1 = energy_efficiency(s, rep.trajectory, rep.profile, sp1.allocation)
    assert abs(ee1 - ee) <= max(1e-3, 1e-6 * ee)


def test_bcd_report_roundtrip():
    s = micro_scenario(seed=13, k=2, n=4, m=4)
    rep = bcd_solve(s, opts=BcdOptions(tolerances=TIGHT), seed=13)
    d = rep.to_dict()
    assert d["schema"] == "starmec.report.v1"
    assert d["seed"] == 13
    assert "timings" not in d
    assert "timings" in rep.to_dict(include_timings=True)
    text = rep.to_json()
    assert text == rep.to_json()


def test_initializer_ee_below_final():
    s = micro_scenario(seed=14, k=2, n=5, m=4)
    alloc, profile, traj = default_initializer(s)
    ee0 = energy_efficiency(s, traj, profile, alloc)
    rep = bcd_solve(s, init=(alloc, profile, traj),
                    opts=BcdOptions(tolerances=TIGHT))
    assert ee0 > 0
    assert rep.energy_efficiency >= ee0


def test_scheduling_variable_count():
    # interior-point cost is driven by the 5 per-(user, slot) variable blocks
    s = micro_scenario(seed=15, k=2, n=5, m=4)
    nominal = 5 * s.N * s.K
    assert nominal == 50
    from starmec.optimizer.scheduling import _RelaxedProgram
    from starmec.tasks_energy import rate_table as rt
    alloc, profile, traj = default_initializer(s)
    r_ua, r_bs = rt(s, traj, profile)
    prog = _RelaxedProgram(s, r_ua, r_bs, 100.0, TIGHT)
    n_scalar = sum(int(np.prod(v.shape)) for v in prog.program._vars.values())
    # zeta has N K entries, l and f row counts drop the boundary slots
    assert n_scalar == s.N * s.K + 4 * (s.N - 1) * s.K
    assert n_scalar <= nominal
