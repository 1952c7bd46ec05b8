"""Walk through the physical layer: channels, phase alignment, rates.

Loads the full-scale configuration, parks the UAV mid-mission, and shows
how the two offloading links come together: far-field steering up from a
user, the fixed near-field hop to the UAV antenna, the reflected path down
to the BS, and the rates once the surface's phases are aligned.
"""

import numpy as np

from starmec.channel import ris_bs_channel, uav_ris_channel, user_ris_channel
from starmec.scenario import load_bundled, straight_line_trajectory
from starmec.star_ris import composite_gain, mrt_phases, mrt_profile, nearest_user_schedule
from starmec.tasks_energy import offload_rates

s = load_bundled("table1")
traj = straight_line_trajectory(s)
n = s.N // 2
q = traj.position(n)
print(f"UAV at slot {n}: {q.round(2)}")

for k in range(s.K):
    ch = user_ris_channel(s, q, k)
    print(f"user {k}: distance {ch.dist:6.2f} m, per-element gain {ch.gain:.3e}, "
          f"cosines ({ch.xi:+.3f}, {ch.chi:+.3f})")

h_ru = uav_ris_channel(s)
h_rb = ris_bs_channel(s, q)
print(f"\nBS link: distance {h_rb.dist:.2f} m")
print(f"near-field hop: element distances {h_ru.r.min():.3f}..{h_ru.r.max():.3f} m")

k = 2
h_rk = user_ris_channel(s, q, k)
phi_r, phi_t = mrt_phases(h_ru, h_rk, h_rb)
beta = np.full(s.M, 1 / np.sqrt(2))
aligned = composite_gain(h_rb.h, h_rk.h, phi_r, beta)
flat = composite_gain(h_rb.h, h_rk.h, np.zeros(s.M), beta)
print(f"\nuser {k} reflected composite gain: aligned {aligned:.3e} "
      f"vs zero-phase {flat:.3e} ({aligned / flat:.1f}x)")

profile = mrt_profile(s, traj, nearest_user_schedule(s, traj))
r_ua, r_bs = offload_rates(s, traj, profile, k, n)
print(f"user {k} rates at slot {n}: UAV {r_ua / 1e6:.2f} Mb/s, BS {r_bs / 1e6:.3f} Mb/s")
