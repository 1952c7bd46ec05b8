"""Variable normalization shared by the cone programs.

Frequencies are expressed in units of the server caps and bits in a
per-instance scale, which keeps every coefficient within a few orders of
magnitude of 1; raw SI values (bits ~ 1e6, Hz ~ 1e10) otherwise break the
solver's equilibration on the cubic-power cones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..scenario import Scenario


@dataclass(frozen=True)
class ProgramScales:
    bits: float
    f_ua: float
    f_bs: float

    @classmethod
    def for_instance(cls, s: Scenario, r_ua=None, r_bs=None) -> "ProgramScales":
        cands = [1.0, float(np.max(s.task_bits, initial=1.0))]
        if r_ua is not None:
            cands.append(float(s.delta_t * np.max(r_ua, initial=0.0)))
        if r_bs is not None:
            cands.append(float(s.delta_t * np.max(r_bs, initial=0.0)))
        return cls(bits=max(cands), f_ua=s.f_uav_max, f_bs=s.f_bs_max)

    def uav_compute_coeff(self, s: Scenario) -> float:
        """Energy per unit of sum(f_hat^3), in joules."""
        return s.kappa_uav * s.delta_t * self.f_ua**3

    def causality_coeff_ua(self, s: Scenario) -> float:
        """Bits-per-slot (normalized) processed by one unit of f_hat."""
        return s.delta_t * self.f_ua / (s.cycles_per_bit_uav * self.bits)

    def causality_coeff_bs(self, s: Scenario) -> float:
        return s.delta_t * self.f_bs / (s.cycles_per_bit_bs * self.bits)
