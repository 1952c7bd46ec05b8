"""Iteration state and the ratio-maximization driver shared by the subproblems."""

from __future__ import annotations

from dataclasses import dataclass, field

TERM_CONVERGED = "converged"
TERM_FIXED_POINT = "fixed-point"
TERM_MAX_ITERS = "max-iterations"
TERM_NUMERICAL = "numerical-limit"


@dataclass
class DinkelbachState:
    """Ratio estimate psi (bits/joule) and the residual L - psi * E."""

    psi: float
    v1: float = float("nan")
    iterations: int = 0
    trace: list = field(default_factory=list)
    termination: str = TERM_CONVERGED


@dataclass
class PenaltyState:
    """Penalty coefficient path for the binary-scheduling relaxation."""

    rho_hat: float
    omega: float
    v2: float = float("nan")
    iterations: int = 0
    trace: list = field(default_factory=list)


def dinkelbach_loop(l_warm: float, e_warm: float, inner,
                    eps1: float, max_iters: int,
                    rel_floor: float = 1e-9) -> tuple[object, DinkelbachState]:
    """Drive psi to the fixed point of the ratio L/E.

    `inner(psi)` maximizes L - psi * E over the block's feasible set and
    returns (L, E, payload). Terminates when the residual v1 = L - psi * E
    drops below max(eps1, rel_floor * L): the absolute threshold is the
    paper-level tolerance, the relative floor guards against demanding more
    than the conic solver's precision at large bit scales. The psi trace is
    nondecreasing by construction; a psi decrease (solver noise at the fixed
    point) stops the loop with the best iterate kept.
    """
    psi = l_warm / e_warm if e_warm > 0 else 0.0
    state = DinkelbachState(psi=psi, trace=[psi])
    best = None
    for it in range(1, max_iters + 1):
        l_val, e_val, payload = inner(psi)
        state.iterations = it
        v1 = l_val - psi * e_val
        state.v1 = v1
        ratio = l_val / e_val if e_val > 0 else 0.0
        if best is None or ratio > best[0]:
            best = (ratio, payload, l_val, e_val)
        if v1 <= max(eps1, rel_floor * abs(l_val)):
            if ratio > psi:
                psi = ratio
                state.trace.append(psi)
            state.psi = psi
            state.termination = TERM_CONVERGED
            return best[1], state
        if ratio <= psi:
            state.termination = TERM_FIXED_POINT
            state.psi = psi
            return best[1], state
        psi = ratio
        state.psi = psi
        state.trace.append(psi)
    state.termination = TERM_MAX_ITERS
    return best[1] if best is not None else None, state
