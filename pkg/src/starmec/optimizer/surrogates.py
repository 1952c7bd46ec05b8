"""First-order bounds used by the convexified subproblems.

Every function here is pure and mirrors one replacement step: the linear
upper bound on the binarity gap eta = zeta - zeta^2, the tangent lower
bound on the amplitude quadratic forms, the distance-relaxed rate bounds
with their tangents, and the induced-power surrogate for the flight energy.
Each bound touches its original exactly at the expansion point.
"""

from __future__ import annotations

import math

import numpy as np

LN2 = math.log(2.0)


def eta(zeta):
    """Binarity gap zeta - zeta^2; zero exactly on {0, 1}."""
    z = np.asarray(zeta, dtype=float)
    return z - z**2


def eta_upper(zeta, zeta_exp):
    """Tangent upper bound of eta at zeta_exp (eta is concave)."""
    z = np.asarray(zeta, dtype=float)
    z0 = np.asarray(zeta_exp, dtype=float)
    return z - (z0**2 + 2.0 * z0 * (z - z0))


def linearized_quadratic(mat, beta, beta_exp):
    """Tangent lower bound of beta^T mat beta at beta_exp (mat PSD)."""
    b = np.asarray(beta, dtype=float)
    b0 = np.asarray(beta_exp, dtype=float)
    return 2.0 * (b0 @ mat @ b) - float(b0 @ mat @ b0)


# -- distance-relaxed rates ----------------------------------------------
# a_ua = rho * p * |composite with the normalized user steering|^2, so the
# UAV-link SNR is a_ua / (lam * sigma^2) once lam >= d^alpha; the BS link
# carries both path losses, a_bs / (lam * lam_t * sigma^2).

def rate_bound_ua(lam, a_ua: float, noise: float, bandwidth: float):
    lam = np.asarray(lam, dtype=float)
    return bandwidth * np.log2(1.0 + a_ua / (lam * noise))


def rate_taylor_ua_coeffs(lam_exp: float, a_ua: float, noise: float,
                          bandwidth: float):
    """(intercept, slope) of the tangent to rate_bound_ua at lam_exp."""
    slope = -bandwidth * a_ua / (LN2 * lam_exp * (noise * lam_exp + a_ua))
    intercept = (bandwidth * math.log2(1.0 + a_ua / (lam_exp * noise))
                 - slope * lam_exp)
    return intercept, slope


def rate_taylor_ua(lam, lam_exp: float, a_ua: float, noise: float,
                   bandwidth: float):
    c0, c1 = rate_taylor_ua_coeffs(lam_exp, a_ua, noise, bandwidth)
    return c0 + c1 * np.asarray(lam, dtype=float)


def rate_bound_bs(lam, lam_t, a_bs: float, noise: float, bandwidth: float):
    lam = np.asarray(lam, dtype=float)
    lam_t = np.asarray(lam_t, dtype=float)
    return bandwidth * np.log2(1.0 + a_bs / (lam * lam_t * noise))


def rate_taylor_bs_coeffs(lam_exp: float, lam_t_exp: float, a_bs: float,
                          noise: float, bandwidth: float):
    """(intercept, slope_lam, slope_lam_t) of the tangent at the expansion."""
    denom = a_bs + lam_exp * lam_t_exp * noise
    s1 = -bandwidth * a_bs / (LN2 * lam_exp * denom)
    s2 = -bandwidth * a_bs / (LN2 * lam_t_exp * denom)
    c0 = (bandwidth * math.log2(1.0 + a_bs / (lam_exp * lam_t_exp * noise))
          - s1 * lam_exp - s2 * lam_t_exp)
    return c0, s1, s2


def rate_taylor_bs(lam, lam_t, lam_exp: float, lam_t_exp: float,
                   a_bs: float, noise: float, bandwidth: float):
    c0, s1, s2 = rate_taylor_bs_coeffs(lam_exp, lam_t_exp, a_bs, noise, bandwidth)
    return c0 + s1 * np.asarray(lam, dtype=float) + s2 * np.asarray(lam_t, dtype=float)


# -- flight-energy surrogate ----------------------------------------------

def induced_factor_sq(v, v0: float):
    """Exact induced-power factor squared: sqrt(1 + v^4/4v0^4) - v^2/2v0^2."""
    v = np.asarray(v, dtype=float)
    return np.sqrt(1.0 + v**4 / (4.0 * v0**4)) - v**2 / (2.0 * v0**2)


def induced_slack_affine(mu, dq, mu_exp, dq_exp, v0: float, delta_t: float):
    """Tangent lower bound of mu^2 + v^2/v0^2 in (mu, position step).

    v is the speed ||dq|| / delta_t of one segment; the bound supports the
    reformulated induced constraint  mu^2 + v^2/v0^2 >= 1/mu^2.
    """
    mu = np.asarray(mu, dtype=float)
    dq = np.asarray(dq, dtype=float)
    dq_exp = np.asarray(dq_exp, dtype=float)
    quad = (2.0 * np.sum(dq_exp * dq, axis=-1)
            - np.sum(dq_exp * dq_exp, axis=-1)) / (v0**2 * delta_t**2)
    return mu_exp**2 + 2.0 * mu_exp * (mu - mu_exp) + quad


def induced_slack_true(mu, dq, v0: float, delta_t: float):
    mu = np.asarray(mu, dtype=float)
    v2 = np.sum(np.asarray(dq, dtype=float)**2, axis=-1) / delta_t**2
    return mu**2 + v2 / v0**2
