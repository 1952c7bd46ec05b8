"""Independent reference implementations used only to generate expected values.

Everything here is written straight from the model formulas with plain
loops, no shared code with the package internals it checks.
"""

import math

import numpy as np

C_LIGHT = 2.99792458e8


def kron_steering(xi, chi, m_x, m_y, d, lam):
    """Two-loop UPA steering vector, element m = (mx-1)*My + (my-1)."""
    out = np.zeros(m_x * m_y, dtype=complex)
    for mx in range(1, m_x + 1):
        for my in range(1, m_y + 1):
            phase = -2 * math.pi * d / lam * ((mx - 1) * xi + (my - 1) * chi)
            out[(mx - 1) * m_y + (my - 1)] = complex(math.cos(phase), math.sin(phase))
    return out


def composite_scalar(h_a, h_b, phi, beta):
    acc = 0j
    for m in range(len(h_a)):
        acc += beta[m] * np.exp(-1j * phi[m]) * np.conj(h_a[m]) * h_b[m]
    return acc


def straight_line_rates(s, q_uav, k, phi_r, phi_t, beta_r, beta_t):
    """Offload rates evaluated end-to-end from the channel formulas."""
    lam = C_LIGHT / s.f_carrier
    rho = (lam / (4 * math.pi)) ** 2
    qk = s.user_pos[k]
    d_rk = math.dist(q_uav, qk)
    d_rb = math.dist(s.bs_pos, q_uav)
    xi_rk = (q_uav[0] - qk[0]) / d_rk
    chi_rk = (q_uav[1] - qk[1]) / d_rk
    xi_rb = (s.bs_pos[0] - q_uav[0]) / d_rb
    chi_rb = (s.bs_pos[1] - q_uav[1]) / d_rb
    h_rk = math.sqrt(rho / d_rk**s.alpha_rk) * kron_steering(
        xi_rk, chi_rk, s.M_x, s.M_y, s.elem_sep, lam)
    h_rb = math.sqrt(rho / d_rb**s.alpha_rb) * kron_steering(
        xi_rb, chi_rb, s.M_x, s.M_y, s.elem_sep, lam)
    # near-field hop: centered UPA half a meter under the antenna
    h_ru = np.zeros(s.M, dtype=complex)
    i = 0
    for mx in range(s.M_x):
        for my in range(s.M_y):
            ox = (mx - (s.M_x - 1) / 2) * s.elem_sep
            oy = (my - (s.M_y - 1) / 2) * s.elem_sep
            r = math.sqrt(ox**2 + oy**2 + 0.5**2)
            h_ru[i] = lam / (4 * math.pi * r) * np.exp(-2j * math.pi * r / lam)
            i += 1
    g_t = abs(composite_scalar(h_ru, h_rk, phi_t, beta_t)) ** 2
    g_r = abs(composite_scalar(h_rb, h_rk, phi_r, beta_r)) ** 2
    r_ua = s.bandwidth * math.log2(1 + s.p_tx * g_t / s.noise_uav)
    r_bs = s.bandwidth * math.log2(1 + s.p_tx * g_r / s.noise_bs)
    return r_ua, r_bs


def lp_vertex_max(c, a_ub, b_ub):
    """Maximize c^T x s.t. A x <= b by enumerating constraint-intersection vertices."""
    from itertools import combinations
    a_ub = np.asarray(a_ub, float)
    b_ub = np.asarray(b_ub, float)
    n = len(c)
    best = None
    for rows in combinations(range(len(b_ub)), n):
        sub = a_ub[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        x = np.linalg.solve(sub, b_ub[list(rows)])
        if np.all(a_ub @ x <= b_ub + 1e-9):
            val = float(np.dot(c, x))
            if best is None or val > best[0]:
                best = (val, x)
    return best


def flight_power_direct(v, p0, p0_hat, u_tip, v0, drag):
    return (p0 * (1 + 3 * v**2 / u_tip**2)
            + drag * v**3
            + p0_hat * math.sqrt(math.sqrt(1 + v**4 / (4 * v0**4)) - v**2 / (2 * v0**2)))
