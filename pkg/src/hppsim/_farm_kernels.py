"""Compiled inner loops of the wind farm step.

These mirror, turbine by turbine, the vectorised public functions in
:mod:`hppsim.wind`; the tests hold the two routes against each other.
Grids are ``(n_rows, n_cols)`` with row 0 facing the free stream.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _induction(lam, ct_lam, ct_val):
    ct = np.interp(lam, ct_lam, ct_val)
    return 0.5 * (1.0 - math.sqrt(1.0 - ct))


@njit(cache=True)
def wind_grid(u_inf, omega, g2, r_rotor, u_min, ct_lam, ct_val, lam0):
    """Effective wind per turbine; ``lam0 >= 0`` overrides every rotor's lambda."""
    n_rows, n_cols = omega.shape
    u = np.empty((n_rows, n_cols))
    ua2 = np.zeros((n_rows, n_cols))
    for c in range(n_cols):
        for r in range(n_rows):
            if r == 0:
                ur = u_inf
            else:
                acc = 0.0
                for q in range(r):
                    acc += g2[r, q] * ua2[q, c]
                ur = max(u_inf - math.sqrt(acc), u_min)
            u[r, c] = ur
            lam = lam0 if lam0 >= 0.0 else r_rotor * omega[r, c] / ur
            a = _induction(lam, ct_lam, ct_val)
            ua2[r, c] = (ur * a) ** 2
    return u


@njit(cache=True)
def _accel(w, k, scale, torque, inv_j, cp_lam, cp_val):
    return (k * np.interp(scale * w, cp_lam, cp_val) / w - torque) * inv_j


@njit(cache=True)
def _rk4(w, u, torque, h, half_rho_a, r_rotor, inv_j, cp_lam, cp_val):
    k = half_rho_a * u**3
    scale = r_rotor / u
    k1 = _accel(w, k, scale, torque, inv_j, cp_lam, cp_val)
    k2 = _accel(w + 0.5 * h * k1, k, scale, torque, inv_j, cp_lam, cp_val)
    k3 = _accel(w + 0.5 * h * k2, k, scale, torque, inv_j, cp_lam, cp_val)
    k4 = _accel(w + h * k3, k, scale, torque, inv_j, cp_lam, cp_val)
    return w + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit(cache=True)
def advance_rows(
    omega, u, u_inf, p_sp, h, g2,
    r_rotor, j_rotor, half_rho_a, torque_gain,
    gain_k, c_w, lambda_barrier, tg_max, omega_min, u_min,
    cp_lam, cp_val, ct_lam, ct_val,
):
    """One substep of barrier-filtered torque control, front row first.

    Returns (end rotor speeds, torques, infeasible flags, non-finite flag).
    """
    n_rows, n_cols = omega.shape
    w_new = np.empty((n_rows, n_cols))
    torque = np.empty((n_rows, n_cols))
    infeasible = np.zeros((n_rows, n_cols), dtype=np.bool_)
    ua2_next = np.zeros((n_rows, n_cols))
    inv_j = 1.0 / j_rotor
    bad = False
    for c in range(n_cols):
        for r in range(n_rows):
            ur = u[r, c]
            w = omega[r, c]
            lam = r_rotor * w / ur
            p = half_rho_a * np.interp(lam, cp_lam, cp_val) * ur**3
            if r == 0:
                u_next = ur
                drift = 0.0
            else:
                acc = 0.0
                for q in range(r):
                    acc += g2[r, q] * ua2_next[q, c]
                u_next = max(u_inf - math.sqrt(acc), u_min)
                drift = lam * (u_next - ur) / (h * ur)
            ff = p / w
            t_star = torque_gain * gain_k * (p - p_sp) / ur**2 + ff
            margin = c_w * (lambda_barrier - lam) + drift
            lo = max(ff - margin * ur * j_rotor / r_rotor, 0.0)
            infeasible[r, c] = lo > tg_max
            tq = min(max(t_star, lo), tg_max)
            w_end = _rk4(w, ur, tq, h, half_rho_a, r_rotor, inv_j, cp_lam, cp_val)
            if lo > 0.0 and lo >= t_star and lo <= tg_max:
                w_target = w + h * (ff - lo) * inv_j
                if w_end > w_target:
                    tq = min(tq + (w_end - w_target) * j_rotor / h, tg_max)
                    w_end = _rk4(w, ur, tq, h, half_rho_a, r_rotor, inv_j, cp_lam, cp_val)
            if not math.isfinite(w_end):
                bad = True
            torque[r, c] = tq
            w_end = max(w_end, omega_min)
            w_new[r, c] = w_end
            ua2_next[r, c] = (u_next * _induction(r_rotor * w_end / u_next, ct_lam, ct_val)) ** 2
    return w_new, torque, infeasible, bad
