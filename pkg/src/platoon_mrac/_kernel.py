"""Compiled right-hand side and fixed-step integrators for the coupled system.

The flat state is laid out by :class:`platoon_mrac.simulation.StateLayout`;
this module only sees integer offset tables.  The Python implementation in
:mod:`platoon_mrac.controller` is the readable reference and the tests check
this kernel against it.
"""

import math

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_NONFINITE = 1
STATUS_NORM = 2


@njit(cache=True)
def _r_at(t, r_breaks, r_levels):
    k = 0
    for idx in range(r_breaks.shape[0]):
        if r_breaks[idx] <= t:
            k = idx
    return r_levels[k]


@njit(cache=True)
def _sigmoid(z, a):
    return 0.5 * (1.0 + math.tanh(0.5 * a * z))


@njit(cache=True)
def derivative(t, z, dz, u, sys):
    (p_int, A, B, unc_kind, unc_c, A0, b0, r_breaks, r_levels, P, order, nbr_ptr, nbr_idx,
     edge_off, kmi_off, w_off, th_off, alpha, est_mode, sign_kr, V, gamma, gamma_r_ratio,
     slope, own_state, adapt_nn, adapt_gains) = sys
    n = p_int[0]
    m = p_int[2]
    r = _r_at(t, r_breaks, r_levels)
    for k in range(dz.shape[0]):
        dz[k] = 0.0

    # reference model
    for row in range(n):
        acc = b0[row] * r
        for col in range(n):
            acc += A0[row, col] * z[col]
        dz[row] = acc

    xbar = np.empty(n + 1)
    sig = np.empty(m)
    E = np.empty(n)
    Ef = np.empty(n)
    Pb = np.empty(n)
    b0P = np.empty(n)
    for col in range(n):
        acc = 0.0
        for row in range(n):
            acc += b0[row] * P[row, col]
        b0P[col] = acc

    for pos in range(order.shape[0]):
        i = order[pos]  # follower id, 1-based
        ia = i - 1
        xo = n * i  # offset of x_i in z
        # aggregate and follower-only errors
        for c in range(n):
            E[c] = 0.0
            Ef[c] = 0.0
        for e in range(nbr_ptr[ia], nbr_ptr[ia + 1]):
            j = nbr_idx[e]
            for c in range(n):
                d = z[xo + c] - z[n * j + c]
                E[c] += d
                if j != 0:
                    Ef[c] += d
        s = 0.0
        for c in range(n):
            s += b0P[c] * E[c]

        # neural term
        xbar[0] = 1.0
        for c in range(n):
            xbar[c + 1] = z[xo + c]
        wo = w_off[ia]
        to = th_off[ia]
        nn = z[to]
        for h in range(m):
            acc = 0.0
            for row in range(n + 1):
                acc += z[wo + row * m + h] * xbar[row]
            sig[h] = _sigmoid(acc, slope)
            nn += z[to + 1 + h] * sig[h]

        # control
        total = 0.0
        for e in range(nbr_ptr[ia], nbr_ptr[ia + 1]):
            j = nbr_idx[e]
            eo = edge_off[e]
            src = xo if (j == 0 or own_state) else n * j
            for c in range(n):
                total += z[eo + c] * z[src + c]
            if j == 0:
                total += z[eo + n] * r
            elif est_mode[ia]:
                total += z[eo + n]
            else:
                total += z[eo + n] * u[j - 1]
        ko = kmi_off[ia]
        for c in range(n):
            total += z[ko + c] * Ef[c]
        ui = alpha[ia] * (total - nn)
        u[ia] = ui

        # plant
        f = 0.0
        if unc_kind[ia] == 1:
            f = unc_c[ia, 0] * math.sin(z[xo])
            if n > 1:
                f += unc_c[ia, 1] * math.cos(z[xo + 1])
            else:
                f += unc_c[ia, 1]
        for row in range(n):
            acc = B[ia, row] * (ui + f)
            for col in range(n):
                acc += A[ia, row, col] * z[xo + col]
            dz[xo + row] = acc

        # gain laws
        if adapt_gains:
            g = sign_kr[ia] * gamma * s
            for e in range(nbr_ptr[ia], nbr_ptr[ia + 1]):
                j = nbr_idx[e]
                eo = edge_off[e]
                src = xo if (j == 0 or own_state) else n * j
                for c in range(n):
                    dz[eo + c] = -g * z[src + c]
                if j == 0:
                    dz[eo + n] = -g * r
                elif est_mode[ia]:
                    dz[eo + n] = -g
                else:
                    dz[eo + n] = -g * gamma_r_ratio * u[j - 1]
            for c in range(n):
                dz[ko + c] = -g * Ef[c]

        # neural network laws
        if adapt_nn:
            for c in range(n):
                acc = 0.0
                for row in range(n):
                    acc += P[c, row] * B[ia, row]
                Pb[c] = acc
            sn = 0.0
            for c in range(n):
                sn += E[c] * Pb[c]
            gs = gamma * sn
            dz[to] = gs
            for h in range(m):
                dz[to + 1 + h] = gs * sig[h]
                vs = V[ia, h] * sig[h]
                for row in range(n + 1):
                    dz[wo + row * m + h] = gs * xbar[row] * vs


@njit(cache=True)
def _state_ok(z, n, n_nodes, max_norm):
    for k in range(z.shape[0]):
        if not math.isfinite(z[k]):
            return STATUS_NONFINITE
    for node in range(n_nodes):
        acc = 0.0
        for c in range(n):
            acc += z[node * n + c] ** 2
        if acc > max_norm * max_norm:
            return STATUS_NORM
    return STATUS_OK


@njit(cache=True)
def integrate(z0, t0, dt, n_steps, stride, method, max_norm, sys):
    """Fixed-step integration; method 0 = RK4, 1 = explicit Euler.

    Returns ``(times, states, controls, status, fail_step)``; samples are
    taken every ``stride`` steps, including the initial state.
    """
    n = sys[0][0]
    n_agents = sys[0][1]
    size = z0.shape[0]
    n_rec = n_steps // stride + 1
    times = np.empty(n_rec)
    states = np.empty((n_rec, size))
    controls = np.empty((n_rec, n_agents))
    z = z0.copy()
    k1 = np.empty(size)
    k2 = np.empty(size)
    k3 = np.empty(size)
    k4 = np.empty(size)
    tmp = np.empty(size)
    u = np.zeros(n_agents)
    u_scratch = np.zeros(n_agents)

    derivative(t0, z, k1, u, sys)
    times[0] = t0
    states[0] = z
    controls[0] = u
    rec = 1
    status = _state_ok(z, n, n_agents + 1, max_norm)
    if status != STATUS_OK:
        return times[:1], states[:1], controls[:1], status, 0
    for step in range(1, n_steps + 1):
        t = t0 + (step - 1) * dt
        # k1 already holds f(t, z) from the previous iteration
        if method == 0:
            for q in range(size):
                tmp[q] = z[q] + 0.5 * dt * k1[q]
            derivative(t + 0.5 * dt, tmp, k2, u_scratch, sys)
            for q in range(size):
                tmp[q] = z[q] + 0.5 * dt * k2[q]
            derivative(t + 0.5 * dt, tmp, k3, u_scratch, sys)
            for q in range(size):
                tmp[q] = z[q] + dt * k3[q]
            derivative(t + dt, tmp, k4, u_scratch, sys)
            for q in range(size):
                z[q] += dt / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q])
        else:
            for q in range(size):
                z[q] += dt * k1[q]
        t_new = t0 + step * dt
        status = _state_ok(z, n, n_agents + 1, max_norm)
        if status != STATUS_OK:
            return times[:rec], states[:rec], controls[:rec], status, step
        derivative(t_new, z, k1, u, sys)
        if step % stride == 0:
            times[rec] = t_new
            states[rec] = z
            controls[rec] = u
            rec += 1
    return times[:rec], states[:rec], controls[:rec], STATUS_OK, -1
