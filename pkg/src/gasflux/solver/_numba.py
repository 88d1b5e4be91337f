"""Loop kernels compiled with numba.

Same contract as :mod:`gasflux.solver._numpy`; see :mod:`gasflux.solver.kernels`.
"""

import math

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_BAD_DENSITY = 1
STATUS_BAD_PRESSURE = 2


@njit(cache=True, inline="always")
def _p_of_rho(rho, RT, b, c1):
    rt = RT * rho
    return 2.0 * rt / (c1 + math.sqrt(c1 * c1 + 4.0 * b * rt))


@njit(cache=True, inline="always")
def _rho_of_p(p, RT, b, p_atm):
    return p * (1.0 + b * (p - p_atm)) / RT


@njit(cache=True, inline="always")
def _friction_solve(y, a):
    # root of x + a x|x| = y, rationalized so a -> 0 needs no special case
    return 2.0 * y / (1.0 + math.sqrt(1.0 + 4.0 * a * abs(y)))


@njit(cache=True, inline="always")
def _bc_value(vals, node, t, t0, bc_dt, linear):
    n = vals.shape[1]
    s = (t - t0) / bc_dt
    i = int(math.floor(s))
    if i < 0:
        return vals[node, 0]
    if i >= n - 1:
        return vals[node, n - 1]
    if linear:
        w = s - i
        return (1.0 - w) * vals[node, i] + w * vals[node, i + 1]
    return vals[node, i]


@njit(cache=True)
def _kick(rho, phi, p_cell, p_node, rho_node, dt, t_target,
          cell_start, dx, diam, lam, area, inc_ptr, inc_pipe, inc_side,
          bc_t0, bc_dt, bc_vals, bc_linear, RT, b, p_atm, out):
    n_pipes = dx.shape[0]
    c1 = 1.0 - b * p_atm
    for c in range(rho.shape[0]):
        p_cell[c] = _p_of_rho(rho[c], RT, b, c1)

    # interior edges
    for k in range(n_pipes):
        cs = cell_start[k]
        ce = cell_start[k + 1]
        ratio = dt / dx[k]
        fcoef = dt * lam[k] / (2.0 * diam[k])
        for c in range(cs, ce - 1):
            e = c + k + 1
            a = fcoef / (rho[c] + rho[c + 1])
            f = phi[e]
            y = f - ratio * (p_cell[c + 1] - p_cell[c]) - a * f * abs(f)
            phi[e] = _friction_solve(y, a)

    # nodes: zero-volume junctions, pressure from the Kirchhoff balance
    n_nodes = inc_ptr.shape[0] - 1
    injected = 0.0
    max_res = 0.0
    for n in range(n_nodes):
        d = _bc_value(bc_vals, n, t_target, bc_t0, bc_dt, bc_linear)
        injected -= d
        j0 = inc_ptr[n]
        j1 = inc_ptr[n + 1]
        m = j1 - j0
        yt = np.empty(m)
        cc = np.empty(m)
        aa = np.empty(m)
        ss = np.empty(m)
        s_tot = 0.0
        for j in range(m):
            k = inc_pipe[j0 + j]
            if inc_side[j0 + j] == 0:
                cell = cell_start[k]
                e = cell + k
                sgn = 1.0
            else:
                cell = cell_start[k + 1] - 1
                e = cell + k + 1
                sgn = -1.0
            h = 0.5 * dx[k]
            a = dt * lam[k] / (2.0 * diam[k] * 2.0 * rho[cell])
            f = phi[e]
            cc[j] = dt / h
            aa[j] = a
            ss[j] = area[k]
            s_tot += area[k]
            yt[j] = sgn * f - cc[j] * p_cell[cell] - a * sgn * f * abs(f)
        p = p_node[n]
        lo = -1.0e300
        hi = 1.0e300
        for it in range(100):
            g = d
            gp = 0.0
            for j in range(m):
                z = yt[j] + cc[j] * p
                sq = math.sqrt(1.0 + 4.0 * aa[j] * abs(z))
                g += ss[j] * 2.0 * z / (1.0 + sq)
                gp += ss[j] * cc[j] / sq
            if g > 0.0:
                hi = p
            else:
                lo = p
            pn = p - g / gp
            if lo > -1.0e300 and hi < 1.0e300 and not (lo <= pn <= hi):
                pn = 0.5 * (lo + hi)
            done = abs(pn - p) <= 1e-14 * abs(p) + 1e-10
            p = pn
            if done:
                break
        if not (p > 0.0) or not math.isfinite(p):
            out[1] = n
            return STATUS_BAD_PRESSURE
        # outflows, then project the leftover residual so mass balance is exact
        res = d
        for j in range(m):
            z = yt[j] + cc[j] * p
            aa[j] = _friction_solve(z, aa[j])
            res += ss[j] * aa[j]
        if abs(res) > max_res:
            max_res = abs(res)
        shift = res / s_tot
        for j in range(m):
            x = aa[j] - shift
            k = inc_pipe[j0 + j]
            if inc_side[j0 + j] == 0:
                phi[cell_start[k] + k] = x
            else:
                phi[cell_start[k + 1] + k] = -x
        p_node[n] = p
        rho_node[n] = _rho_of_p(p, RT, b, p_atm)
    out[0] = injected
    if max_res > out[2]:
        out[2] = max_res
    return STATUS_OK


@njit(cache=True)
def kick(rho, phi, p_node, rho_node, dt, t_target,
         cell_start, dx, diam, lam, area, inc_ptr, inc_pipe, inc_side,
         bc_t0, bc_dt, bc_vals, bc_linear, RT, b, p_atm, out):
    p_cell = np.empty(rho.shape[0])
    return _kick(rho, phi, p_cell, p_node, rho_node, dt, t_target,
                 cell_start, dx, diam, lam, area, inc_ptr, inc_pipe, inc_side,
                 bc_t0, bc_dt, bc_vals, bc_linear, RT, b, p_atm, out)


@njit(cache=True)
def advance(rho, phi, p_node, rho_node, n_steps, dt, t,
            cell_start, dx, diam, lam, area, inc_ptr, inc_pipe, inc_side,
            bc_t0, bc_dt, bc_vals, bc_linear, RT, b, p_atm, out):
    """``n_steps`` of drift (densities) then kick (fluxes, nodes).

    ``out``: [0] injection rate of the last kick [kg/s], [1] failing index,
    [2] max Kirchhoff residual seen, [3] cumulative injected mass [kg].
    """
    n_pipes = dx.shape[0]
    p_cell = np.empty(rho.shape[0])
    for step in range(n_steps):
        for k in range(n_pipes):
            ratio = dt / dx[k]
            for c in range(cell_start[k], cell_start[k + 1]):
                e = c + k
                r = rho[c] - ratio * (phi[e + 1] - phi[e])
                if not (r > 0.0) or not math.isfinite(r):
                    out[1] = k
                    return STATUS_BAD_DENSITY, t
                rho[c] = r
        out[3] += dt * out[0]
        t += dt
        status = _kick(rho, phi, p_cell, p_node, rho_node, dt, t + 0.5 * dt,
                       cell_start, dx, diam, lam, area, inc_ptr, inc_pipe, inc_side,
                       bc_t0, bc_dt, bc_vals, bc_linear, RT, b, p_atm, out)
        if status != STATUS_OK:
            return status, t
    return STATUS_OK, t
