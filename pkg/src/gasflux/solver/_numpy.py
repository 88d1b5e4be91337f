"""Vectorized numpy kernels; fallback when numba is disabled or missing."""

import numpy as np

STATUS_OK = 0
STATUS_BAD_DENSITY = 1
STATUS_BAD_PRESSURE = 2


def _bc_values(bc_vals, t, t0, bc_dt, linear):
    n = bc_vals.shape[1]
    s = (t - t0) / bc_dt
    i = int(np.floor(s))
    if i < 0:
        return bc_vals[:, 0]
    if i >= n - 1:
        return bc_vals[:, n - 1]
    if linear:
        w = s - i
        return (1.0 - w) * bc_vals[:, i] + w * bc_vals[:, i + 1]
    return bc_vals[:, i]


def _friction_solve(y, a):
    return 2.0 * y / (1.0 + np.sqrt(1.0 + 4.0 * a * np.abs(y)))


class NumpyKernel:
    """Holds the index arrays of a :class:`~gasflux.solver.grid.Layout`."""

    def __init__(self, layout, RT, b, p_atm):
        self.lay = layout
        self.RT, self.b, self.p_atm = RT, b, p_atm
        self.c1 = 1.0 - b * p_atm
        lay = layout
        self.ratio_cell = 1.0 / lay.dx[lay.cell_pipe]
        self.left = lay.cell_left_edge
        ip = lay.interior_pipe
        self.int_e = lay.interior_edges
        self.int_l = lay.interior_left_cell
        self.int_inv_dx = 1.0 / lay.dx[ip]
        self.int_fcoef = lay.friction[ip] / (2.0 * lay.diameter[ip])
        inc_p = lay.inc_pipe
        self.inc_node = lay.inc_node
        self.inc_cell = lay.inc_cell
        self.inc_edge = lay.inc_edge
        self.inc_sign = lay.inc_sign
        self.inc_inv_h = 2.0 / lay.dx[inc_p]
        self.inc_fcoef = lay.friction[inc_p] / (4.0 * lay.diameter[inc_p])
        self.inc_area = lay.area[inc_p]
        self.s_tot = np.bincount(self.inc_node, self.inc_area, minlength=lay.n_nodes)

    def _p(self, rho):
        rt = self.RT * rho
        return 2.0 * rt / (self.c1 + np.sqrt(self.c1 * self.c1 + 4.0 * self.b * rt))

    def kick(self, rho, phi, p_node, rho_node, dt, t_target, bc, out):
        n_nodes = self.lay.n_nodes
        p_cell = self._p(rho)
        e, l = self.int_e, self.int_l
        a = dt * self.int_fcoef / (rho[l] + rho[l + 1])
        f = phi[e]
        y = f - dt * self.int_inv_dx * (p_cell[l + 1] - p_cell[l]) - a * f * np.abs(f)
        phi[e] = _friction_solve(y, a)

        d = _bc_values(bc.values, t_target, bc.t0, bc.dt, bc.linear)
        cell = self.inc_cell
        sgn = self.inc_sign
        cc = dt * self.inc_inv_h
        aa = dt * self.inc_fcoef / rho[cell]
        fo = phi[self.inc_edge]
        yt = sgn * fo - cc * p_cell[cell] - aa * sgn * fo * np.abs(fo)
        node = self.inc_node
        S = self.inc_area
        p = p_node.copy()
        lo = np.full(n_nodes, -np.inf)
        hi = np.full(n_nodes, np.inf)
        for _ in range(100):
            z = yt + cc * p[node]
            sq = np.sqrt(1.0 + 4.0 * aa * np.abs(z))
            g = np.bincount(node, S * 2.0 * z / (1.0 + sq), minlength=n_nodes) + d
            gp = np.bincount(node, S * cc / sq, minlength=n_nodes)
            pos = g > 0.0
            hi = np.where(pos, p, hi)
            lo = np.where(pos, lo, p)
            pn = p - g / gp
            bracketed = np.isfinite(lo) & np.isfinite(hi)
            pn = np.where(bracketed & ~((lo <= pn) & (pn <= hi)), 0.5 * (lo + hi), pn)
            done = np.all(np.abs(pn - p) <= 1e-14 * np.abs(p) + 1e-10)
            p = pn
            if done:
                break
        if not np.all((p > 0.0) & np.isfinite(p)):
            out[1] = int(np.argmax(~((p > 0.0) & np.isfinite(p))))
            return STATUS_BAD_PRESSURE
        x = _friction_solve(yt + cc * p[node], aa)
        res = np.bincount(node, S * x, minlength=n_nodes) + d
        x -= (res / self.s_tot)[node]
        phi[self.inc_edge] = sgn * x
        p_node[:] = p
        rho_node[:] = p * (1.0 + self.b * (p - self.p_atm)) / self.RT
        out[0] = -d.sum()
        out[2] = max(out[2], float(np.abs(res).max()))
        return STATUS_OK

    def advance(self, rho, phi, p_node, rho_node, n_steps, dt, t, bc, out):
        left = self.left
        for _ in range(n_steps):
            r = rho - dt * self.ratio_cell * (phi[left + 1] - phi[left])
            bad = ~((r > 0.0) & np.isfinite(r))
            if bad.any():
                out[1] = int(self.lay.cell_pipe[np.argmax(bad)])
                return STATUS_BAD_DENSITY, t
            rho[:] = r
            out[3] += dt * out[0]
            t += dt
            status = self.kick(rho, phi, p_node, rho_node, dt, t + 0.5 * dt, bc, out)
            if status != STATUS_OK:
                return status, t
        return STATUS_OK, t
