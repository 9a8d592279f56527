"""Path-conservative CWENO finite-difference solver on uniform grids.

Semi-discrete scheme per cell: conservative Rusanov flux differences for
the fluid block, the nonconservative product B . grad u evaluated with the
CWENO central derivative, jump terms D = B(face mean) . (w+ - w-) / 2
averaged onto the cell, and the pointwise algebraic source. The optional
well-balanced mode pushes a frozen equilibrium through the identical
pipeline and subtracts it, with the Rusanov viscosity acting on the
fluctuation's face jumps only, so catalog equilibria are exact fixed
points of the full update.

Grids are handled internally as 3D blocks with size-1 trailing axes, so
1D/2D/3D share all kernels. Excised cells keep their initial (exact)
values, get zero right-hand side, and do not enter the CFL bound;
stencils crossing them simply read those stored values.
"""

import numpy as np
from numba import njit, prange

from . import cweno, gh, hydro
from . import initial_data as idt
from . import tensors as tk
from .state import FLUID0, NVAR

PERIODIC = "periodic"
DIRICHLET_EXACT = "dirichlet-exact"
DIRICHLET_FROZEN = "dirichlet-frozen"


class SolverAbort(RuntimeError):
    def __init__(self, message, t=None, cell=None):
        super().__init__(f"{message} (t={t}, cell={cell})")
        self.t = t
        self.cell = cell


class Grid:
    """Uniform cell-centered grid with ghost layers on the active axes."""

    def __init__(self, ndim, shape, bounds, ghost, boundary=None):
        self.ndim = ndim
        self.shape = tuple(shape)
        self.bounds = tuple(tuple(b) for b in bounds)
        self.ghost = ghost
        self.boundary = tuple(boundary) if boundary else tuple([PERIODIC] * ndim)
        if len(self.shape) != ndim or len(self.bounds) != ndim:
            raise ValueError("shape/bounds must match ndim")
        self.dx = tuple((hi - lo) / n for (lo, hi), n in zip(self.bounds, self.shape))
        self.shape3 = tuple(list(self.shape) + [1] * (3 - ndim))
        self.ghost3 = tuple([ghost] * ndim + [0] * (3 - ndim))
        self.dx3 = tuple(list(self.dx) + [1.0] * (3 - ndim))

    def axis_coords(self, axis, ghosted=True):
        lo, _ = self.bounds[axis]
        d = self.dx[axis]
        g = self.ghost if ghosted else 0
        i = np.arange(-g, self.shape[axis] + g)
        return lo + (i + 0.5) * d

    def cell_centers(self, ghosted=True, fixed_third=0.0):
        """(3, n) coordinates, flattened in C order over [x, y, z]."""
        axes = [self.axis_coords(a, ghosted) for a in range(self.ndim)]
        while len(axes) < 3:
            axes.append(np.array([fixed_third]))
        xx = np.meshgrid(*axes, indexing="ij")
        return np.stack([c.ravel() for c in xx], axis=0)

    @property
    def n_interior(self):
        return int(np.prod(self.shape))

    def cell_volume(self):
        return float(np.prod(self.dx))


# ---------------------------------------------------------------------------
# numba grid kernels
# ---------------------------------------------------------------------------

@njit(cache=True, parallel=True)
def cell_aux_kernel(u, prim, par, ndim, skip, lam, flux):
    """Per ghosted cell: signal-speed bound and (if matter) fluid fluxes."""
    n = u.shape[1]
    matter = par[gh.PAR_MATTER] != 0.0
    for idx in prange(n):
        if skip[idx]:
            lam[idx] = 0.0
            if matter:
                for ax in range(3):
                    for k in range(5):
                        flux[ax, k, idx] = 0.0
            continue
        uu = np.empty(NVAR)
        for k in range(NVAR):
            uu[k] = u[k, idx]
        pp = np.empty(5)
        for k in range(5):
            pp[k] = prim[k, idx]
        lam[idx] = gh.gh_max_speed(uu, pp, par)
        if matter:
            adm = np.empty(tk.ADM_LEN)
            if tk.adm_from_g(uu[:10], adm) != 0:
                lam[idx] = -1.0
                continue
            ff = np.empty(5)
            for ax in range(ndim):
                hydro.euler_flux_point(pp, uu[FLUID0:FLUID0 + 5], adm, ax, ff)
                for k in range(5):
                    flux[ax, k, idx] = ff[k]


@njit(cache=True, parallel=True)
def center_rhs_kernel(u, grad, prim, par, mask, zsrc, has_zsrc, out):
    """Non-flux right-hand side at interior cells (excised cells get 0)."""
    n = u.shape[1]
    for idx in prange(n):
        if mask[idx]:
            for k in range(NVAR):
                out[k, idx] = 0.0
            continue
        uu = np.empty(NVAR)
        gg = np.empty((NVAR, 3))
        for k in range(NVAR):
            uu[k] = u[k, idx]
            for a in range(3):
                gg[k, a] = grad[k, a, idx]
        pp = np.empty(5)
        for k in range(5):
            pp[k] = prim[k, idx]
        rr = np.empty(NVAR)
        st = gh.gh_rhs_point(uu, gg, pp, par, rr)
        if st != 0:
            for k in range(NVAR):
                out[k, idx] = np.nan
            continue
        if has_zsrc:
            dz = np.empty(NVAR)
            zz = np.empty(NVAR)
            for k in range(NVAR):
                zz[k] = zsrc[k, idx]
            gh.gh_grad_part_axis(uu, zz, 2, par, dz)
            for k in range(NVAR):
                rr[k] += dz[k]
        for k in range(NVAR):
            out[k, idx] = rr[k]


@njit(cache=True, parallel=True)
def dterm_kernel(wm, wp, axis, par, out):
    """Face jump terms: out = gradpart(face mean, w+ - w-) / 2 = -D."""
    n = wm.shape[1]
    for idx in prange(n):
        wbar = np.empty(NVAR)
        dq = np.empty(NVAR)
        for k in range(NVAR):
            wbar[k] = 0.5 * (wm[k, idx] + wp[k, idx])
            dq[k] = wp[k, idx] - wm[k, idx]
        dd = np.empty(NVAR)
        st = gh.gh_grad_part_axis(wbar, dq, axis, par, dd)
        for k in range(NVAR):
            out[k, idx] = 0.5 * dd[k] if st == 0 else np.nan


@njit(cache=True, parallel=True)
def constraints_kernel(u, grad, rhs, prim, par, mask, m_out, c_out, c3_out):
    n = u.shape[1]
    for idx in prange(n):
        if mask[idx]:
            for k in range(4):
                m_out[k, idx] = 0.0
                c_out[k, idx] = 0.0
            for k in range(30):
                c3_out[k, idx] = 0.0
            continue
        uu = np.empty(NVAR)
        gg = np.empty((NVAR, 3))
        rr = np.empty(NVAR)
        for k in range(NVAR):
            uu[k] = u[k, idx]
            rr[k] = rhs[k, idx]
            for a in range(3):
                gg[k, a] = grad[k, a, idx]
        pp = np.empty(5)
        for k in range(5):
            pp[k] = prim[k, idx]
        m4 = np.empty(4)
        c4 = np.empty(4)
        c3 = np.empty(30)
        st = gh.gh_constraints_point(uu, gg, rr, pp, par, m4, c4, c3)
        for k in range(4):
            m_out[k, idx] = m4[k] if st == 0 else np.nan
            c_out[k, idx] = c4[k] if st == 0 else np.nan
        for k in range(30):
            c3_out[k, idx] = c3[k] if st == 0 else np.nan


@njit(cache=True, parallel=True)
def adm_fields_kernel(u, gam_up, sqrtg):
    n = u.shape[1]
    for idx in prange(n):
        g = np.empty(10)
        for k in range(10):
            g[k] = u[k, idx]
        adm = np.empty(tk.ADM_LEN)
        if tk.adm_from_g(g, adm) != 0:
            sqrtg[idx] = -1.0
            for k in range(6):
                gam_up[k, idx] = 0.0
            continue
        sqrtg[idx] = adm[tk.ADM_SQRTG]
        for k in range(6):
            gam_up[k, idx] = adm[tk.ADM_GAMU + k]


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------

class CWENOSolver:
    """CWENO-FD evolution of the GH system on one uniform grid."""

    def __init__(self, grid, degree, params, sampler, eos=None, *,
                 wb=False, cfl=0.4, integrator="rk4",
                 equilibrium_sampler=None, z_slice_source=False,
                 excision_mask=None, gauge=None, vacuum_threshold=1e-11):
        self.grid = grid
        self.degree = degree
        self.par = params
        self.sampler = sampler
        self.eos = eos
        self.wb = wb
        self.cfl = cfl
        self.integrator = integrator
        self.gauge = gauge
        self.vacuum_threshold = vacuum_threshold
        self.tables = cweno.tables(degree)
        if grid.ghost < self.tables.ghost:
            raise ValueError("grid ghost width too small for the stencil")
        self.matter = params[gh.PAR_MATTER] != 0.0
        self.cowling = params[gh.PAR_COWLING] != 0.0
        self.eos_gamma = params[gh.PAR_EOS_GAMMA]

        xs = grid.cell_centers(ghosted=True)
        u0 = np.ascontiguousarray(idt.state_at(sampler, 0.0, xs, eos=eos, gauge=gauge))
        self.u = u0.reshape((NVAR,) + self._gshape3())
        self.t = 0.0

        n_int = grid.n_interior
        self.mask = np.zeros(n_int, dtype=np.bool_) if excision_mask is None \
            else np.ascontiguousarray(excision_mask.reshape(-1))
        # ghosted skip mask (excised interior cells; ghosts stay active)
        skip = np.zeros(self._gshape3(), dtype=np.bool_)
        skip[self._interior_slices()] = self.mask.reshape(grid.shape3)
        self.skip = skip.reshape(-1)

        self.zsrc = np.zeros((NVAR, 1))
        self.has_zsrc = bool(z_slice_source)
        if self.has_zsrc:
            xi = grid.cell_centers(ghosted=False)
            self.zsrc = np.ascontiguousarray(
                idt.state_gradient(sampler, 0.0, xi, eos=eos, gauge=gauge)[:, 2, :])

        self._apply_bc(self.u)

        self.eq_rhs = None
        self.eq_face_jump = None
        if wb:
            eq = equilibrium_sampler or sampler
            ue = np.ascontiguousarray(idt.state_at(eq, 0.0, xs, eos=eos, gauge=gauge))
            self.u_e = ue.reshape((NVAR,) + self._gshape3())
            self._apply_bc(self.u_e)
            self.eq_rhs, self.eq_face_jump = self._pipeline(
                self.u_e, collect_jumps=True, dissipation=False)

    # -- helpers ---------------------------------------------------------
    def _gshape3(self):
        g = self.grid
        return tuple(n + 2 * gg for n, gg in zip(g.shape3, g.ghost3))

    def _interior_slices(self):
        g = self.grid
        return tuple(slice(gg, gg + n) for n, gg in zip(g.shape3, g.ghost3))

    def _apply_bc(self, u):
        g = self.grid
        for ax in range(g.ndim):
            if g.boundary[ax] != PERIODIC:
                continue
            gg = g.ghost
            n = g.shape[ax]
            a = 1 + ax
            dst_lo = [slice(None)] * 4
            src_lo = [slice(None)] * 4
            dst_hi = [slice(None)] * 4
            src_hi = [slice(None)] * 4
            dst_lo[a] = slice(0, gg)
            src_lo[a] = slice(n, n + gg)
            dst_hi[a] = slice(n + gg, n + 2 * gg)
            src_hi[a] = slice(gg, 2 * gg)
            u[tuple(dst_lo)] = u[tuple(src_lo)]
            u[tuple(dst_hi)] = u[tuple(src_hi)]
        # dirichlet ghosts are sampled at setup and never change (stage
        # arithmetic keeps them because the RHS is zero there)

    def _primitives(self, u):
        n = u[0].size
        prim = np.zeros((5, n))
        if not self.matter:
            return prim
        flat = u.reshape(NVAR, n)
        gam_up = np.empty((6, n))
        sqrtg = np.empty(n)
        adm_fields_kernel(flat, gam_up, sqrtg)
        status = np.empty(n, dtype=np.int64)
        hydro.cons2prim_field(np.ascontiguousarray(flat[FLUID0:FLUID0 + 5]),
                              gam_up, sqrtg, self.eos_gamma,
                              self.vacuum_threshold, prim, status)
        if np.any(status == hydro.C2P_NO_CONVERGENCE):
            bad = int(np.argmax(status == hydro.C2P_NO_CONVERGENCE))
            raise SolverAbort("cons2prim failed to converge", t=self.t,
                              cell=np.unravel_index(bad, self._gshape3()))
        return prim

    # -- core RHS ---------------------------------------------------------
    def _pipeline(self, u, collect_jumps=False, dissipation=True,
                  eq_jumps=None, return_grad=False):
        """Semi-discrete right-hand side on the interior, (59, n_int)."""
        g = self.grid
        gsh = self._gshape3()
        n_all = int(np.prod(gsh))
        flat = u.reshape(NVAR, n_all)
        prim = self._primitives(u)
        lam = np.empty(n_all)
        flux = np.zeros((3, 5, n_all)) if self.matter else np.zeros((3, 5, 1))
        cell_aux_kernel(flat, prim, self.par, g.ndim, self.skip, lam,
                        flux if self.matter else np.zeros((3, 5, n_all)))
        if np.any(lam < 0.0):
            bad = int(np.argmax(lam < 0.0))
            raise SolverAbort("metric lost positivity", t=self.t,
                              cell=np.unravel_index(bad, gsh))
        self.lambda_max = float(lam.max())
        lam3 = lam.reshape(gsh)

        ish = g.shape3
        grad = np.zeros((NVAR, 3) + ish)
        rhs = np.zeros((NVAR,) + ish)
        jumps = [] if collect_jumps else None

        for ax in range(g.ndim):
            wl, wr = cweno.reconstruct_block(u, ax, self.degree, self.tables)
            sl = [slice(None)] * 4
            for other in range(g.ndim):
                if other != ax:
                    sl[1 + other] = slice(g.ghost, g.ghost + g.shape[other])
            wl = wl[tuple(sl)]
            wr = wr[tuple(sl)]
            n_rec = wl.shape[1 + ax]
            n_int = g.shape[ax]
            dx = g.dx[ax]

            def take(arr, lo, hi, a=ax):
                s = [slice(None)] * arr.ndim
                s[1 + a] = slice(lo, hi)
                return arr[tuple(s)]

            grad[:, ax] = (take(wr, 1, 1 + n_int) - take(wl, 1, 1 + n_int)) / dx

            wm = take(wr, 0, n_rec - 1)     # face value from the left cell
            wp = take(wl, 1, n_rec)         # face value from the right cell
            nf_shape = wm.shape[1:]
            wm2 = np.ascontiguousarray(wm.reshape(NVAR, -1))
            wp2 = np.ascontiguousarray(wp.reshape(NVAR, -1))
            if not self.cowling:
                dbl = np.empty_like(wm2)
                dterm_kernel(wm2, wp2, ax, self.par, dbl)
                dbl = dbl.reshape((NVAR,) + nf_shape)
                rhs += (take(dbl, 0, n_int) + take(dbl, 1, n_int + 1)) / dx

            if collect_jumps:
                jumps.append((wp2 - wm2).reshape((NVAR,) + nf_shape)[FLUID0:])

            if self.matter:
                fblk = np.ascontiguousarray(flux[ax].reshape((5,) + gsh))
                fl, fr = cweno.reconstruct_block(fblk, ax, self.degree, self.tables)
                fl = fl[tuple(sl)]
                fr = fr[tuple(sl)]
                fhat = 0.5 * (take(fr, 0, n_rec - 1) + take(fl, 1, n_rec))
                if dissipation:
                    lam_i = lam3[tuple(sl[1:])]
                    lam_lo = take(lam_i[None], g.ghost - 1, g.ghost + n_int)[0]
                    lam_hi = take(lam_i[None], g.ghost, g.ghost + n_int + 1)[0]
                    lam_f = np.maximum(lam_lo, lam_hi)
                    dw = (wp2 - wm2).reshape((NVAR,) + nf_shape)[FLUID0:]
                    if eq_jumps is not None:
                        dw = dw - eq_jumps[ax]
                    fhat = fhat - 0.5 * lam_f[None] * dw
                rhs[FLUID0:] -= (take(fhat, 1, n_int + 1) - take(fhat, 0, n_int)) / dx

        n_tot = g.n_interior
        ui = np.ascontiguousarray(
            u[(slice(None),) + self._interior_slices()].reshape(NVAR, n_tot))
        gi = np.ascontiguousarray(grad.reshape(NVAR, 3, n_tot))
        prim_i = np.ascontiguousarray(
            prim.reshape((5,) + gsh)[(slice(None),) + self._interior_slices()]
            .reshape(5, n_tot))
        out = np.empty((NVAR, n_tot))
        center_rhs_kernel(ui, gi, prim_i, self.par, self.mask,
                          np.ascontiguousarray(self.zsrc), self.has_zsrc, out)
        total = rhs.reshape(NVAR, n_tot) + out
        total[:, self.mask] = 0.0
        if return_grad:
            return total, (ui, gi, prim_i)
        if collect_jumps:
            return total, jumps
        return total

    def rhs(self, u):
        """Semi-discrete RHS with the well-balanced subtraction applied."""
        if self.wb:
            return self._pipeline(u, eq_jumps=self.eq_face_jump) - self.eq_rhs
        return self._pipeline(u)

    # -- time stepping -----------------------------------------------------
    def max_dt(self):
        g = self.grid
        flat = self.u.reshape(NVAR, -1)
        prim = self._primitives(self.u)
        lam = np.empty(flat.shape[1])
        cell_aux_kernel(flat, prim, self.par, g.ndim, self.skip, lam,
                        np.zeros((3, 5, flat.shape[1])))
        lam_max = float(lam.max())
        if lam_max <= 0:
            lam_max = 1.0
        dt = self.cfl / sum(lam_max / g.dx[ax] for ax in range(g.ndim))
        if self.degree >= 6:
            dt *= min(g.dx) ** ((self.degree + 1) / 4.0 - 1.0)
        return dt

    def _stage_rhs(self, u):
        full = np.zeros((NVAR,) + self._gshape3())
        full[(slice(None),) + self._interior_slices()] = \
            self.rhs(u).reshape((NVAR,) + self.grid.shape3)
        return full

    def step(self, dt):
        u0 = self.u
        name = self.integrator
        if name == "ssprk3":
            k1 = self._stage_rhs(u0)
            u1 = u0 + dt * k1
            self._apply_bc(u1)
            k2 = self._stage_rhs(u1)
            u2 = 0.75 * u0 + 0.25 * (u1 + dt * k2)
            self._apply_bc(u2)
            k3 = self._stage_rhs(u2)
            un = u0 / 3.0 + 2.0 / 3.0 * (u2 + dt * k3)
        elif name == "rk4":
            k1 = self._stage_rhs(u0)
            u1 = u0 + 0.5 * dt * k1
            self._apply_bc(u1)
            k2 = self._stage_rhs(u1)
            u2 = u0 + 0.5 * dt * k2
            self._apply_bc(u2)
            k3 = self._stage_rhs(u2)
            u3 = u0 + dt * k3
            self._apply_bc(u3)
            k4 = self._stage_rhs(u3)
            un = u0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        elif name == "rk5":
            un = self._rk5(u0, dt)
        else:
            raise ValueError(f"unknown integrator {name!r}")
        self._apply_bc(un)
        self.u = un
        self.t += dt
        interior = un[(slice(None),) + self._interior_slices()]
        if not np.all(np.isfinite(interior)):
            bad = np.argwhere(~np.isfinite(interior))[0]
            raise SolverAbort("non-finite state after step", t=self.t,
                              cell=tuple(int(b) for b in bad))

    def _rk5(self, u0, dt):
        # Fehlberg's 6-stage tableau with the fifth-order weights
        a = [
            [],
            [0.25],
            [3 / 32, 9 / 32],
            [1932 / 2197, -7200 / 2197, 7296 / 2197],
            [439 / 216, -8.0, 3680 / 513, -845 / 4104],
            [-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40],
        ]
        b = [16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55]
        ks = []
        for i in range(6):
            ui = u0.copy()
            for j, aij in enumerate(a[i]):
                if aij != 0.0:
                    ui = ui + dt * aij * ks[j]
            if i > 0:
                self._apply_bc(ui)
            ks.append(self._stage_rhs(ui))
        un = u0.copy()
        for bi, ki in zip(b, ks):
            if bi != 0.0:
                un = un + dt * bi * ki
        return un

    def advance(self, t_end, max_steps=10 ** 9, callback=None):
        steps = 0
        while self.t < t_end - 1e-12 and steps < max_steps:
            dt = min(self.max_dt(), t_end - self.t)
            self.step(dt)
            steps += 1
            if callback is not None:
                callback(self, dt)
        return steps

    # -- diagnostics --------------------------------------------------------
    def interior_state(self):
        return self.u[(slice(None),) + self._interior_slices()]

    def constraints(self):
        """(M (4,n), C (4,n), C3 (30,n)) over interior cells."""
        kw = dict(return_grad=True)
        if self.wb:
            kw["eq_jumps"] = self.eq_face_jump
        rhs, (ui, gi, prim_i) = self._pipeline(self.u, **kw)
        if self.wb:
            rhs = rhs - self.eq_rhs
        n = ui.shape[1]
        m = np.empty((4, n))
        c = np.empty((4, n))
        c3 = np.empty((30, n))
        constraints_kernel(ui, gi, np.ascontiguousarray(rhs), prim_i, self.par,
                           self.mask, m, c, c3)
        return m, c, c3


def excision_box_mask(grid, center, half_edge):
    """Boolean mask (interior cells) of a cube |x_i - c_i| <= half_edge."""
    xi = grid.cell_centers(ghosted=False)
    inside = np.ones(xi.shape[1], dtype=bool)
    for a in range(grid.ndim):
        inside &= np.abs(xi[a] - center[a]) <= half_edge
    return inside
