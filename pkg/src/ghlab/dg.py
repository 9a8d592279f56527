"""ADER discontinuous Galerkin scheme on uniform quadrilateral meshes.

Modal orthonormal Legendre tensor bases (graded total degree <= N) on the
reference square, an element-local space-time predictor solved by Picard
iteration, and a path-conservative one-step corrector with Rusanov-type
fluctuations. The well-balanced variant evolves fluctuation coefficients
against a projected equilibrium; the plain scheme is the same pipeline
with a zero equilibrium.

Coordinates may be curvilinear (the chart enters only through the PDE
fields); elements are rectangles of one uniform (dx, dy).
"""

import numpy as np
from numba import njit, prange

from . import gh, hydro
from . import initial_data as idt
from . import tensors as tk
from .state import FLUID0, NVAR

PERIODIC = "periodic"
DIRICHLET = "dirichlet-exact"


def count_modes(degree, ndim):
    """L(N, d) = prod_{m=1..d}(N+m) / d!"""
    out = 1.0
    for m in range(1, ndim + 1):
        out *= degree + m
        out /= m
    return int(round(out))


def gauss01(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _legendre01(m):
    """Orthonormal shifted Legendre on [0,1] as a Polynomial."""
    from numpy.polynomial import legendre as npleg
    c = np.zeros(m + 1)
    c[m] = 1.0
    pol = npleg.Legendre(c, domain=[0.0, 1.0])
    return np.sqrt(2.0 * m + 1.0) * pol.convert(kind=np.polynomial.polynomial.Polynomial)


class ModalBasis:
    """Graded orthonormal tensor basis and all reference-element matrices."""

    def __init__(self, degree, ndim=2):
        if ndim not in (1, 2):
            raise ValueError("DG basis supports ndim in {1, 2}")
        self.degree = degree
        self.ndim = ndim
        n1 = degree + 1
        self.n1 = n1
        self.space_modes = [idx for idx in self._graded(ndim)]
        self.st_modes = [idx for idx in self._graded(ndim + 1)]
        self.n_space = len(self.space_modes)
        self.n_st = len(self.st_modes)
        assert self.n_space == count_modes(degree, ndim)
        assert self.n_st == count_modes(degree, ndim + 1)

        self._p = [_legendre01(m) for m in range(n1)]
        self._dp = [pol.deriv() for pol in self._p]
        self.qx, self.qw = gauss01(n1)
        self._build_matrices()

    def _graded(self, d):
        rng = range(self.degree + 1)
        if d == 1:
            for m in rng:
                yield (m,)
        elif d == 2:
            for tot in rng:
                for mx in range(tot, -1, -1):
                    yield (mx, tot - mx)
        else:
            for tot in rng:
                for mx in range(tot, -1, -1):
                    for my in range(tot - mx, -1, -1):
                        yield (mx, my, tot - mx - my)

    # basis evaluation helpers (space-time index -> product of 1D factors)
    def _eval_st(self, mode, xi, eta, tau):
        if self.ndim == 1:
            mx, mt = mode
            return self._p[mx](xi) * self._p[mt](tau)
        mx, my, mt = mode
        return self._p[mx](xi) * self._p[my](eta) * self._p[mt](tau)

    def _eval_st_d(self, mode, xi, eta, tau, wrt):
        if self.ndim == 1:
            mx, mt = mode
            fs = [self._p[mx](xi), self._p[mt](tau)]
            ds = [self._dp[mx](xi), self._dp[mt](tau)]
            which = {"xi": 0, "tau": 1}[wrt]
            fs[which] = ds[which]
            return fs[0] * fs[1]
        mx, my, mt = mode
        fs = [self._p[mx](xi), self._p[my](eta), self._p[mt](tau)]
        ds = [self._dp[mx](xi), self._dp[my](eta), self._dp[mt](tau)]
        which = {"xi": 0, "eta": 1, "tau": 2}[wrt]
        fs[which] = ds[which]
        return fs[0] * fs[1] * fs[2]

    def _eval_space(self, mode, xi, eta):
        if self.ndim == 1:
            return self._p[mode[0]](xi)
        return self._p[mode[0]](xi) * self._p[mode[1]](eta)

    def _eval_space_d(self, mode, xi, eta, wrt):
        if self.ndim == 1:
            return self._dp[mode[0]](xi)
        if wrt == "xi":
            return self._dp[mode[0]](xi) * self._p[mode[1]](eta)
        return self._p[mode[0]](xi) * self._dp[mode[1]](eta)

    def _build_matrices(self):
        n1 = self.n1
        q, w = self.qx, self.qw
        nd = self.ndim
        # space-time volume quadrature (tensor product)
        if nd == 1:
            pts = [(xi, 0.0, tau) for xi in q for tau in q]
            wts = [wx * wt for wx in w for wt in w]
        else:
            pts = [(xi, eta, tau) for xi in q for eta in q for tau in q]
            wts = [wx * wy * wt for wx in w for wy in w for wt in w]
        self.st_pts = np.array(pts)
        self.st_w = np.array(wts)
        nq = len(pts)
        Q = self.n_st
        NS = self.n_space

        self.TH = np.empty((Q, nq))
        self.TH_xi = np.empty((Q, nq))
        self.TH_eta = np.zeros((Q, nq))
        self.TH_tau = np.empty((Q, nq))
        for l, mode in enumerate(self.st_modes):
            for p, (xi, eta, tau) in enumerate(pts):
                self.TH[l, p] = self._eval_st(mode, xi, eta, tau)
                self.TH_xi[l, p] = self._eval_st_d(mode, xi, eta, tau, "xi")
                if nd == 2:
                    self.TH_eta[l, p] = self._eval_st_d(mode, xi, eta, tau, "eta")
                self.TH_tau[l, p] = self._eval_st_d(mode, xi, eta, tau, "tau")

        self.PHI_st = np.empty((NS, nq))
        self.PHI_st_xi = np.empty((NS, nq))
        self.PHI_st_eta = np.zeros((NS, nq))
        for k, mode in enumerate(self.space_modes):
            for p, (xi, eta, tau) in enumerate(pts):
                self.PHI_st[k, p] = self._eval_space(mode, xi, eta)
                self.PHI_st_xi[k, p] = self._eval_space_d(mode, xi, eta, "xi")
                if nd == 2:
                    self.PHI_st_eta[k, p] = self._eval_space_d(mode, xi, eta, "eta")

        # K1[k,l] = int_{tau=1} th_k th_l dA - int dtau th_k th_l dV
        k1 = np.zeros((Q, Q))
        if nd == 1:
            area_pts = [(xi, 0.0) for xi in q]
            area_w = list(w)
        else:
            area_pts = [(xi, eta) for xi in q for eta in q]
            area_w = [wx * wy for wx in w for wy in w]
        for k in range(Q):
            for l in range(Q):
                s = 0.0
                for (xi, eta), ww in zip(area_pts, area_w):
                    s += ww * self._eval_st(self.st_modes[k], xi, eta, 1.0) \
                        * self._eval_st(self.st_modes[l], xi, eta, 1.0)
                s -= np.sum(self.st_w * self.TH_tau[k] * self.TH[l])
                k1[k, l] = s
        self.K1 = k1
        self.K1INV = np.linalg.inv(k1)

        # F0[k, m] = int th_k(.,0) phi_m dA
        f0 = np.zeros((Q, NS))
        for k in range(Q):
            for m in range(NS):
                s = 0.0
                for (xi, eta), ww in zip(area_pts, area_w):
                    s += ww * self._eval_st(self.st_modes[k], xi, eta, 0.0) \
                        * self._eval_space(self.space_modes[m], xi, eta)
                f0[k, m] = s
        self.F0 = f0

        # stiffness for the discrete flux divergence
        self.KXI = (self.TH_xi * self.st_w) @ self.TH.T      # int dxi th_k th_l
        self.KETA = (self.TH_eta * self.st_w) @ self.TH.T
        # projection: Fhat_l = sum_q w_q th_l(q) F(q)
        self.PROJ = self.TH * self.st_w

        # lift: spatial mode -> space-time mode with zero time degree
        lift = np.zeros(NS, dtype=np.int64)
        for k, smode in enumerate(self.space_modes):
            target = tuple(smode) + (0,)
            lift[k] = self.st_modes.index(target)
        self.LIFT = lift

        # faces: 0 xi=0, 1 xi=1, 2 eta=0, 3 eta=1; face-ST points ordered
        # tau-major then face coordinate, identically on both sides
        nfaces = 2 * nd
        nqf = n1 * n1 if nd == 2 else n1
        self.n_faces = nfaces
        self.nqf = nqf
        self.THF = np.zeros((nfaces, nqf, Q))
        self.PHIF = np.zeros((nfaces, nqf, NS))
        self.WF = np.zeros((nfaces, nqf))
        for f in range(nfaces):
            for s, tau in enumerate(q):
                prange_pts = q if nd == 2 else [0.0]
                pws = w if nd == 2 else [1.0]
                for p, (c, cw) in enumerate(zip(prange_pts, pws)):
                    if f == 0:
                        xi, eta = 0.0, c
                    elif f == 1:
                        xi, eta = 1.0, c
                    elif f == 2:
                        xi, eta = c, 0.0
                    else:
                        xi, eta = c, 1.0
                    qf = s * len(prange_pts) + p
                    self.WF[f, qf] = w[s] * cw
                    for l in range(Q):
                        self.THF[f, qf, l] = self._eval_st(self.st_modes[l], xi, eta, tau)
                    for k in range(NS):
                        self.PHIF[f, qf, k] = self._eval_space(self.space_modes[k], xi, eta)

        # spatial quadrature for projections/norms (higher order for setup)
        qs, ws = gauss01(n1 + 2)
        if nd == 1:
            spts = [(xi, 0.0) for xi in qs]
            sw = list(ws)
        else:
            spts = [(xi, eta) for xi in qs for eta in qs]
            sw = [wx * wy for wx in ws for wy in ws]
        self.proj_pts = np.array(spts)
        self.proj_w = np.array(sw)
        self.PHI_proj = np.array([[self._eval_space(m, xi, eta) for (xi, eta) in spts]
                                  for m in self.space_modes])
        # basis-order spatial quadrature (norms, consistent with the scheme)
        if nd == 1:
            bpts = [(xi, 0.0) for xi in q]
            bw = list(w)
        else:
            bpts = [(xi, eta) for xi in q for eta in q]
            bw = [wx * wy for wx in w for wy in w]
        self.norm_pts = np.array(bpts)
        self.norm_w = np.array(bw)
        self.PHI_norm = np.array([[self._eval_space(m, xi, eta) for (xi, eta) in bpts]
                                  for m in self.space_modes])
        self.PHI_norm_xi = np.array([[self._eval_space_d(m, xi, eta, "xi") for (xi, eta) in bpts]
                                     for m in self.space_modes])
        self.PHI_norm_eta = np.array(
            [[self._eval_space_d(m, xi, eta, "eta") if nd == 2 else 0.0
              for (xi, eta) in bpts] for m in self.space_modes])


_BASES = {}


def build_basis(degree, ndim=2):
    key = (degree, ndim)
    if key not in _BASES:
        if degree not in (1, 2, 3, 4):
            raise ValueError("DG degree must be 1..4")
        _BASES[key] = ModalBasis(degree, ndim)
    return _BASES[key]


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _c2p_inline(q5, g10, par, prim):
    adm = np.empty(tk.ADM_LEN)
    if tk.adm_from_g(g10, adm) != 0:
        return 1
    gam_up = adm[tk.ADM_GAMU:tk.ADM_GAMU + 6]
    st = hydro.cons2prim_point(q5, gam_up, adm[tk.ADM_SQRTG],
                               par[gh.PAR_EOS_GAMMA], par[gh.PAR_VACUUM], prim)
    if st == hydro.C2P_NO_CONVERGENCE:
        return 2
    return 0


@njit(cache=True)
def _point_ops(qq, dq_dx, dq_dy, par, matter, gvol, fx, fy):
    """G = S - B.grad q and fluid fluxes at one space-time point."""
    grad = np.empty((NVAR, 3))
    for k in range(NVAR):
        grad[k, 0] = dq_dx[k]
        grad[k, 1] = dq_dy[k]
        grad[k, 2] = 0.0
    prim = np.zeros(5)
    if matter:
        st = _c2p_inline(qq[FLUID0:FLUID0 + 5], qq[:10], par, prim)
        if st != 0:
            return 1
    st = gh.gh_rhs_point(qq, grad, prim, par, gvol)
    if st != 0:
        return 1
    for k in range(NVAR):
        fx[k] = 0.0
        fy[k] = 0.0
    if matter:
        adm = np.empty(tk.ADM_LEN)
        tk.adm_from_g(qq[:10], adm)
        ff = np.empty(5)
        hydro.euler_flux_point(prim, qq[FLUID0:FLUID0 + 5], adm, 0, ff)
        for k in range(5):
            fx[FLUID0 + k] = ff[k]
        hydro.euler_flux_point(prim, qq[FLUID0:FLUID0 + 5], adm, 1, ff)
        for k in range(5):
            fy[FLUID0 + k] = ff[k]
    return 0


@njit(cache=True)
def _volume_terms(qhat, th, th_xi, th_eta, proj, kxi, keta, stw,
                  dt, dx, dy, par, matter, out):
    """Projected predictor volume operator: out[k] = int th_k (S - B.grad q)
    - stiffness(flux)/dx terms, per unit (reference volume). Returns 0/1."""
    Q = qhat.shape[0]
    nq = th.shape[1]
    qpts = np.zeros((nq, NVAR))
    dxp = np.zeros((nq, NVAR))
    dyp = np.zeros((nq, NVAR))
    for p in range(nq):
        for k in range(NVAR):
            s = 0.0
            sx = 0.0
            sy = 0.0
            for l in range(Q):
                s += th[l, p] * qhat[l, k]
                sx += th_xi[l, p] * qhat[l, k]
                sy += th_eta[l, p] * qhat[l, k]
            qpts[p, k] = s
            dxp[p, k] = sx / dx
            dyp[p, k] = sy / dy
    gsum = np.zeros((Q, NVAR))
    fxh = np.zeros((Q, NVAR))
    fyh = np.zeros((Q, NVAR))
    gv = np.empty(NVAR)
    fx = np.empty(NVAR)
    fy = np.empty(NVAR)
    for p in range(nq):
        st = _point_ops(qpts[p], dxp[p], dyp[p], par, matter, gv, fx, fy)
        if st != 0:
            return 1
        for l in range(Q):
            wth = proj[l, p]
            for k in range(NVAR):
                gsum[l, k] += wth * gv[k]
                fxh[l, k] += wth * fx[k]
                fyh[l, k] += wth * fy[k]
    for l in range(Q):
        for k in range(NVAR):
            acc = gsum[l, k]
            if matter:
                for m in range(Q):
                    acc -= (kxi[l, m] * fxh[m, k] / dx + keta[l, m] * fyh[m, k] / dy)
            out[l, k] = acc
    return 0


@njit(cache=True, parallel=True)
def predictor_kernel(uhat, eqhat_lift, voln_eq, th, th_xi, th_eta, proj,
                     kxi, keta, stw, k1inv, f0, lift, dt, dx, dy, par,
                     matter, wb, max_iter, tol, qtot, status):
    """Element-local Picard iteration for the (fluctuation) predictor.

    uhat: (ne, NS, 59) fluctuation coefficients at t^n; eqhat_lift:
    (ne, Q, 59) constant-in-time lift of the equilibrium; voln_eq: the
    precomputed volume operator at the equilibrium; qtot out: (ne, Q, 59)
    total predictor lift(u_e) + q_f.
    """
    ne, NS = uhat.shape[0], uhat.shape[1]
    Q = k1inv.shape[0]
    for e in prange(ne):
        qf = np.zeros((Q, NVAR))
        # initial guess: constant-in-time lift of the fluctuation data
        for k in range(NS):
            for c in range(NVAR):
                qf[lift[k], c] = uhat[e, k, c]
        f0w = np.zeros((Q, NVAR))
        for l in range(Q):
            for k in range(NS):
                for c in range(NVAR):
                    f0w[l, c] += f0[l, k] * uhat[e, k, c]
        qwork = np.empty((Q, NVAR))
        voln = np.empty((Q, NVAR))
        ok = 0
        for it in range(max_iter):
            for l in range(Q):
                for c in range(NVAR):
                    qwork[l, c] = eqhat_lift[e, l, c] + qf[l, c]
            st = _volume_terms(qwork, th, th_xi, th_eta, proj, kxi, keta, stw,
                               dt, dx, dy, par, matter, voln)
            if st != 0:
                ok = 1
                break
            # rhs = F0 w_f + dt (voln(q) - voln_eq)
            res = 0.0
            scale = 0.0
            for l in range(Q):
                for c in range(NVAR):
                    rhs_lc = f0w[l, c] + dt * (voln[l, c] - voln_eq[e, l, c])
                    qwork[l, c] = rhs_lc
            for l in range(Q):
                for c in range(NVAR):
                    s = 0.0
                    for m in range(Q):
                        s += k1inv[l, m] * qwork[m, c]
                    d = s - qf[l, c]
                    if abs(d) > res:
                        res = abs(d)
                    if abs(s) > scale:
                        scale = abs(s)
                    voln[l, c] = s          # reuse as staging
            for l in range(Q):
                for c in range(NVAR):
                    qf[l, c] = voln[l, c]
            if res <= tol * (scale + 1.0):
                break
        status[e] = ok
        for l in range(Q):
            for c in range(NVAR):
                qtot[e, l, c] = eqhat_lift[e, l, c] + qf[l, c]


@njit(cache=True, parallel=True)
def trace_kernel(qtot, thf, traces):
    """Evaluate predictor traces at all face space-time points."""
    ne = qtot.shape[0]
    nfaces, nqf, Q = thf.shape
    for e in prange(ne):
        for f in range(nfaces):
            for p in range(nqf):
                for c in range(NVAR):
                    s = 0.0
                    for l in range(Q):
                        s += thf[f, p, l] * qtot[e, l, c]
                    traces[e, f, p, c] = s


@njit(cache=True)
def _fluct_parts(qm, qp, axis, par, matter, dc, dv):
    """Central fluctuation Dc = (F(q+)-F(q-))/2 . n + Bbar.n (q+-q-)/2 and
    the viscosity direction vector (q+ - q-) (dv, scaled by smax later)."""
    # 3-point Gauss-Legendre on the straight-line path
    gl_x = np.array([0.5 - np.sqrt(15.0) / 10.0, 0.5, 0.5 + np.sqrt(15.0) / 10.0])
    gl_w = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])
    dq = np.empty(NVAR)
    for k in range(NVAR):
        dq[k] = qp[k] - qm[k]
        dc[k] = 0.0
        dv[k] = dq[k]
    psi = np.empty(NVAR)
    gp = np.empty(NVAR)
    for m in range(3):
        for k in range(NVAR):
            psi[k] = qm[k] + gl_x[m] * dq[k]
        st = gh.gh_grad_part_axis(psi, dq, axis, par, gp)
        if st != 0:
            return 1
        for k in range(NVAR):
            dc[k] -= 0.5 * gl_w[m] * gp[k]     # gradpart = -B.dq
    if matter:
        prim = np.zeros(5)
        adm = np.empty(tk.ADM_LEN)
        ff = np.empty(5)
        for side in range(2):
            qq = qm if side == 0 else qp
            sgn = -0.5 if side == 0 else 0.5
            if _c2p_inline(qq[FLUID0:FLUID0 + 5], qq[:10], par, prim) != 0:
                return 1
            if tk.adm_from_g(qq[:10], adm) != 0:
                return 1
            hydro.euler_flux_point(prim, qq[FLUID0:FLUID0 + 5], adm, axis, ff)
            for k in range(5):
                dc[FLUID0 + k] += sgn * ff[k]
    return 0


@njit(cache=True)
def _smax_pair(qm, qp, par):
    pm = np.zeros(5)
    pp = np.zeros(5)
    if par[gh.PAR_MATTER] != 0.0:
        _c2p_inline(qm[FLUID0:FLUID0 + 5], qm[:10], par, pm)
        _c2p_inline(qp[FLUID0:FLUID0 + 5], qp[:10], par, pp)
    s1 = gh.gh_max_speed(qm, pm, par)
    s2 = gh.gh_max_speed(qp, pp, par)
    return max(s1, s2)


@njit(cache=True, parallel=True)
def face_kernel(trm, trp, eqm, eqp, axis, par, matter, wb, wf, phif_m, phif_p,
                out_m, out_p, status):
    """Per face: projected fluctuation contributions for both elements.

    trm/trp: (nf, nqf, 59) one-sided traces; eqm/eqp: equilibrium traces
    (ignored unless wb). out_m/out_p: (nf, NS, 59) receive
    sum_q w_q phi_k (Dc - Dc_e -+ s (dq - dq_e)/2) for the minus/plus
    elements (minus element: outward normal along +axis).
    """
    nf, nqf = trm.shape[0], trm.shape[1]
    NS = phif_m.shape[1]
    for fidx in prange(nf):
        dc = np.empty(NVAR)
        dv = np.empty(NVAR)
        dce = np.zeros(NVAR)
        dve = np.zeros(NVAR)
        bad = 0
        for k in range(NS):
            for c in range(NVAR):
                out_m[fidx, k, c] = 0.0
                out_p[fidx, k, c] = 0.0
        for p in range(nqf):
            qm = trm[fidx, p]
            qp = trp[fidx, p]
            if _fluct_parts(qm, qp, axis, par, matter, dc, dv) != 0:
                bad = 1
                break
            smax = _smax_pair(qm, qp, par)
            if wb:
                if _fluct_parts(eqm[fidx, p], eqp[fidx, p], axis, par, matter,
                                dce, dve) != 0:
                    bad = 1
                    break
            for c in range(NVAR):
                central = dc[c] - dce[c]
                visc = 0.5 * smax * (dv[c] - dve[c])
                dm = central - visc
                dp = central + visc
                wq = wf[p]
                for k in range(NS):
                    out_m[fidx, k, c] += wq * phif_m[p, k] * dm
                    out_p[fidx, k, c] += wq * phif_p[p, k] * dp
        status[fidx] = bad


@njit(cache=True, parallel=True)
def corrector_volume_kernel(qtot, eq_vol, th, th_xi, th_eta, phi_st,
                            phi_st_xi, phi_st_eta, stw, dx, dy, par, matter,
                            out, status):
    """Projected corrector volume terms minus the equilibrium ones.

    out[e, k] = sum_q w_q [dphi_k/dx Fx + dphi_k/dy Fy + phi_k (S - B grad q)]
    - eq_vol[e, k].
    """
    ne = qtot.shape[0]
    Q = qtot.shape[1]
    NS = phi_st.shape[0]
    nq = th.shape[1]
    for e in prange(ne):
        gv = np.empty(NVAR)
        fx = np.empty(NVAR)
        fy = np.empty(NVAR)
        qq = np.empty(NVAR)
        dxq = np.empty(NVAR)
        dyq = np.empty(NVAR)
        acc = np.zeros((NS, NVAR))
        bad = 0
        for p in range(nq):
            for c in range(NVAR):
                s = 0.0
                sx = 0.0
                sy = 0.0
                for l in range(Q):
                    s += th[l, p] * qtot[e, l, c]
                    sx += th_xi[l, p] * qtot[e, l, c]
                    sy += th_eta[l, p] * qtot[e, l, c]
                qq[c] = s
                dxq[c] = sx / dx
                dyq[c] = sy / dy
            if _point_ops(qq, dxq, dyq, par, matter, gv, fx, fy) != 0:
                bad = 1
                break
            wq = stw[p]
            for k in range(NS):
                for c in range(NVAR):
                    acc[k, c] += wq * (phi_st_xi[k, p] * fx[c] / dx
                                       + phi_st_eta[k, p] * fy[c] / dy
                                       + phi_st[k, p] * gv[c])
        status[e] = bad
        for k in range(NS):
            for c in range(NVAR):
                out[e, k, c] = acc[k, c] - eq_vol[e, k, c]


# ---------------------------------------------------------------------------
# mesh and solver
# ---------------------------------------------------------------------------

class QuadMesh:
    """Uniform rectangular element mesh; elements flattened as e = i*ny + j."""

    def __init__(self, nx, ny, bounds, boundary=None):
        self.nx = nx
        self.ny = ny
        self.bounds = tuple(tuple(b) for b in bounds)
        self.boundary = tuple(boundary) if boundary else (PERIODIC, PERIODIC)
        (x0, x1), (y0, y1) = self.bounds
        self.dx = (x1 - x0) / nx
        self.dy = (y1 - y0) / ny
        self.n_elements = nx * ny

    def element_origin(self, i, j):
        return (self.bounds[0][0] + i * self.dx,
                self.bounds[1][0] + j * self.dy)

    def circumdiameter(self):
        return float(np.hypot(self.dx, self.dy))


class ADERDGSolver:
    """One-step ADER-DG evolution of the GH system on a quad mesh."""

    def __init__(self, mesh, degree, params, sampler, eos=None, *,
                 wb=False, cfl=0.9, equilibrium_sampler=None, gauge=None,
                 picard_tol=1e-12):
        self.mesh = mesh
        self.degree = degree
        self.par = params
        self.sampler = sampler
        self.eos = eos
        self.wb = wb
        self.cfl = cfl
        self.gauge = gauge
        self.picard_tol = picard_tol
        self.basis = build_basis(degree, 2)
        self.matter = params[gh.PAR_MATTER] != 0.0
        self.t = 0.0

        b = self.basis
        ne = mesh.n_elements
        self.uhat_e = np.zeros((ne, b.n_space, NVAR))
        if wb:
            eq = equilibrium_sampler or sampler
            self.eq_sampler = eq
            self.uhat_e = self._project(eq)
        else:
            self.eq_sampler = None
        uhat0 = self._project(sampler)
        self.uhat_f = uhat0 - self.uhat_e

        # constant-in-time lift of the equilibrium coefficients
        self.eq_lift = np.zeros((ne, b.n_st, NVAR))
        for k in range(b.n_space):
            self.eq_lift[:, b.LIFT[k], :] = self.uhat_e[:, k, :]
        self.eq_lift = np.ascontiguousarray(self.eq_lift)

        # boundary traces (static) for non-periodic axes
        self._setup_boundary_traces()

        # static equilibrium pieces (zeros when not well-balanced: the plain
        # scheme is the same pipeline with a vanishing equilibrium)
        self.voln_eq = np.zeros((ne, b.n_st, NVAR))
        self.eq_corr_vol = np.zeros((ne, b.n_space, NVAR))
        self.traces_e = np.zeros((ne, b.n_faces, b.nqf, NVAR))
        if wb:
            st = np.zeros(ne, dtype=np.int64)
            _eq_volume_driver(self.eq_lift, b.TH, b.TH_xi, b.TH_eta, b.PROJ,
                              b.KXI, b.KETA, b.st_w, mesh.dx, mesh.dy, self.par,
                              self.matter, self.voln_eq, st)
            if np.any(st != 0):
                raise RuntimeError("equilibrium volume operator failed")
            st = np.zeros(ne, dtype=np.int64)
            corrector_volume_kernel(self.eq_lift, np.zeros_like(self.eq_corr_vol),
                                    b.TH, b.TH_xi, b.TH_eta, b.PHI_st, b.PHI_st_xi,
                                    b.PHI_st_eta, b.st_w, mesh.dx, mesh.dy,
                                    self.par, self.matter, self.eq_corr_vol, st)
            if np.any(st != 0):
                raise RuntimeError("equilibrium corrector volume failed")
            trace_kernel(self.eq_lift, b.THF, self.traces_e)

    # -- projection -------------------------------------------------------
    def _element_points(self, ref_pts):
        """Physical coordinates (3, ne*nq) of reference points in every element."""
        m = self.mesh
        nq = len(ref_pts)
        xs = np.empty((3, m.n_elements * nq))
        idx = 0
        for i in range(m.nx):
            for j in range(m.ny):
                x0, y0 = m.element_origin(i, j)
                for (xi, eta) in ref_pts:
                    xs[0, idx] = x0 + xi * m.dx
                    xs[1, idx] = y0 + eta * m.dy
                    xs[2, idx] = 0.0
                    idx += 1
        return xs

    def _project(self, sampler):
        b = self.basis
        xs = self._element_points(b.proj_pts)
        u = idt.state_at(sampler, 0.0, xs, eos=self.eos, gauge=self.gauge)
        u = u.reshape(NVAR, self.mesh.n_elements, len(b.proj_pts))
        # uhat[e, k] = sum_q w_q phi_k(q) u(q)
        return np.ascontiguousarray(
            np.einsum("kq,q,ceq->ekc", b.PHI_proj, b.proj_w, u))

    def _setup_boundary_traces(self):
        b = self.basis
        m = self.mesh
        n1 = b.n1
        q, _ = gauss01(n1)
        self.bdry = {}
        for ax, kind in enumerate(m.boundary):
            if kind == PERIODIC:
                continue
            for side in (0, 1):
                n_other = m.ny if ax == 0 else m.nx
                pts = np.empty((3, n_other * b.nqf))
                idx = 0
                for j in range(n_other):
                    for s in range(n1):          # tau index (static data)
                        for p in range(n1):      # face coordinate index
                            c = q[p]
                            if ax == 0:
                                xx = m.bounds[0][side]
                                yy = m.bounds[1][0] + (j + c) * m.dy
                            else:
                                xx = m.bounds[0][0] + (j + c) * m.dx
                                yy = m.bounds[1][side]
                            pts[0, idx] = xx
                            pts[1, idx] = yy
                            pts[2, idx] = 0.0
                            idx += 1
                tr = idt.state_at(self.sampler, 0.0, pts, eos=self.eos,
                                  gauge=self.gauge)
                tr = np.ascontiguousarray(
                    tr.reshape(NVAR, n_other, b.nqf).transpose(1, 2, 0))
                if self.wb:
                    tre = idt.state_at(self.eq_sampler, 0.0, pts, eos=self.eos,
                                       gauge=self.gauge)
                    tre = np.ascontiguousarray(
                        tre.reshape(NVAR, n_other, b.nqf).transpose(1, 2, 0))
                else:
                    tre = np.zeros_like(tr)
                self.bdry[(ax, side)] = (tr, tre)

    # -- stepping ----------------------------------------------------------
    def max_dt(self):
        means = np.ascontiguousarray(self.state_coefficients()[:, 0, :].T)
        n = means.shape[1]
        prim = np.zeros((5, n))
        if self.matter:
            from .fd_solver import adm_fields_kernel
            gam_up = np.empty((6, n))
            sqrtg = np.empty(n)
            adm_fields_kernel(means, gam_up, sqrtg)
            status = np.empty(n, dtype=np.int64)
            hydro.cons2prim_field(np.ascontiguousarray(means[FLUID0:FLUID0 + 5]),
                                  gam_up, sqrtg, self.par[gh.PAR_EOS_GAMMA],
                                  self.par[gh.PAR_VACUUM], prim, status)
        lam = _lambda_means(means, prim, self.par)
        h = min(self.mesh.dx, self.mesh.dy)
        return self.cfl * h / ((2 * self.degree + 1) * max(lam, 1e-30))

    def step(self, dt):
        b = self.basis
        m = self.mesh
        ne = m.n_elements
        qtot = np.empty((ne, b.n_st, NVAR))
        status = np.zeros(ne, dtype=np.int64)
        predictor_kernel(np.ascontiguousarray(self.uhat_f), self.eq_lift,
                         self.voln_eq, b.TH, b.TH_xi, b.TH_eta, b.PROJ,
                         b.KXI, b.KETA, b.st_w, b.K1INV, b.F0, b.LIFT,
                         dt, m.dx, m.dy, self.par, self.matter, self.wb,
                         2 * (self.degree + 1), self.picard_tol, qtot, status)
        if np.any(status != 0):
            raise RuntimeError(f"predictor failed in element {int(np.argmax(status))}")
        traces = np.empty((ne, b.n_faces, b.nqf, NVAR))
        trace_kernel(qtot, b.THF, traces)

        duf = np.zeros((ne, b.n_space, NVAR))
        tr5 = traces.reshape(m.nx, m.ny, b.n_faces, b.nqf, NVAR)
        te5 = self.traces_e.reshape(m.nx, m.ny, b.n_faces, b.nqf, NVAR)
        du4 = duf.reshape(m.nx, m.ny, b.n_space, NVAR)

        for ax in range(2):
            per = m.boundary[ax] == PERIODIC
            if ax == 0:
                nfa, nfb = (m.nx if per else m.nx + 1), m.ny
            else:
                nfa, nfb = m.nx, (m.ny if per else m.ny + 1)
            nf = nfa * nfb
            fm, fp = (0, 1) if ax == 0 else (2, 3)
            trm = np.empty((nfa, nfb, b.nqf, NVAR))
            trp = np.empty((nfa, nfb, b.nqf, NVAR))
            eqm = np.empty((nfa, nfb, b.nqf, NVAR))
            eqp = np.empty((nfa, nfb, b.nqf, NVAR))
            if per:
                trm[:] = np.roll(tr5[:, :, fp], 1, axis=ax)
                trp[:] = tr5[:, :, fm]
                eqm[:] = np.roll(te5[:, :, fp], 1, axis=ax)
                eqp[:] = te5[:, :, fm]
            else:
                t_lo, te_lo = self.bdry[(ax, 0)]
                t_hi, te_hi = self.bdry[(ax, 1)]
                if ax == 0:
                    trm[1:] = tr5[:, :, fp]
                    trm[0] = t_lo
                    trp[:-1] = tr5[:, :, fm]
                    trp[-1] = t_hi
                    eqm[1:] = te5[:, :, fp]
                    eqm[0] = te_lo
                    eqp[:-1] = te5[:, :, fm]
                    eqp[-1] = te_hi
                else:
                    trm[:, 1:] = tr5[:, :, fp]
                    trm[:, 0] = t_lo
                    trp[:, :-1] = tr5[:, :, fm]
                    trp[:, -1] = t_hi
                    eqm[:, 1:] = te5[:, :, fp]
                    eqm[:, 0] = te_lo
                    eqp[:, :-1] = te5[:, :, fm]
                    eqp[:, -1] = te_hi
            out_m = np.empty((nf, b.n_space, NVAR))
            out_p = np.empty((nf, b.n_space, NVAR))
            fstat = np.zeros(nf, dtype=np.int64)
            face_kernel(np.ascontiguousarray(trm.reshape(nf, b.nqf, NVAR)),
                        np.ascontiguousarray(trp.reshape(nf, b.nqf, NVAR)),
                        np.ascontiguousarray(eqm.reshape(nf, b.nqf, NVAR)),
                        np.ascontiguousarray(eqp.reshape(nf, b.nqf, NVAR)),
                        ax, self.par, self.matter, self.wb,
                        np.ascontiguousarray(b.WF[fm]),
                        np.ascontiguousarray(b.PHIF[fp]),
                        np.ascontiguousarray(b.PHIF[fm]),
                        out_m, out_p, fstat)
            if np.any(fstat != 0):
                raise RuntimeError("face fluctuation failed")
            d = m.dx if ax == 0 else m.dy
            om = out_m.reshape(nfa, nfb, b.n_space, NVAR)
            op = out_p.reshape(nfa, nfb, b.n_space, NVAR)
            if per:
                du4 -= dt / d * (op + np.roll(om, -1, axis=ax))
            elif ax == 0:
                du4 -= dt / d * (op[:-1] + om[1:])
            else:
                du4 -= dt / d * (op[:, :-1] + om[:, 1:])

        vol = np.empty((ne, b.n_space, NVAR))
        vstat = np.zeros(ne, dtype=np.int64)
        corrector_volume_kernel(qtot, self.eq_corr_vol, b.TH, b.TH_xi, b.TH_eta,
                                b.PHI_st, b.PHI_st_xi, b.PHI_st_eta, b.st_w,
                                m.dx, m.dy, self.par, self.matter, vol, vstat)
        if np.any(vstat != 0):
            raise RuntimeError("corrector volume failed")
        self.uhat_f = self.uhat_f + dt * vol + duf
        self.t += dt
        if not np.all(np.isfinite(self.uhat_f)):
            raise RuntimeError(f"non-finite DG coefficients at t={self.t}")

    def advance(self, t_end, callback=None):
        steps = 0
        while self.t < t_end - 1e-12:
            dt = min(self.max_dt(), t_end - self.t)
            self.step(dt)
            steps += 1
            if callback is not None:
                callback(self, dt)
        return steps

    # -- evaluation ---------------------------------------------------------
    def state_coefficients(self):
        return self.uhat_e + self.uhat_f

    def evaluate(self, pts_kind="norm"):
        """State values at the per-element quadrature points: (59, ne, nq)."""
        b = self.basis
        phi = b.PHI_norm if pts_kind == "norm" else b.PHI_proj
        u = np.einsum("ekc,kq->ceq", self.state_coefficients(), phi)
        return u

    def quad_points(self):
        return self._element_points(self.basis.norm_pts)

    def error_norm(self, var_index, t=None, normalized=True):
        b = self.basis
        m = self.mesh
        tt = self.t if t is None else t
        xs = self._element_points(b.norm_pts)
        exact = idt.state_at(self.sampler, tt, xs, eos=self.eos, gauge=self.gauge)
        num = self.evaluate().reshape(NVAR, -1)
        diff2 = (num[var_index] - exact[var_index]) ** 2
        w = np.tile(b.norm_w, m.n_elements) * m.dx * m.dy
        total = float(np.sum(w * diff2))
        vol = m.n_elements * m.dx * m.dy
        return np.sqrt(total / vol) if normalized else np.sqrt(total)

    def constraints(self):
        """Constraint fields sampled at the element quadrature points."""
        from .fd_solver import adm_fields_kernel, center_rhs_kernel, constraints_kernel
        b = self.basis
        m = self.mesh
        coeff = self.state_coefficients()
        u = np.ascontiguousarray(np.einsum("ekc,kq->ceq", coeff, b.PHI_norm)
                                 .reshape(NVAR, -1))
        gx = np.einsum("ekc,kq->ceq", coeff, b.PHI_norm_xi).reshape(NVAR, -1) / m.dx
        gy = np.einsum("ekc,kq->ceq", coeff, b.PHI_norm_eta).reshape(NVAR, -1) / m.dy
        n = u.shape[1]
        grad = np.zeros((NVAR, 3, n))
        grad[:, 0] = gx
        grad[:, 1] = gy
        grad = np.ascontiguousarray(grad)
        prim = np.zeros((5, n))
        if self.matter:
            gam_up = np.empty((6, n))
            sqrtg = np.empty(n)
            adm_fields_kernel(u, gam_up, sqrtg)
            status = np.empty(n, dtype=np.int64)
            hydro.cons2prim_field(np.ascontiguousarray(u[FLUID0:FLUID0 + 5]),
                                  gam_up, sqrtg, self.par[gh.PAR_EOS_GAMMA],
                                  self.par[gh.PAR_VACUUM], prim, status)
        mask = np.zeros(n, dtype=np.bool_)
        rhs = np.empty((NVAR, n))
        center_rhs_kernel(u, grad, prim, self.par, mask,
                          np.zeros((NVAR, 1)), False, rhs)
        mm = np.empty((4, n))
        cc = np.empty((4, n))
        c3 = np.empty((30, n))
        constraints_kernel(u, grad, rhs, prim, self.par, mask, mm, cc, c3)
        return mm, cc, c3

    def quad_weights(self):
        m = self.mesh
        return np.tile(self.basis.norm_w, m.n_elements) * m.dx * m.dy


@njit(cache=True, parallel=True)
def _eq_volume_driver(eq_lift, th, th_xi, th_eta, proj, kxi, keta, stw,
                      dx, dy, par, matter, out, status):
    ne = eq_lift.shape[0]
    Q = eq_lift.shape[1]
    for e in prange(ne):
        voln = np.empty((Q, NVAR))
        st = _volume_terms(eq_lift[e], th, th_xi, th_eta, proj, kxi, keta,
                           stw, 0.0, dx, dy, par, matter, voln)
        status[e] = st
        for l in range(Q):
            for c in range(NVAR):
                out[e, l, c] = voln[l, c]


@njit(cache=True, parallel=True)
def _lambda_kernel(u, prim, par, lam):
    n = u.shape[1]
    for idx in prange(n):
        uu = np.empty(NVAR)
        for k in range(NVAR):
            uu[k] = u[k, idx]
        pp = np.empty(5)
        for k in range(5):
            pp[k] = prim[k, idx]
        lam[idx] = gh.gh_max_speed(uu, pp, par)


def _lambda_means(means, prim, par):
    lam = np.empty(means.shape[1])
    _lambda_kernel(means, prim, par, lam)
    return float(lam.max())
