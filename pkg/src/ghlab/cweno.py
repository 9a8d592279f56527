"""Central WENO reconstruction on uniform grids.

One optimal polynomial of even degree N on the centered (N+1)-cell
stencil is blended with three parabolas on the left/center/right 3-cell
sub-stencils. Candidate coefficients follow from exact conservation of
the stencil's cell means; the blend uses the standard oscillation
indicators with linear weights (1e8, 1e4, 1, 1) and (sigma + eps)^-r.

Everything is precomputed into small coefficient tables: for each
candidate k the two face values are fixed linear forms L_k . window and
the indicator is a quadratic form window^T Q_k window (the P0 candidate
is linear in the window, so its indicator is a quadratic form too).
"""

import numpy as np
from numba import njit, prange

LAMBDA_OPT = 1.0e8
LAMBDA_C = 1.0e4
LAMBDA_LR = 1.0
WENO_EPS = 1.0e-7
WENO_R = 4


def _legendre_shifted(m):
    """Legendre P_m(2 xi) on [-1/2, 1/2] as numpy polynomial coefficients."""
    from numpy.polynomial import legendre as npleg
    c = np.zeros(m + 1)
    c[m] = 1.0
    poly = npleg.Legendre(c, domain=[-0.5, 0.5])
    return poly.convert(kind=np.polynomial.polynomial.Polynomial)


def _basis(max_deg):
    return [_legendre_shifted(m) for m in range(max_deg + 1)]


def _cell_mean_matrix(offsets, deg):
    """A[j, m] = mean of psi_m over cell centered at offset_j (unit cells)."""
    basis = _basis(deg)
    a = np.empty((len(offsets), deg + 1))
    for j, off in enumerate(offsets):
        for m, pol in enumerate(basis):
            ip = pol.integ()
            a[j, m] = ip(off + 0.5) - ip(off - 0.5)
    return a

def _indicator_matrix(deg):
    """Q[m, n] = sum_alpha int over the center cell of
    d^alpha psi_m d^alpha psi_n d xi (unit cell, scale-free)."""
    basis = _basis(deg)
    q = np.zeros((deg + 1, deg + 1))
    for alpha in range(1, deg + 1):
        dbasis = [pol.deriv(alpha) for pol in basis]
        for m in range(deg + 1):
            for n in range(deg + 1):
                ip = (dbasis[m] * dbasis[n]).integ()
                q[m, n] += ip(0.5) - ip(-0.5)
    return q


class CWENOTables:
    """Precomputed reconstruction tables for one optimal degree N."""

    def __init__(self, degree):
        if degree not in (2, 4, 6, 8):
            raise ValueError("optimal degree must be one of 2, 4, 6, 8")
        self.degree = degree
        half = degree // 2
        self.stencil_width = degree + 1
        self.ghost = half + 1

        opt_off = np.arange(-half, half + 1)
        a_opt = _cell_mean_matrix(opt_off, degree)
        li_opt = np.linalg.inv(a_opt)       # coeffs = li_opt @ window

        sub_offs = [np.array([-2, -1, 0]), np.array([-1, 0, 1]), np.array([0, 1, 2])]
        li_sub = [np.linalg.inv(_cell_mean_matrix(off, 2)) for off in sub_offs]
        # embed the 3-point sub-windows into the (N+1)-window
        emb = []
        for off in sub_offs:
            e = np.zeros((3, degree + 1))
            for row, o in enumerate(off):
                e[row, o + half] = 1.0
            emb.append(e)

        lam = np.array([LAMBDA_OPT, LAMBDA_LR, LAMBDA_C, LAMBDA_LR])
        lam_n = lam / lam.sum()
        self.linear_weights = lam
        self.normalized_weights = lam_n

        basis = _basis(degree)
        evl = np.array([pol(-0.5) for pol in basis])
        evr = np.array([pol(0.5) for pol in basis])

        # coefficient maps window -> polynomial coefficients (degree+1, N+1)
        cmap_sub = [np.zeros((degree + 1, degree + 1)) for _ in range(3)]
        for k in range(3):
            cmap_sub[k][:3, :] = li_sub[k] @ emb[k]
        # P0 = (P_opt - sum_k lam_n[k] P_k) / lam_n[0]
        cmap_p0 = li_opt.copy()
        for k in range(3):
            cmap_p0 -= lam_n[1 + k] * cmap_sub[k]
        cmap_p0 /= lam_n[0]

        q_full = _indicator_matrix(degree)
        q3 = q_full[:3, :3]

        cmaps = [cmap_p0] + cmap_sub
        self.face_left = np.array([evl @ c for c in cmaps])    # (4, N+1)
        self.face_right = np.array([evr @ c for c in cmaps])   # (4, N+1)
        qmats = [cmap_p0.T @ q_full @ cmap_p0]
        for k in range(3):
            qk = cmap_sub[k][:3, :]
            qmats.append(qk.T @ q3 @ qk)
        self.sigma_q = np.array(qmats)                          # (4, N+1, N+1)
        # for linear-weight (non-oscillatory-off) mode
        self.face_left_lin = evl @ li_opt
        self.face_right_lin = evr @ li_opt


_TABLES = {}


def tables(degree):
    if degree not in _TABLES:
        _TABLES[degree] = CWENOTables(degree)
    return _TABLES[degree]


@njit(cache=True, inline="always")
def reconstruct_window(win, fl, fr, sq, lam, eps, expo):
    """CWENO face values (left, right) of one window.

    win: (N+1,), fl/fr: (4, N+1) candidate face forms, sq: (4, N+1, N+1)
    indicator forms, lam: (4,) linear weights.
    """
    nw = win.shape[0]
    wsum = 0.0
    vall = 0.0
    valr = 0.0
    for k in range(4):
        sig = 0.0
        for m in range(nw):
            acc = 0.0
            for n in range(nw):
                acc += sq[k, m, n] * win[n]
            sig += win[m] * acc
        om = lam[k] / (sig + eps) ** expo
        cl = 0.0
        cr = 0.0
        for m in range(nw):
            cl += fl[k, m] * win[m]
            cr += fr[k, m] * win[m]
        wsum += om
        vall += om * cl
        valr += om * cr
    return vall / wsum, valr / wsum


@njit(cache=True, parallel=True)
def reconstruct_axis(u, axis_len, lead, trail, half, fl, fr, sq, lam, out_l, out_r):
    """Reconstruct every 1D window of a flattened field block.

    u is viewed as (nf, lead, axis_len, trail) in C order, ghosted along
    the axis with ghost = half + 1 layers. Cells half .. axis_len-half-1
    (interior plus one ghost on each side) get their own-polynomial face
    values w_h(x -1/2) -> out_l, w_h(x +1/2) -> out_r, so every interior
    face has both one-sided values.
    """
    nf = u.shape[0]
    n_rec = axis_len - 2 * half
    nw = 2 * half + 1
    eps = WENO_EPS
    expo = WENO_R
    total = nf * lead
    for fl_idx in prange(total):
        f = fl_idx // lead
        a = fl_idx % lead
        win = np.empty(nw)
        for i in range(n_rec):
            ic = i + half
            for t in range(trail):
                for m in range(nw):
                    win[m] = u[f, a, ic - half + m, t]
                vl, vr = reconstruct_window(win, fl, fr, sq, lam, eps, expo)
                out_l[f, a, i, t] = vl
                out_r[f, a, i, t] = vr


def reconstruct_block(u, axis, degree, tabs=None):
    """CWENO face values along one axis of a ghosted block.

    u: (nf, n1, n2[, n3]) ghosted on every axis. Returns (w_left, w_right)
    with extent n_axis - degree along `axis` (interior cells plus one ghost
    cell each side, index 0 being the left ghost cell); other axes keep
    their ghosted extent.
    """
    t = tabs or tables(degree)
    half = degree // 2
    nf = u.shape[0]
    spatial = u.shape[1:]
    nd = len(spatial)
    ax = axis + 1
    lead = 1
    for d in range(1, ax):
        lead *= u.shape[d]
    axis_len = u.shape[ax]
    trail = 1
    for d in range(ax + 1, nd + 1):
        trail *= u.shape[d]
    u4 = np.ascontiguousarray(u).reshape(nf, lead, axis_len, trail)
    n_rec = axis_len - 2 * half
    out_l = np.empty((nf, lead, n_rec, trail))
    out_r = np.empty((nf, lead, n_rec, trail))
    reconstruct_axis(u4, axis_len, lead, trail, half,
                     t.face_left, t.face_right, t.sigma_q, t.linear_weights,
                     out_l, out_r)
    new_shape = (nf,) + tuple(n_rec if d == axis else spatial[d] for d in range(nd))
    return out_l.reshape(new_shape), out_r.reshape(new_shape)


def reconstruct_window_py(window, degree):
    """Single-window reconstruction for tests: returns (w(-1/2), w(+1/2))."""
    t = tables(degree)
    win = np.ascontiguousarray(window, dtype=float)
    if win.shape[0] != degree + 1:
        raise ValueError("window length must be degree + 1")
    return reconstruct_window(win, t.face_left, t.face_right, t.sigma_q,
                              t.linear_weights, WENO_EPS, WENO_R)


def oscillation_indicators(window, degree):
    """sigma_k of the four candidates for one window (unit-cell scaling)."""
    t = tables(degree)
    win = np.asarray(window, dtype=float)
    return np.array([win @ t.sigma_q[k] @ win for k in range(4)])


def nonlinear_weights(sigmas, lam=None, eps=WENO_EPS, r=WENO_R):
    """omega_k = (lam_k / (sigma_k + eps)^r) normalized to sum 1."""
    sigmas = np.asarray(sigmas, dtype=float)
    if lam is None:
        lam = np.array([LAMBDA_OPT, LAMBDA_LR, LAMBDA_C, LAMBDA_LR])[:sigmas.size]
    wt = lam / (sigmas + eps) ** r
    return wt / wt.sum()
