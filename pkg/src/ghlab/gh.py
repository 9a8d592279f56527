"""The generalized harmonic PDE: right-hand side, nonconservative
directional products, constraint monitors and signal-speed bounds.

The system is the first-order balance law

    d_t u + div F(u) + B(u) . grad u = S(u)

where only the five fluid slots carry a conservative flux. The kernels
below return the *non-flux* part of the right-hand side; flux divergences
are assembled by the schemes. Damping terms are grouped in constraint
form (gamma1 * (beta.dg - beta.Phi), gamma2 * (dg - Phi), gamma0 * C), so
that on constraint-satisfying data the result is bitwise independent of
the damping parameters.
"""

import numpy as np
from numba import njit, prange

from . import hydro
from . import tensors as tk
from .state import FLUID0, G0, H0, NVAR, PHI0, PI0, SYM4_INDEX

_S4 = SYM4_INDEX
_W4 = tk.SYM4_WEIGHT

# parameter-vector layout shared by all kernels
PAR_GAMMA0 = 0
PAR_GAMMA1 = 1
PAR_GAMMA2 = 2
PAR_EOS_GAMMA = 3
PAR_VACUUM = 4
PAR_MATTER = 5
PAR_COWLING = 6
PAR_LEN = 7

FOUR_PI = 4.0 * np.pi
EIGHT_PI = 8.0 * np.pi
SIXTEEN_PI = 16.0 * np.pi


def make_params(gamma0=0.0, gamma1=0.0, gamma2=0.0, eos_gamma=5.0 / 3.0,
                vacuum_threshold=1e-11, matter=False, cowling=False):
    p = np.zeros(PAR_LEN)
    p[PAR_GAMMA0] = gamma0
    p[PAR_GAMMA1] = gamma1
    p[PAR_GAMMA2] = gamma2
    p[PAR_EOS_GAMMA] = eos_gamma
    p[PAR_VACUUM] = vacuum_threshold
    p[PAR_MATTER] = 1.0 if matter else 0.0
    p[PAR_COWLING] = 1.0 if cowling else 0.0
    return p


@njit(cache=True)
def gh_rhs_point(u, grad, prim, par, out):
    """Full non-flux right-hand side at one point.

    u: (59,) state; grad: (59, 3) spatial gradients supplied by the
    scheme; prim: (5,) fluid primitives (ignored unless matter is on);
    out: (59,). Returns 0 on success, 1 on a bad metric.
    """
    for k in range(NVAR):
        out[k] = 0.0
    g = u[G0:G0 + 10]
    pi = u[PI0:PI0 + 10]
    phi = u[PHI0:PHI0 + 30]
    hh = u[H0:H0 + 4]

    adm = np.empty(tk.ADM_LEN)
    if tk.adm_from_g(g, adm) != 0:
        return 1
    ginv = np.empty(10)
    tk.sym4_inv(g, ginv)
    alpha = adm[tk.ADM_ALPHA]
    gam_up = adm[tk.ADM_GAMU:tk.ADM_GAMU + 6]
    n_up = np.empty(4)
    n_dn = np.empty(4)
    tk.normal_vectors(adm, n_up, n_dn)

    gamma0 = par[PAR_GAMMA0]
    gamma1 = par[PAR_GAMMA1]
    gamma2 = par[PAR_GAMMA2]
    matter = par[PAR_MATTER] != 0.0
    cowling = par[PAR_COWLING] != 0.0

    if not cowling:
        # ---- metric sector ----
        dtg = np.empty(10)
        tk.dt_g_from_pi_phi(pi, phi, adm, dtg)
        dg4 = np.empty((4, 10))
        for k in range(10):
            dg4[0, k] = dtg[k]
        for i in range(3):
            for k in range(10):
                dg4[1 + i, k] = phi[10 * i + k]
        gam_l = np.empty((4, 10))
        tk.christoffel_first_kind(dg4, gam_l)
        gam_tr = np.empty(4)
        tk.christoffel_trace(gam_l, ginv, gam_tr)

        # stress-energy
        t_dn = np.zeros(10)
        t_trace = 0.0
        if matter:
            hydro.stress_energy(prim, g, par[PAR_EOS_GAMMA], t_dn)
            t_trace = tk.sym4_trace(t_dn, ginv)

        # beta . grad g and beta . Phi per pair (constraint grouping)
        advg = np.empty(10)
        bphi = np.empty(10)
        for k in range(10):
            a1 = 0.0
            a2 = 0.0
            for j in range(3):
                bj = adm[tk.ADM_BETAU + j]
                a1 += bj * grad[G0 + k, j]
                a2 += bj * phi[10 * j + k]
            advg[k] = a1
            bphi[k] = a2

        # g rows
        for k in range(10):
            out[G0 + k] = -alpha * pi[k] + advg[k] + gamma1 * (advg[k] - bphi[k])

        # Phi rows
        nnphi = np.empty(3)          # n^c n^d Phi_icd
        for i in range(3):
            s = 0.0
            for c in range(4):
                for d in range(4):
                    s += n_up[c] * n_up[d] * phi[10 * i + _S4[c, d]]
            nnphi[i] = s
        aphi = np.empty((3, 3))      # A_i^l = gamma^{jl} n^c Phi_i(j,c)
        for i in range(3):
            for l in range(3):
                s = 0.0
                for j in range(3):
                    t = 0.0
                    for c in range(4):
                        t += n_up[c] * phi[10 * i + _S4[1 + j, c]]
                    s += gam_up[tk._S3[j, l]] * t
                aphi[i, l] = s
        for i in range(3):
            for k in range(10):
                adv = 0.0
                for j in range(3):
                    adv += adm[tk.ADM_BETAU + j] * grad[PHI0 + 10 * i + k, j]
                val = (adv - alpha * grad[PI0 + k, i]
                       + alpha * gamma2 * (grad[G0 + k, i] - phi[10 * i + k])
                       + 0.5 * alpha * nnphi[i] * pi[k])
                for l in range(3):
                    val += alpha * aphi[i, l] * phi[10 * l + k]
                out[PHI0 + 10 * i + k] = val

        # Pi rows -------------------------------------------------------
        # quadratic precomputations
        uphi = np.empty((3, 4, 4))   # U_i^d_a = g^{cd} Phi_i(c,a)
        for i in range(3):
            for d in range(4):
                for a in range(4):
                    s = 0.0
                    for c in range(4):
                        s += ginv[_S4[c, d]] * phi[10 * i + _S4[c, a]]
                    uphi[i, d, a] = s
        pu = np.empty((4, 4))        # PU_d_a = g^{cd} Pi_(c,a)
        for d in range(4):
            for a in range(4):
                s = 0.0
                for c in range(4):
                    s += ginv[_S4[c, d]] * pi[_S4[c, a]]
                pu[d, a] = s
        g1 = np.empty((4, 4, 4))     # G1_a^d_e = g^{cd} Gamma_a(c,e)
        for a in range(4):
            for d in range(4):
                for e in range(4):
                    s = 0.0
                    for c in range(4):
                        s += ginv[_S4[c, d]] * gam_l[a, _S4[c, e]]
                    g1[a, d, e] = s
        gu2 = np.empty((4, 4, 4))    # GU_a^{d,f} = g^{ef} G1_a^d_e
        for a in range(4):
            for d in range(4):
                for f in range(4):
                    s = 0.0
                    for e in range(4):
                        s += ginv[_S4[e, f]] * g1[a, d, e]
                    gu2[a, d, f] = s
        gam_up_pair = np.empty((4, 10))   # Gamma^c_(ab) = g^{cd} Gamma_d(ab)
        for c in range(4):
            for k in range(10):
                s = 0.0
                for d in range(4):
                    s += ginv[_S4[c, d]] * gam_l[d, k]
                gam_up_pair[c, k] = s
        nnpi = 0.0                   # n^c n^d Pi_cd
        for c in range(4):
            for d in range(4):
                nnpi += n_up[c] * n_up[d] * pi[_S4[c, d]]
        bv = np.empty(3)             # gamma^{ij} n^c Pi_(c,i)
        for j in range(3):
            s = 0.0
            for i in range(3):
                t = 0.0
                for c in range(4):
                    t += n_up[c] * pi[_S4[c, 1 + i]]
                s += gam_up[tk._S3[i, j]] * t
            bv[j] = s
        cc = np.empty(4)             # gauge constraint C_a = H_a + Gamma_a
        ncc = 0.0
        for a in range(4):
            cc[a] = hh[a] + gam_tr[a]
            ncc += n_up[a] * cc[a]

        k = 0
        for a in range(4):
            for b in range(a, 4):
                adv = 0.0
                advg_k = 0.0
                bphi_k = bphi[k]
                for j in range(3):
                    bj = adm[tk.ADM_BETAU + j]
                    adv += bj * grad[PI0 + k, j]
                    advg_k += bj * grad[G0 + k, j]
                val = adv + gamma1 * gamma2 * (advg_k - bphi_k)
                for j in range(3):
                    for i in range(3):
                        val -= (alpha * gam_up[tk._S3[j, i]]
                                * grad[PHI0 + 10 * i + k, j])
                # 2 alpha g^{cd} (gamma^{ij} Phi_ica Phi_jdb - Pi_ca Pi_db
                #                 - g^{ef} Gamma_ace Gamma_bdf)
                q1 = 0.0
                for i in range(3):
                    for j in range(3):
                        gij = gam_up[tk._S3[i, j]]
                        for d in range(4):
                            q1 += gij * uphi[i, d, a] * phi[10 * j + _S4[d, b]]
                q2 = 0.0
                for d in range(4):
                    q2 += pu[d, a] * pi[_S4[d, b]]
                q3 = 0.0
                for d in range(4):
                    for f in range(4):
                        q3 += gu2[a, d, f] * gam_l[b, _S4[d, f]]
                val += 2.0 * alpha * (q1 - q2 - q3)
                # -2 alpha nabla_(a H_b): -alpha (d_a H_b + d_b H_a)
                #                         + 2 alpha Gamma^c_ab H_c
                dh = 0.0
                if a >= 1:
                    dh += grad[H0 + b, a - 1]
                if b >= 1:
                    dh += grad[H0 + a, b - 1]
                gh_c = 0.0
                for c in range(4):
                    gh_c += gam_up_pair[c, k] * hh[c]
                val += -alpha * dh + 2.0 * alpha * gh_c
                # damping and lower-order terms
                val -= 0.5 * alpha * nnpi * pi[k]
                for j in range(3):
                    val -= alpha * bv[j] * phi[10 * j + k]
                val += alpha * gamma0 * (cc[a] * n_dn[b] + cc[b] * n_dn[a]
                                         - g[k] * ncc)
                if matter:
                    val -= SIXTEEN_PI * alpha * (t_dn[k] - 0.5 * g[k] * t_trace)
                out[PI0 + k] = val
                k += 1
        # H rows stay zero (gauge source fixed in time)

    if matter:
        src = np.empty(5)
        hydro.euler_sources_point(prim, u[FLUID0:FLUID0 + 5], adm, phi, pi, src)
        for k in range(5):
            out[FLUID0 + k] = src[k]
    return 0


@njit(cache=True)
def gh_grad_part_axis(u, dq, axis, par, out):
    """Gradient part of the right-hand side with the gradient replaced by a
    single-direction vector dq along `axis` (0-based spatial axis).

    This is -B^axis(u) . dq in the balance-law sign convention; the jump
    terms of both schemes are built from it.
    """
    for k in range(NVAR):
        out[k] = 0.0
    g = u[G0:G0 + 10]
    phi = u[PHI0:PHI0 + 30]
    adm = np.empty(tk.ADM_LEN)
    if tk.adm_from_g(g, adm) != 0:
        return 1
    alpha = adm[tk.ADM_ALPHA]
    gam_up = adm[tk.ADM_GAMU:tk.ADM_GAMU + 6]
    gamma1 = par[PAR_GAMMA1]
    gamma2 = par[PAR_GAMMA2]
    ba = adm[tk.ADM_BETAU + axis]
    cowling = par[PAR_COWLING] != 0.0
    if cowling:
        return 0

    for k in range(10):
        out[G0 + k] = (1.0 + gamma1) * ba * dq[G0 + k]
    for i in range(3):
        for k in range(10):
            val = ba * dq[PHI0 + 10 * i + k]
            if i == axis:
                val += alpha * (gamma2 * dq[G0 + k] - dq[PI0 + k])
            out[PHI0 + 10 * i + k] = val
    k = 0
    for a in range(4):
        for b in range(a, 4):
            val = ba * dq[PI0 + k] + gamma1 * gamma2 * ba * dq[G0 + k]
            for i in range(3):
                val -= alpha * gam_up[tk._S3[axis, i]] * dq[PHI0 + 10 * i + k]
            dh = 0.0
            if a == 1 + axis:
                dh += dq[H0 + b]
            if b == 1 + axis:
                dh += dq[H0 + a]
            val -= alpha * dh
            out[PI0 + k] = val
            k += 1
    return 0


@njit(cache=True)
def gh_max_speed(u, prim, par):
    """Upper bound on the characteristic speeds at one point.

    Light-cone bound max_i(|beta^i| + alpha sqrt(gamma^ii)), additionally
    maxed with the gamma1-advection speed and the fluid sound-cone edges.
    """
    g = u[G0:G0 + 10]
    adm = np.empty(tk.ADM_LEN)
    if tk.adm_from_g(g, adm) != 0:
        return -1.0
    alpha = adm[tk.ADM_ALPHA]
    gam_up = adm[tk.ADM_GAMU:tk.ADM_GAMU + 6]
    gamma1 = par[PAR_GAMMA1]
    s = 0.0
    for i in range(3):
        bi = abs(adm[tk.ADM_BETAU + i])
        gii = gam_up[tk._S3[i, i]]
        light = bi + alpha * np.sqrt(gii if gii > 0.0 else 0.0)
        advect = (1.0 + abs(gamma1)) * bi
        if light > s:
            s = light
        if advect > s:
            s = advect
    if par[PAR_MATTER] != 0.0 and prim[0] > 0.0:
        fs = hydro.fluid_max_speed(prim, adm, g[4:10], par[PAR_EOS_GAMMA])
        if fs > s:
            s = fs
    return s


@njit(cache=True)
def gh_constraints_point(u, grad, rhs, prim, par, m_out, c_out, c3_out):
    """Einstein constraints M_a, gauge constraints C_a and the 3-index
    constraint at one point.

    grad supplies spatial derivatives of all 59 slots; rhs is the non-flux
    evolution right-hand side at the same point (used for the pure-time
    second derivative of the metric). Returns 0 on success.
    """
    g = u[G0:G0 + 10]
    pi = u[PI0:PI0 + 10]
    phi = u[PHI0:PHI0 + 30]
    hh = u[H0:H0 + 4]
    adm = np.empty(tk.ADM_LEN)
    if tk.adm_from_g(g, adm) != 0:
        return 1
    ginv = np.empty(10)
    tk.sym4_inv(g, ginv)
    alpha = adm[tk.ADM_ALPHA]
    n_up = np.empty(4)
    n_dn = np.empty(4)
    tk.normal_vectors(adm, n_up, n_dn)

    # 3-index constraint
    for i in range(3):
        for k in range(10):
            c3_out[10 * i + k] = grad[G0 + k, i] - phi[10 * i + k]

    # 4-gradient of g and Christoffels
    dtg = np.empty(10)
    tk.dt_g_from_pi_phi(pi, phi, adm, dtg)
    dg4 = np.empty((4, 10))
    for k in range(10):
        dg4[0, k] = dtg[k]
    for i in range(3):
        for k in range(10):
            dg4[1 + i, k] = phi[10 * i + k]
    gam_l = np.empty((4, 10))
    tk.christoffel_first_kind(dg4, gam_l)
    gam_tr = np.empty(4)
    tk.christoffel_trace(gam_l, ginv, gam_tr)
    for a in range(4):
        c_out[a] = hh[a] + gam_tr[a]

    # second derivatives of g: ddg[(c,d) pair, (a,b) pair]
    ddg = np.empty((10, 10))
    # spatial pairs from grad of Phi (symmetrized)
    for i in range(3):
        for j in range(i, 3):
            kd = _S4[1 + i, 1 + j]
            for k in range(10):
                ddg[kd, k] = 0.5 * (grad[PHI0 + 10 * j + k, i]
                                    + grad[PHI0 + 10 * i + k, j])
    # mixed time-space: d_i (d_t g) with d_t g from the Pi definition
    dal = np.empty(3)
    dbu = np.empty((3, 3))
    tk.gauge_gradients_from_phi(phi, adm, dal, dbu)
    for i in range(3):
        kd = _S4[0, 1 + i]
        for k in range(10):
            s = -dal[i] * pi[k] - alpha * grad[PI0 + k, i]
            for m in range(3):
                s += dbu[i, m] * phi[10 * m + k]
                s += adm[tk.ADM_BETAU + m] * grad[PHI0 + 10 * m + k, i]
            ddg[kd, k] = s
    # pure time: d_t (d_t g) using the evolution equations
    dtgauge = tk.dt_gauge_from_dtg(g, adm, dtg)
    for k in range(10):
        s = -dtgauge[0] * pi[k] - alpha * rhs[PI0 + k]
        for m in range(3):
            s += dtgauge[1 + m] * phi[10 * m + k]
            s += adm[tk.ADM_BETAU + m] * rhs[PHI0 + 10 * m + k]
        ddg[_S4[0, 0], k] = s

    # derivative of the inverse metric: dginv[c][(ab)] = -g^{ad} g^{be} dg4[c][(de)]
    dginv = np.empty((4, 10))
    for c in range(4):
        k = 0
        for a in range(4):
            for b in range(a, 4):
                s = 0.0
                for d in range(4):
                    for e in range(4):
                        s -= (ginv[_S4[a, d]] * ginv[_S4[b, e]]
                              * dg4[c, _S4[d, e]])
                dginv[c, k] = s
                k += 1

    # d_c Gamma_b = d_c g^{de} Gamma_b(de) + g^{de} d_c Gamma_b(de)
    dgam = np.empty((4, 4))
    for c in range(4):
        for b in range(4):
            s = 0.0
            for kp in range(10):
                s += _W4[kp] * dginv[c, kp] * gam_l[b, kp]
            # d_c Gamma_b(de) = (ddg[(c,d)][(b,e)] + ddg[(c,e)][(b,d)] - ddg[(c,b)][(d,e)])/2
            for d in range(4):
                for e in range(4):
                    dcgam = 0.5 * (ddg[_S4[c, d], _S4[b, e]]
                                   + ddg[_S4[c, e], _S4[b, d]]
                                   - ddg[_S4[c, b], _S4[d, e]])
                    s += ginv[_S4[d, e]] * dcgam
            dgam[c, b] = s

    # Gamma^c_(ab) and T_ab
    gam_up_pair = np.empty((4, 10))
    for c in range(4):
        for k in range(10):
            s = 0.0
            for d in range(4):
                s += ginv[_S4[c, d]] * gam_l[d, k]
            gam_up_pair[c, k] = s
    # In Cowling mode the background is a test-fluid vacuum solution, so the
    # monitored constraints are the vacuum ones (T would measure the
    # deliberately neglected backreaction, not an error).
    t_dn = np.zeros(10)
    if par[PAR_MATTER] != 0.0 and par[PAR_COWLING] == 0.0:
        hydro.stress_energy(prim, g, par[PAR_EOS_GAMMA], t_dn)

    # Ricci tensor, first-order-consistent form
    p1 = np.empty((4, 4, 4))     # P1[c][a][f] = g^{ef} dg4[c][(a,e)]
    for c in range(4):
        for a in range(4):
            for f in range(4):
                s = 0.0
                for e in range(4):
                    s += ginv[_S4[e, f]] * dg4[c, _S4[a, e]]
                p1[c, a, f] = s
    a1 = np.empty((4, 4, 4))     # A1[d][a][f] = g^{cd} P1[c][a][f]
    for d in range(4):
        for a in range(4):
            for f in range(4):
                s = 0.0
                for c in range(4):
                    s += ginv[_S4[c, d]] * p1[c, a, f]
                a1[d, a, f] = s
    g1 = np.empty((4, 4, 4))     # G1[a][c][f] = g^{ef} Gamma_a(ce) -> for term2
    for a in range(4):
        for c in range(4):
            for f in range(4):
                s = 0.0
                for e in range(4):
                    s += ginv[_S4[e, f]] * gam_l[a, _S4[c, e]]
                g1[a, c, f] = s
    gu2 = np.empty((4, 4, 4))    # GU[a][d][f] = g^{cd} G1[a][c][f]
    for a in range(4):
        for d in range(4):
            for f in range(4):
                s = 0.0
                for c in range(4):
                    s += ginv[_S4[c, d]] * g1[a, c, f]
                gu2[a, d, f] = s

    ric = np.empty(10)
    k = 0
    for a in range(4):
        for b in range(a, 4):
            t1 = 0.0
            for d in range(4):
                for f in range(4):
                    t1 += a1[d, a, f] * dg4[d, _S4[b, f]]
            t2 = 0.0
            for d in range(4):
                for f in range(4):
                    t2 += gu2[a, d, f] * gam_l[b, _S4[d, f]]
            t3 = 0.0
            for kp in range(10):
                t3 += _W4[kp] * ginv[kp] * ddg[kp, k]
            nab = 0.5 * (dgam[a, b] + dgam[b, a])
            for c in range(4):
                nab -= gam_up_pair[c, k] * gam_tr[c]
            ric[k] = t1 - t2 - 0.5 * t3 + nab
            k += 1
    rsc = tk.sym4_trace(ric, ginv)

    # M_a = (R_ab - g_ab R / 2 - 8 pi T_ab) n^b
    for a in range(4):
        s = 0.0
        for b in range(4):
            kp = _S4[a, b]
            s += (ric[kp] - 0.5 * g[kp] * rsc - EIGHT_PI * t_dn[kp]) * n_up[b]
        m_out[a] = s
    return 0
