"""Pointwise tensor kernels for packed symmetric storage.

Symmetric 4-tensors are packed to 10 components (pair order of
``state.SYM4_PAIRS``), symmetric 3-tensors to 6. Everything here is
numba-compiled and allocation-light so the grid solvers can call these
per cell; the same functions are called directly from unit tests.
"""

import numpy as np
from numba import njit

from .state import SYM3_INDEX, SYM4_INDEX

# multiplicity of each packed slot when contracting two symmetric tensors
SYM4_WEIGHT = np.array([1.0, 2.0, 2.0, 2.0, 1.0, 2.0, 2.0, 1.0, 2.0, 1.0])
SYM3_WEIGHT = np.array([1.0, 2.0, 2.0, 1.0, 2.0, 1.0])

# ADM scratch layout: [alpha, beta_up(3), beta_dn(3), gamma_up(6), sqrt_gamma]
ADM_LEN = 14
ADM_ALPHA = 0
ADM_BETAU = 1
ADM_BETAD = 4
ADM_GAMU = 7
ADM_SQRTG = 13

_S4 = SYM4_INDEX
_S3 = SYM3_INDEX


@njit(cache=True)
def sym4_to_full(p, out):
    for a in range(4):
        for b in range(4):
            out[a, b] = p[_S4[a, b]]


@njit(cache=True)
def full_to_sym4(m, out):
    k = 0
    for a in range(4):
        for b in range(a, 4):
            out[k] = m[a, b]
            k += 1


@njit(cache=True, inline="always")
def _det3(a, b, c, d, e, f, g, h, i):
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


@njit(cache=True)
def sym4_det(p):
    m = np.empty((4, 4))
    sym4_to_full(p, m)
    d = 0.0
    sign = 1.0
    for col in range(4):
        r = 0
        sub = np.empty(9)
        k = 0
        for i in range(1, 4):
            for j in range(4):
                if j == col:
                    continue
                sub[k] = m[i, j]
                k += 1
        d += sign * m[0, col] * _det3(sub[0], sub[1], sub[2],
                                      sub[3], sub[4], sub[5],
                                      sub[6], sub[7], sub[8])
        sign = -sign
    return d


@njit(cache=True)
def sym4_inv(p, out):
    """Cofactor inverse of a packed symmetric 4x4. Returns the determinant."""
    m = np.empty((4, 4))
    sym4_to_full(p, m)
    det = sym4_det(p)
    if det == 0.0:
        for k in range(10):
            out[k] = 0.0
        return 0.0
    inv_det = 1.0 / det
    k = 0
    sub = np.empty(9)
    for a in range(4):
        for b in range(a, 4):
            # adj[a,b] = cofactor(b,a); for symmetric input adj is symmetric
            n = 0
            for i in range(4):
                if i == b:
                    continue
                for j in range(4):
                    if j == a:
                        continue
                    sub[n] = m[i, j]
                    n += 1
            cof = _det3(sub[0], sub[1], sub[2], sub[3], sub[4],
                        sub[5], sub[6], sub[7], sub[8])
            if (a + b) % 2 == 1:
                cof = -cof
            out[k] = cof * inv_det
            k += 1
    return det


@njit(cache=True)
def sym3_inv(p, out):
    """Inverse of a packed symmetric 3x3. Returns the determinant."""
    a, b, c, d, e, f = p[0], p[1], p[2], p[3], p[4], p[5]
    det = a * (d * f - e * e) - b * (b * f - c * e) + c * (b * e - c * d)
    if det == 0.0:
        for k in range(6):
            out[k] = 0.0
        return 0.0
    inv_det = 1.0 / det
    out[0] = (d * f - e * e) * inv_det
    out[1] = (c * e - b * f) * inv_det
    out[2] = (b * e - c * d) * inv_det
    out[3] = (a * f - c * c) * inv_det
    out[4] = (b * c - a * e) * inv_det
    out[5] = (a * d - b * b) * inv_det
    return det


@njit(cache=True)
def adm_from_g(g, adm):
    """3+1 split of a packed metric into the ADM scratch layout.

    Returns 0 on success, 1 if the spatial block is not positive definite
    or the slice is not spacelike (alpha^2 <= 0).
    """
    gamu = adm[ADM_GAMU:ADM_GAMU + 6]
    detg = sym3_inv(g[4:10], gamu)
    if detg <= 0.0 or g[4] <= 0.0:
        return 1
    adm[ADM_SQRTG] = np.sqrt(detg)
    b2 = 0.0
    for i in range(3):
        adm[ADM_BETAD + i] = g[1 + i]
    for i in range(3):
        s = 0.0
        for j in range(3):
            s += gamu[_S3[i, j]] * adm[ADM_BETAD + j]
        adm[ADM_BETAU + i] = s
        b2 += s * adm[ADM_BETAD + i]
    a2 = b2 - g[0]
    if a2 <= 0.0:
        return 1
    adm[ADM_ALPHA] = np.sqrt(a2)
    return 0


@njit(cache=True)
def normal_vectors(adm, n_up, n_dn):
    alpha = adm[ADM_ALPHA]
    n_up[0] = 1.0 / alpha
    n_dn[0] = -alpha
    for i in range(3):
        n_up[1 + i] = -adm[ADM_BETAU + i] / alpha
        n_dn[1 + i] = 0.0


@njit(cache=True)
def dt_g_from_pi_phi(pi, phi, adm, out):
    """d_t g_ab = -alpha Pi_ab + beta^k Phi_kab (Pi definition inverted)."""
    alpha = adm[ADM_ALPHA]
    for k in range(10):
        s = -alpha * pi[k]
        for i in range(3):
            s += adm[ADM_BETAU + i] * phi[10 * i + k]
        out[k] = s


@njit(cache=True)
def christoffel_first_kind(dg, gamma_l):
    """Gamma_abc = (d_b g_ac + d_c g_ab - d_a g_bc)/2.

    dg is the (4,10) spacetime gradient of the packed metric;
    gamma_l is filled as (4,10), packed symmetric on (b,c).
    """
    for a in range(4):
        k = 0
        for b in range(4):
            for c in range(b, 4):
                gamma_l[a, k] = 0.5 * (dg[b, _S4[a, c]] + dg[c, _S4[a, b]]
                                       - dg[a, _S4[b, c]])
                k += 1


@njit(cache=True)
def christoffel_trace(gamma_l, g_up, out):
    """Gamma_a = g^{bc} Gamma_abc."""
    for a in range(4):
        s = 0.0
        for k in range(10):
            s += SYM4_WEIGHT[k] * g_up[k] * gamma_l[a, k]
        out[a] = s


@njit(cache=True)
def sym4_trace(t, g_up):
    """T^c_c = g^{cd} T_cd for packed symmetric tensors."""
    s = 0.0
    for k in range(10):
        s += SYM4_WEIGHT[k] * g_up[k] * t[k]
    return s


@njit(cache=True)
def lower4(g, v_up, v_dn):
    for a in range(4):
        s = 0.0
        for b in range(4):
            s += g[_S4[a, b]] * v_up[b]
        v_dn[a] = s


@njit(cache=True)
def gauge_gradients_from_phi(phi, adm, dalpha, dbeta_up):
    """Spatial gradients of lapse and shift read off Phi.

    dalpha[j] = d_j alpha, dbeta_up[j, i] = d_j beta^i; uses
    d_j gamma_ik = Phi_j(1+i)(1+k) and d_j beta_i = Phi_j 0(1+i).
    """
    alpha = adm[ADM_ALPHA]
    gam_up = adm[ADM_GAMU:ADM_GAMU + 6]
    for j in range(3):
        for i in range(3):
            s = 0.0
            for k in range(3):
                dgup = 0.0
                for a in range(3):
                    for b in range(3):
                        dgup += (-gam_up[_S3[i, a]] * gam_up[_S3[k, b]]
                                 * phi[10 * j + _S4[1 + a, 1 + b]])
                s += dgup * adm[ADM_BETAD + k]
            for k in range(3):
                s += gam_up[_S3[i, k]] * phi[10 * j + _S4[0, 1 + k]]
            dbeta_up[j, i] = s
        num = 0.0
        for i in range(3):
            num += dbeta_up[j, i] * adm[ADM_BETAD + i]
            num += adm[ADM_BETAU + i] * phi[10 * j + _S4[0, 1 + i]]
        dalpha[j] = (num - phi[10 * j + _S4[0, 0]]) / (2.0 * alpha)


@njit(cache=True)
def dt_gauge_from_dtg(g, adm, dtg):
    """(d_t alpha, d_t beta^i) from d_t g_ab; returns a length-4 array."""
    alpha = adm[ADM_ALPHA]
    gam_up = adm[ADM_GAMU:ADM_GAMU + 6]
    out = np.empty(4)
    dtbu = np.empty(3)
    for i in range(3):
        s = 0.0
        for j in range(3):
            # d_t gamma^{ij} beta_j part
            dgup = 0.0
            for a in range(3):
                for b in range(3):
                    dgup += (-gam_up[_S3[i, a]] * gam_up[_S3[j, b]]
                             * dtg[_S4[1 + a, 1 + b]])
            s += dgup * adm[ADM_BETAD + j]
            s += gam_up[_S3[i, j]] * dtg[_S4[0, 1 + j]]
        dtbu[i] = s
    num = 0.0
    for i in range(3):
        num += dtbu[i] * adm[ADM_BETAD + i]
        num += adm[ADM_BETAU + i] * dtg[_S4[0, 1 + i]]
    out[0] = (num - dtg[_S4[0, 0]]) / (2.0 * alpha)
    out[1] = dtbu[0]
    out[2] = dtbu[1]
    out[3] = dtbu[2]
    return out
