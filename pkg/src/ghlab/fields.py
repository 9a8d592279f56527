"""Vectorized (numpy) helpers over fields of packed tensors.

Used by the initial-data samplers and diagnostics; the solvers' hot loops
use the numba point kernels instead, and the two implementations
cross-check each other in the test suite. Field arrays carry the packed
index first: g is (10, n), dg is (4, 10, n), d2g is (10, 10, n).
"""

import numpy as np

from .state import SYM3_INDEX, SYM4_INDEX, SYM4_PAIRS

_W4 = np.array([1.0, 2.0, 2.0, 2.0, 1.0, 2.0, 2.0, 1.0, 2.0, 1.0])


def unpack4(p):
    """(10, n) -> (n, 4, 4) full symmetric matrices."""
    p = np.asarray(p)
    n = p.shape[-1]
    out = np.empty((n, 4, 4))
    for a in range(4):
        for b in range(4):
            out[:, a, b] = p[SYM4_INDEX[a, b]]
    return out


def pack4(m):
    """(n, 4, 4) -> (10, n)."""
    out = np.empty((10, m.shape[0]))
    for k, (a, b) in enumerate(SYM4_PAIRS):
        out[k] = m[:, a, b]
    return out


def unpack3(p):
    """(6, n) -> (n, 3, 3) full symmetric matrices."""
    p = np.asarray(p)
    n = p.shape[-1]
    out = np.empty((n, 3, 3))
    for a in range(3):
        for b in range(3):
            out[:, a, b] = p[SYM3_INDEX[a, b]]
    return out


def sym3_inv_fields(p):
    """Packed symmetric 3x3 inverse over fields; returns (inv (6,n), det (n))."""
    a, b, c, d, e, f = p
    det = a * (d * f - e * e) - b * (b * f - c * e) + c * (b * e - c * d)
    inv = np.empty_like(p)
    inv[0] = (d * f - e * e) / det
    inv[1] = (c * e - b * f) / det
    inv[2] = (b * e - c * d) / det
    inv[3] = (a * f - c * c) / det
    inv[4] = (b * c - a * e) / det
    inv[5] = (a * d - b * b) / det
    return inv, det


def adm_fields(g):
    """Vectorized 3+1 split: returns (alpha, beta_up(3,n), beta_dn(3,n),
    gam_up(6,n), sqrt_gamma)."""
    gam_up, det = sym3_inv_fields(g[4:10])
    if np.any(det <= 0):
        raise ValueError("spatial metric not positive definite somewhere")
    beta_dn = g[1:4]
    beta_up = np.empty_like(beta_dn)
    for i in range(3):
        beta_up[i] = sum(gam_up[SYM3_INDEX[i, j]] * beta_dn[j] for j in range(3))
    a2 = np.einsum("in,in->n", beta_up, beta_dn) - g[0]
    if np.any(a2 <= 0):
        raise ValueError("slice not spacelike somewhere")
    return np.sqrt(a2), beta_up, beta_dn, gam_up, np.sqrt(det)


def inv4_fields(g):
    """Packed inverse 4-metric over fields via batched linalg."""
    return pack4(np.linalg.inv(unpack4(g)))


def christoffel_terms(g, dg):
    """Gamma_abc (n,4,4,4), Gamma_a (4,n) and g^{ab} (n,4,4) from fields."""
    n = g.shape[-1]
    dgf = np.empty((4, n, 4, 4))
    for c in range(4):
        dgf[c] = unpack4(dg[c])
    gam = np.empty((n, 4, 4, 4))
    for a in range(4):
        for b in range(4):
            for c in range(4):
                gam[:, a, b, c] = 0.5 * (dgf[b][:, a, c] + dgf[c][:, a, b]
                                         - dgf[a][:, b, c])
    ginv = np.linalg.inv(unpack4(g))
    gam_tr = np.einsum("nbc,nabc->an", ginv, gam)
    return gam, gam_tr, ginv


def christoffel_trace_fields(g, dg):
    """Gamma_a = g^{bc} Gamma_abc over fields: (4, n)."""
    _, gam_tr, _ = christoffel_terms(g, dg)
    return gam_tr


def dchristoffel_trace_fields(g, dg, d2g):
    """d_c Gamma_a over fields: (4, 4, n) indexed [c, a].

    d2g[(c,d) pair, (a,b) pair, n] holds the second derivatives.
    """
    n = g.shape[-1]
    gam, _, ginv = christoffel_terms(g, dg)
    dgf = np.empty((4, n, 4, 4))
    for c in range(4):
        dgf[c] = unpack4(dg[c])
    # d_c g^{de} = -g^{da} g^{eb} d_c g_ab
    dginv = np.einsum("nda,neb,cnab->cnde", ginv, ginv, -dgf)
    d2 = np.empty((4, 4, n, 4, 4))
    for c in range(4):
        for d in range(4):
            d2[c, d] = unpack4(d2g[SYM4_INDEX[c, d]])
    # d_c Gamma_b(de) = (d2g[c,d][b,e] + d2g[c,e][b,d] - d2g[c,b][d,e]) / 2
    out = np.empty((4, 4, n))
    for c in range(4):
        for b in range(4):
            s = np.einsum("nde,nde->n", dginv[c], gam[:, b])
            for d in range(4):
                for e in range(4):
                    dcg = 0.5 * (d2[c, d][:, b, e] + d2[c, e][:, b, d]
                                 - d2[c, b][:, d, e])
                    s = s + ginv[:, d, e] * dcg
            out[c, b] = s
    return out
