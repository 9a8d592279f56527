"""Relativistic Euler sector: primitive/conserved conversion, fluxes,
geometric sources and the stress-energy tensor.

Conserved variables are densitized, q = sqrt(gamma) * (D, S_1, S_2, S_3, E)
with D = rho W, S_i = rho h W^2 v_i, E = rho h W^2 - p. The evolution
always uses the ideal-gas closure; polytropic initial data only fixes the
initial internal energy from p = K rho^gamma.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from . import tensors as tk
from .state import SYM3_INDEX, SYM4_INDEX

_S3 = SYM3_INDEX
_S4 = SYM4_INDEX

C2P_OK = 0
C2P_VACUUM = 1
C2P_NO_CONVERGENCE = 2

P_FLOOR = 1e-20
C2P_RTOL = 1e-14
C2P_MAX_ITER = 200


class ConsToPrimError(RuntimeError):
    pass


@dataclass
class EoS:
    kind: str = "ideal"          # "ideal" or "polytropic"
    gamma: float = 5.0 / 3.0
    K: float = 1.0

    def __post_init__(self):
        if self.gamma <= 1.0:
            raise ValueError("adiabatic index must exceed 1")
        if self.kind not in ("ideal", "polytropic"):
            raise ValueError(f"unknown EoS kind {self.kind!r}")
        if self.kind == "polytropic" and self.K <= 0.0:
            raise ValueError("polytropic constant must be positive")

    def pressure_from_density(self, rho):
        """Cold-polytrope pressure, used only to set up initial data."""
        return self.K * np.asarray(rho) ** self.gamma


@njit(cache=True)
def enthalpy(rho, p, gam):
    if rho <= 0.0:
        return 1.0
    return 1.0 + gam / (gam - 1.0) * p / rho


@njit(cache=True)
def lorentz_w(prim, gam_dn):
    """Lorentz factor from v^i and the packed spatial metric; -1 if v^2 >= 1."""
    v2 = 0.0
    for i in range(3):
        for j in range(3):
            v2 += gam_dn[_S3[i, j]] * prim[1 + i] * prim[1 + j]
    if v2 >= 1.0:
        return -1.0
    return 1.0 / np.sqrt(1.0 - v2)


@njit(cache=True)
def prim2cons_point(prim, gam_dn, sqrtg, gam, q):
    """Conserved variables from (rho, v^i, p), densitized by sqrt(gamma).

    Returns 0 on success, 1 for superluminal input.
    """
    rho, p = prim[0], prim[4]
    w = lorentz_w(prim, gam_dn)
    if w < 0.0:
        return 1
    h = enthalpy(rho, p, gam)
    rhw2 = rho * h * w * w
    q[0] = sqrtg * rho * w
    for i in range(3):
        vd = 0.0
        for j in range(3):
            vd += gam_dn[_S3[i, j]] * prim[1 + j]
        q[1 + i] = sqrtg * rhw2 * vd
    q[4] = sqrtg * (rhw2 - p)
    return 0


@njit(cache=True)
def cons2prim_point(q, gam_up, sqrtg, gam, vac_thresh, prim):
    """Recover (rho, v^i, p) from densitized conserved variables.

    Safeguarded Newton on f(p) = rho h W^2 - p - E with a maintained
    bisection bracket. Unphysical or near-vacuum inputs return the vacuum
    state (the conversion "filter"); only failure to converge on a valid
    bracket reports C2P_NO_CONVERGENCE.
    """
    for k in range(5):
        prim[k] = 0.0
    if sqrtg <= 0.0 or q[0] < vac_thresh * sqrtg:
        return C2P_VACUUM
    d = q[0] / sqrtg
    e = q[4] / sqrtg
    s_up = np.empty(3)
    s2 = 0.0
    for i in range(3):
        si = 0.0
        for j in range(3):
            si += gam_up[_S3[i, j]] * q[1 + j] / sqrtg
        s_up[i] = si
        s2 += si * q[1 + i] / sqrtg
    if e <= 0.0 or e * e <= s2 or d <= 0.0:
        return C2P_VACUUM
    k_eos = gam / (gam - 1.0)

    # bracket: f(p -> 0+) < 0 for physical states; grow p_hi until f > 0
    p_lo = P_FLOOR
    p_hi = max((gam - 1.0) * (e - d), 1e-16 * e)
    f_hi = -1.0
    for _ in range(200):
        v2 = s2 / ((e + p_hi) * (e + p_hi))
        w = 1.0 / np.sqrt(1.0 - v2)
        f_hi = d * w + k_eos * p_hi * w * w - p_hi - e
        if f_hi > 0.0:
            break
        p_hi *= 2.0
    if f_hi <= 0.0:
        return C2P_VACUUM

    p = min(max((gam - 1.0) * (e - d), P_FLOOR), p_hi)
    converged = False
    for _ in range(C2P_MAX_ITER):
        ep = e + p
        v2 = s2 / (ep * ep)
        w = 1.0 / np.sqrt(1.0 - v2)
        f = d * w + k_eos * p * w * w - p - e
        if f > 0.0:
            p_hi = p
        else:
            p_lo = p
        dv2 = -2.0 * s2 / (ep * ep * ep)
        dw = 0.5 * w * w * w * dv2
        df = d * dw + k_eos * w * w + 2.0 * k_eos * p * w * dw - 1.0
        step = -f / df if df != 0.0 else 0.0
        p_new = p + step
        if not (p_lo < p_new < p_hi):
            p_new = 0.5 * (p_lo + p_hi)
        if abs(p_new - p) <= C2P_RTOL * max(p_new, P_FLOOR):
            p = p_new
            converged = True
            break
        p = p_new
    if not converged and (p_hi - p_lo) > 1e-10 * max(p_hi, 1.0):
        return C2P_NO_CONVERGENCE

    ep = e + p
    v2 = s2 / (ep * ep)
    w = 1.0 / np.sqrt(1.0 - v2)
    prim[0] = d / w
    for i in range(3):
        prim[1 + i] = s_up[i] / ep
    prim[4] = p
    return C2P_OK


@njit(cache=True, parallel=True)
def cons2prim_field(q, gam_up, sqrtg, gam, vac_thresh, prim, status):
    """Vectorized recovery over flattened points; q is (5, n), gam_up (6, n)."""
    n = q.shape[1]
    for idx in prange(n):
        qq = np.empty(5)
        pp = np.empty(5)
        gu = np.empty(6)
        for k in range(5):
            qq[k] = q[k, idx]
        for k in range(6):
            gu[k] = gam_up[k, idx]
        status[idx] = cons2prim_point(qq, gu, sqrtg[idx], gam, vac_thresh, pp)
        for k in range(5):
            prim[k, idx] = pp[k]


@njit(cache=True)
def euler_flux_point(prim, q, adm, axis, f):
    """Densitized Euler flux along one coordinate axis."""
    alpha = adm[tk.ADM_ALPHA]
    beta_i = adm[tk.ADM_BETAU + axis]
    sqrtg = adm[tk.ADM_SQRTG]
    vi = prim[1 + axis]
    p = prim[4]
    adv = alpha * vi - beta_i
    f[0] = adv * q[0]
    for j in range(3):
        f[1 + j] = adv * q[1 + j]
    f[1 + axis] += alpha * sqrtg * p
    f[4] = adv * q[4] + alpha * sqrtg * p * vi


@njit(cache=True)
def extrinsic_curvature_point(pi, phi, adm, kk):
    """K_ij solved from the Pi/K relation, with d gamma read from Phi."""
    alpha = adm[tk.ADM_ALPHA]
    gam_up = adm[tk.ADM_GAMU:tk.ADM_GAMU + 6]
    dbeta = np.empty((3, 3))      # covariant D_i beta_j
    for i in range(3):
        for j in range(3):
            s = phi[10 * i + _S4[0, 1 + j]]      # d_i beta_j = d_i g_0j
            for k in range(3):
                g3 = 0.0
                for l in range(3):
                    g3 += gam_up[_S3[k, l]] * (phi[10 * i + _S4[1 + l, 1 + j]]
                                               + phi[10 * j + _S4[1 + l, 1 + i]]
                                               - phi[10 * l + _S4[1 + i, 1 + j]])
                s -= 0.5 * g3 * adm[tk.ADM_BETAD + k]
            dbeta[i, j] = s
    m = 0
    for i in range(3):
        for j in range(i, 3):
            lie = 0.0
            for k in range(3):
                lie += adm[tk.ADM_BETAU + k] * phi[10 * k + _S4[1 + i, 1 + j]]
            kk[m] = 0.5 * (pi[_S4[1 + i, 1 + j]] - lie / alpha
                           + (dbeta[i, j] + dbeta[j, i]) / alpha)
            m += 1


@njit(cache=True)
def euler_sources_point(prim, q, adm, phi, pi, src):
    """Geometric sources of the momentum and energy equations.

    Metric gradients are read from Phi, so the source is algebraic in the
    state vector (this is what makes the well-balanced subtraction exact).
    """
    for k in range(5):
        src[k] = 0.0
    if prim[0] <= 0.0:
        return
    alpha = adm[tk.ADM_ALPHA]
    sqrtg = adm[tk.ADM_SQRTG]
    gam_up = adm[tk.ADM_GAMU:tk.ADM_GAMU + 6]
    p = prim[4]
    e = q[4] / sqrtg
    rhw2 = e + p                  # rho h W^2
    if rhw2 <= 0.0:
        return
    s_dn = np.empty(3)
    s_up = np.empty(3)
    for i in range(3):
        s_dn[i] = q[1 + i] / sqrtg
    for i in range(3):
        s = 0.0
        for j in range(3):
            s += gam_up[_S3[i, j]] * s_dn[j]
        s_up[i] = s

    dalpha = np.empty(3)
    dbeta_up = np.empty((3, 3))   # [j, i] = d_j beta^i
    tk.gauge_gradients_from_phi(phi, adm, dalpha, dbeta_up)

    s_uu = np.empty((3, 3))       # S^{ik} = S^i S^k / (rho h W^2) + p gamma^{ik}
    for i in range(3):
        for k in range(3):
            s_uu[i, k] = s_up[i] * s_up[k] / rhw2 + p * gam_up[_S3[i, k]]

    kk = np.empty(6)
    extrinsic_curvature_point(pi, phi, adm, kk)

    for j in range(3):
        mom = 0.0
        for i in range(3):
            for k in range(3):
                mom += 0.5 * alpha * s_uu[i, k] * phi[10 * j + _S4[1 + i, 1 + k]]
            mom += s_dn[i] * dbeta_up[j, i]
        mom -= e * dalpha[j]
        src[1 + j] = sqrtg * mom
    en = 0.0
    for i in range(3):
        for j in range(3):
            en += alpha * s_uu[i, j] * kk[_S3[i, j]]
        en -= s_up[i] * dalpha[i]
    src[4] = sqrtg * en


@njit(cache=True)
def stress_energy(prim, g, gam, t_dn):
    """T_ab = rho h u_a u_b + p g_ab (packed). Returns 0 on success."""
    rho, p = prim[0], prim[4]
    if rho <= 0.0 and p <= 0.0:
        for k in range(10):
            t_dn[k] = 0.0
        return 0
    adm = np.empty(tk.ADM_LEN)
    if tk.adm_from_g(g, adm) != 0:
        return 1
    alpha = adm[tk.ADM_ALPHA]
    w = lorentz_w(prim, g[4:10])
    if w < 0.0:
        return 1
    h = enthalpy(rho, p, gam)
    u_up = np.empty(4)
    u_up[0] = w / alpha
    for i in range(3):
        u_up[1 + i] = w * (prim[1 + i] - adm[tk.ADM_BETAU + i] / alpha)
    u_dn = np.empty(4)
    tk.lower4(g, u_up, u_dn)
    k = 0
    for a in range(4):
        for b in range(a, 4):
            t_dn[k] = rho * h * u_dn[a] * u_dn[b] + p * g[k]
            k += 1
    return 0


@njit(cache=True)
def sound_speed(rho, p, gam):
    if rho <= 0.0:
        return 0.0
    h = enthalpy(rho, p, gam)
    cs2 = gam * p / (rho * h)
    if cs2 < 0.0:
        cs2 = 0.0
    if cs2 > 1.0:
        cs2 = 1.0
    return np.sqrt(cs2)


@njit(cache=True)
def fluid_max_speed(prim, adm, gam_dn, gam):
    """Largest |lambda| of the relativistic Euler cone over the three axes."""
    rho, p = prim[0], prim[4]
    if rho <= 0.0:
        return 0.0
    alpha = adm[tk.ADM_ALPHA]
    gam_up = adm[tk.ADM_GAMU:tk.ADM_GAMU + 6]
    cs = sound_speed(rho, p, gam)
    cs2 = cs * cs
    v2 = 0.0
    for i in range(3):
        for j in range(3):
            v2 += gam_dn[_S3[i, j]] * prim[1 + i] * prim[1 + j]
    if v2 >= 1.0:
        v2 = 1.0 - 1e-12
    smax = 0.0
    for i in range(3):
        vi = prim[1 + i]
        gii = gam_up[_S3[i, i]]
        disc = (1.0 - v2) * (gii * (1.0 - v2 * cs2) - vi * vi * (1.0 - cs2))
        if disc < 0.0:
            disc = 0.0
        root = cs * np.sqrt(disc)
        denom = 1.0 - v2 * cs2
        lp = alpha * (vi * (1.0 - cs2) + root) / denom - adm[tk.ADM_BETAU + i]
        lm = alpha * (vi * (1.0 - cs2) - root) / denom - adm[tk.ADM_BETAU + i]
        s = max(abs(lp), abs(lm))
        if s > smax:
            smax = s
    return smax


# ---------------------------------------------------------------------------
# python-facing wrappers
# ---------------------------------------------------------------------------

def prim2cons(rho, v_up, p, adm, eos):
    """Conserved 5-vector from primitives and an ADMQuantities split."""
    prim = np.array([rho, v_up[0], v_up[1], v_up[2], p], dtype=float)
    q = np.empty(5)
    ok = prim2cons_point(prim, np.ascontiguousarray(adm.gamma_down),
                         adm.sqrt_gamma, eos.gamma, q)
    if ok != 0:
        raise ValueError("superluminal velocity in prim2cons")
    return q


def cons2prim(q, adm, eos, vac_thresh=1e-11):
    """Primitive recovery; returns (rho, v_up, p). Vacuum filter applies."""
    prim = np.empty(5)
    status = cons2prim_point(np.ascontiguousarray(q, dtype=float),
                             np.ascontiguousarray(adm.gamma_up),
                             adm.sqrt_gamma, eos.gamma, vac_thresh, prim)
    if status == C2P_NO_CONVERGENCE:
        raise ConsToPrimError("pressure iteration failed to converge on a valid bracket")
    return prim[0], prim[1:4].copy(), prim[4]
