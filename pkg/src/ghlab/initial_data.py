"""Catalog of analytic initial data and equilibria.

Each sampler maps chart coordinates to the packed metric, its analytic
first derivatives, optional second derivatives and fluid primitives; the
module-level helpers assemble full 59-component GH states, their spatial
gradients and exact time derivatives from those. All sampler methods are
vectorized over points: x has shape (3, n).

Second derivatives default to 8th-order central finite differences of the
analytic first derivatives (time rows vanish for stationary charts); the
wave charts override them with closed forms.
"""

import numpy as np

from . import fields as ff
from . import hydro
from .state import NVAR, SYM4_INDEX, idx_g, idx_h, idx_phi, idx_pi

_S4 = SYM4_INDEX

# 8th-order central first-derivative stencil
_FD8_OFF = np.arange(-4, 5)
_FD8_W = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0,
                   4 / 5, -1 / 5, 4 / 105, -1 / 280])


class SpacetimeSampler:
    """Base class: one chart of one spacetime, plus fluid if present."""

    coords = "cartesian"        # informational tag
    stationary = True
    has_fluid = False
    default_gauge = "zero"      # "zero" (H_a = 0) or "from_data" (H_a = -Gamma_a)
    excision_half_edge = None   # cube half-edge for cartesian BH charts
    fd_step = 0.02              # base step for FD second derivatives

    def metric(self, t, x):
        raise NotImplementedError

    def dmetric(self, t, x):
        raise NotImplementedError

    def fluid(self, t, x):
        """(5, n) primitives (rho, v^1, v^2, v^3, p), or None for vacuum."""
        return None

    def fd_scale(self, x):
        """Local length scale for FD steps (chart-dependent)."""
        return np.ones(x.shape[-1])

    def d2metric(self, t, x):
        """Second derivatives (10 derivative-pairs, 10 components, n).

        Default: finite differences of the analytic first derivatives in
        the spatial directions; valid only for stationary charts (pure- and
        mixed-time rows are then zero or FD of a time-independent field).
        """
        if not self.stationary:
            raise NotImplementedError("non-stationary charts must override d2metric")
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        out = np.zeros((10, 10, n))
        h = self.fd_step * self.fd_scale(x)
        for j in range(3):
            acc = np.zeros((4, 10, n))
            for off, w in zip(_FD8_OFF, _FD8_W):
                if w == 0.0:
                    continue
                xs = x.copy()
                xs[j] += off * h
                acc += w * self.dmetric(t, xs)
            acc /= h
            # acc[c] = d_j (d_c g); mixed spatial pairs are visited from both
            # sides of the pair and averaged, the rest only once
            for c in range(4):
                if c == 0 or c == 1 + j:
                    out[_S4[1 + j, c]] += acc[c]
                else:
                    out[_S4[1 + j, c]] += 0.5 * acc[c]
        return out


# ---------------------------------------------------------------------------
# flat space and the wave tests
# ---------------------------------------------------------------------------

class MinkowskiSampler(SpacetimeSampler):
    coords = "cartesian"

    def metric(self, t, x):
        n = np.asarray(x).shape[-1]
        g = np.zeros((10, n))
        g[idx_g(0, 0)] = -1.0
        g[idx_g(1, 1)] = 1.0
        g[idx_g(2, 2)] = 1.0
        g[idx_g(3, 3)] = 1.0
        return g

    def dmetric(self, t, x):
        n = np.asarray(x).shape[-1]
        return np.zeros((4, 10, n))

    def d2metric(self, t, x):
        n = np.asarray(x).shape[-1]
        return np.zeros((10, 10, n))


class LinearizedWaveSampler(SpacetimeSampler):
    """Small wave on flat space: gamma_22 = 1 + b, gamma_33 = 1 - b,
    b = eps sin(2 pi (x - t))."""

    stationary = False

    def __init__(self, eps=1e-8):
        self.eps = eps

    def _b(self, t, x):
        s = 2.0 * np.pi * (x[0] - t)
        b = self.eps * np.sin(s)
        bs = 2.0 * np.pi * self.eps * np.cos(s)          # d b / d(x)
        bss = -(2.0 * np.pi) ** 2 * self.eps * np.sin(s)  # d2 b / dx2
        return b, bs, bss

    def metric(self, t, x):
        x = np.asarray(x, dtype=float)
        b, _, _ = self._b(t, x)
        g = MinkowskiSampler().metric(t, x)
        g[idx_g(2, 2)] = 1.0 + b
        g[idx_g(3, 3)] = 1.0 - b
        return g

    def dmetric(self, t, x):
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        _, bs, _ = self._b(t, x)
        dg = np.zeros((4, 10, n))
        dg[0, idx_g(2, 2)] = -bs          # d_t b = -d_x b
        dg[0, idx_g(3, 3)] = bs
        dg[1, idx_g(2, 2)] = bs
        dg[1, idx_g(3, 3)] = -bs
        return dg

    def d2metric(self, t, x):
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        _, _, bss = self._b(t, x)
        out = np.zeros((10, 10, n))
        for (c, d), sgn in (((0, 0), 1.0), ((0, 1), -1.0), ((1, 1), 1.0)):
            out[_S4[c, d], idx_g(2, 2)] = sgn * bss
            out[_S4[c, d], idx_g(3, 3)] = -sgn * bss
        return out


class GaugeWaveSampler(SpacetimeSampler):
    """Flat space in wavy coordinates: g_00 = -H, g_11 = H,
    H = 1 - A sin(2 pi (x - t)). Harmonic, so H_a = 0."""

    stationary = False

    def __init__(self, amplitude):
        if amplitude >= 1.0:
            raise ValueError("gauge-wave amplitude must be < 1 (H would vanish)")
        self.amplitude = amplitude

    def _h(self, t, x):
        s = 2.0 * np.pi * (x[0] - t)
        hh = 1.0 - self.amplitude * np.sin(s)
        hs = -2.0 * np.pi * self.amplitude * np.cos(s)           # dH/dx
        hss = (2.0 * np.pi) ** 2 * self.amplitude * np.sin(s)    # d2H/dx2
        return hh, hs, hss

    def metric(self, t, x):
        x = np.asarray(x, dtype=float)
        hh, _, _ = self._h(t, x)
        g = MinkowskiSampler().metric(t, x)
        g[idx_g(0, 0)] = -hh
        g[idx_g(1, 1)] = hh
        return g

    def dmetric(self, t, x):
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        _, hs, _ = self._h(t, x)
        dg = np.zeros((4, 10, n))
        dg[0, idx_g(0, 0)] = hs           # d_t(-H) = +dH/dx
        dg[0, idx_g(1, 1)] = -hs
        dg[1, idx_g(0, 0)] = -hs
        dg[1, idx_g(1, 1)] = hs
        return dg

    def d2metric(self, t, x):
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        _, _, hss = self._h(t, x)
        out = np.zeros((10, 10, n))
        for (c, d), sgn in (((0, 0), 1.0), ((0, 1), -1.0), ((1, 1), 1.0)):
            out[_S4[c, d], idx_g(0, 0)] = -sgn * hss
            out[_S4[c, d], idx_g(1, 1)] = sgn * hss
        return out


# ---------------------------------------------------------------------------
# black holes
# ---------------------------------------------------------------------------

class KerrSchildCartesianSampler(SpacetimeSampler):
    """Kerr(-Schild) in Cartesian form, g = eta + 2 H l l; a = 0 gives
    Schwarzschild. Spin axis is z; the ring singularity has radius a."""

    coords = "cartesian"
    default_gauge = "from_data"

    def __init__(self, mass=1.0, spin=0.0):
        if abs(spin) >= mass:
            raise ValueError("need |a| < M")
        self.mass = mass
        self.spin = spin
        self.excision_half_edge = 1.0 if abs(spin) < 0.75 else 1.5

    def fd_scale(self, x):
        r = np.sqrt(np.sum(np.asarray(x, dtype=float) ** 2, axis=0))
        return np.maximum(1.0, 0.5 * r)

    def _hl(self, x):
        """H, l_a and their spatial gradients."""
        a = self.spin
        m = self.mass
        xx, yy, zz = x
        rho2 = xx * xx + yy * yy + zz * zz
        if a == 0.0:
            r = np.sqrt(rho2)
            dr = x / r
        else:
            half = 0.5 * (rho2 - a * a)
            s = np.sqrt(half * half + a * a * zz * zz)
            r2 = half + s
            r = np.sqrt(r2)
            # d(r^2)/dx_k = x_k (1 + half/s) + (a^2 z / s) delta_k3
            dr2 = x * (1.0 + half / s)
            dr2[2] += a * a * zz / s
            dr = dr2 / (2.0 * r)
        r2 = r * r
        denom = r2 * r2 + a * a * zz * zz
        hh = m * r * r2 / denom
        # dH = M [3 r^2 dr (r^4 + a^2 z^2) - r^3 (4 r^3 dr + 2 a^2 z dz)] / denom^2
        dh = np.empty_like(x, dtype=float)
        for k in range(3):
            dz = 1.0 if k == 2 else 0.0
            dh[k] = m * (3.0 * r2 * dr[k] * denom
                         - r * r2 * (4.0 * r2 * r * dr[k] + 2.0 * a * a * zz * dz)) / denom ** 2
        ra = r2 + a * a
        l = np.empty((4, x.shape[-1]))
        dl = np.zeros((3, 4, x.shape[-1]))
        l[0] = 1.0
        l[1] = (r * xx + a * yy) / ra
        l[2] = (r * yy - a * xx) / ra
        l[3] = zz / r
        for k in range(3):
            dxk = np.zeros(3)
            dxk[k] = 1.0
            dl[k, 1] = ((dr[k] * xx + r * dxk[0] + a * dxk[1]) * ra
                        - (r * xx + a * yy) * 2.0 * r * dr[k]) / ra ** 2
            dl[k, 2] = ((dr[k] * yy + r * dxk[1] - a * dxk[0]) * ra
                        - (r * yy - a * xx) * 2.0 * r * dr[k]) / ra ** 2
            dl[k, 3] = (dxk[2] - zz * dr[k] / r) / r
        return hh, dh, l, dl

    def metric(self, t, x):
        x = np.asarray(x, dtype=float)
        hh, _, l, _ = self._hl(x)
        g = MinkowskiSampler().metric(t, x)
        k = 0
        for a in range(4):
            for b in range(a, 4):
                g[k] += 2.0 * hh * l[a] * l[b]
                k += 1
        return g

    def dmetric(self, t, x):
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        hh, dh, l, dl = self._hl(x)
        dg = np.zeros((4, 10, n))
        for j in range(3):
            k = 0
            for a in range(4):
                for b in range(a, 4):
                    dg[1 + j, k] = 2.0 * (dh[j] * l[a] * l[b]
                                          + hh * dl[j, a] * l[b]
                                          + hh * l[a] * dl[j, b])
                    k += 1
        return dg


class KerrSchildSpheroidalSampler(SpacetimeSampler):
    """Schwarzschild in Kerr-Schild spherical coordinates (r, theta, phi):
    horizon-penetrating, g_tr = 2M/r."""

    coords = "spherical"
    default_gauge = "from_data"

    def __init__(self, mass=1.0):
        self.mass = mass

    def metric(self, t, x):
        x = np.asarray(x, dtype=float)
        r, th = x[0], x[1]
        n = x.shape[-1]
        m = self.mass
        g = np.zeros((10, n))
        g[idx_g(0, 0)] = -(1.0 - 2.0 * m / r)
        g[idx_g(0, 1)] = 2.0 * m / r
        g[idx_g(1, 1)] = 1.0 + 2.0 * m / r
        g[idx_g(2, 2)] = r * r
        g[idx_g(3, 3)] = (r * np.sin(th)) ** 2
        return g

    def dmetric(self, t, x):
        x = np.asarray(x, dtype=float)
        r, th = x[0], x[1]
        n = x.shape[-1]
        m = self.mass
        dg = np.zeros((4, 10, n))
        dg[1, idx_g(0, 0)] = -2.0 * m / r ** 2
        dg[1, idx_g(0, 1)] = -2.0 * m / r ** 2
        dg[1, idx_g(1, 1)] = -2.0 * m / r ** 2
        dg[1, idx_g(2, 2)] = 2.0 * r
        dg[1, idx_g(3, 3)] = 2.0 * r * np.sin(th) ** 2
        dg[2, idx_g(3, 3)] = 2.0 * r * r * np.sin(th) * np.cos(th)
        return dg

    def d2metric(self, t, x):
        x = np.asarray(x, dtype=float)
        r, th = x[0], x[1]
        n = x.shape[-1]
        m = self.mass
        out = np.zeros((10, 10, n))
        sin, cos = np.sin(th), np.cos(th)
        out[_S4[1, 1], idx_g(0, 0)] = 4.0 * m / r ** 3
        out[_S4[1, 1], idx_g(0, 1)] = 4.0 * m / r ** 3
        out[_S4[1, 1], idx_g(1, 1)] = 4.0 * m / r ** 3
        out[_S4[1, 1], idx_g(2, 2)] = 2.0
        out[_S4[1, 1], idx_g(3, 3)] = 2.0 * sin ** 2
        out[_S4[1, 2], idx_g(3, 3)] = 4.0 * r * sin * cos
        out[_S4[2, 2], idx_g(3, 3)] = 2.0 * r * r * (cos ** 2 - sin ** 2)
        return out


class BoyerLindquistSampler(SpacetimeSampler):
    """Kerr in Boyer-Lindquist coordinates (r, theta, phi); a = 0 is
    Schwarzschild. Valid outside the outer horizon."""

    coords = "spherical"
    default_gauge = "from_data"

    def __init__(self, mass=1.0, spin=0.0):
        if abs(spin) >= mass:
            raise ValueError("need |a| < M")
        self.mass = mass
        self.spin = spin

    def fd_scale(self, x):
        return np.maximum(1.0, 0.25 * np.asarray(x, dtype=float)[0])

    def metric(self, t, x):
        x = np.asarray(x, dtype=float)
        r, th = x[0], x[1]
        n = x.shape[-1]
        m, a = self.mass, self.spin
        sin2 = np.sin(th) ** 2
        sigma = r * r + a * a * np.cos(th) ** 2
        delta = r * r - 2.0 * m * r + a * a
        g = np.zeros((10, n))
        g[idx_g(0, 0)] = -(1.0 - 2.0 * m * r / sigma)
        g[idx_g(0, 3)] = -2.0 * m * a * r * sin2 / sigma
        g[idx_g(1, 1)] = sigma / delta
        g[idx_g(2, 2)] = sigma
        g[idx_g(3, 3)] = (r * r + a * a + 2.0 * m * a * a * r * sin2 / sigma) * sin2
        return g

    def dmetric(self, t, x):
        x = np.asarray(x, dtype=float)
        r, th = x[0], x[1]
        n = x.shape[-1]
        m, a = self.mass, self.spin
        sin, cos = np.sin(th), np.cos(th)
        sin2 = sin * sin
        sigma = r * r + a * a * cos * cos
        delta = r * r - 2.0 * m * r + a * a
        ds_r = 2.0 * r
        ds_th = -2.0 * a * a * cos * sin
        dd_r = 2.0 * r - 2.0 * m
        dg = np.zeros((4, 10, n))
        dg[1, idx_g(0, 0)] = 2.0 * m * (sigma - r * ds_r) / sigma ** 2
        dg[2, idx_g(0, 0)] = -2.0 * m * r * ds_th / sigma ** 2
        dg[1, idx_g(0, 3)] = -2.0 * m * a * sin2 * (sigma - r * ds_r) / sigma ** 2
        dg[2, idx_g(0, 3)] = (-2.0 * m * a * r
                              * (2.0 * sin * cos * sigma - sin2 * ds_th) / sigma ** 2)
        dg[1, idx_g(1, 1)] = (ds_r * delta - sigma * dd_r) / delta ** 2
        dg[2, idx_g(1, 1)] = ds_th / delta
        dg[1, idx_g(2, 2)] = ds_r
        dg[2, idx_g(2, 2)] = ds_th
        dg[1, idx_g(3, 3)] = (2.0 * r * sin2
                              + 2.0 * m * a * a * sin2 * sin2 * (sigma - r * ds_r) / sigma ** 2)
        dg[2, idx_g(3, 3)] = ((r * r + a * a) * 2.0 * sin * cos
                              + 2.0 * m * a * a * r
                              * (4.0 * sin2 * sin * cos * sigma - sin2 * sin2 * ds_th)
                              / sigma ** 2)
        return dg


class HarmonicCartesianSampler(SpacetimeSampler):
    """Schwarzschild in Cartesian harmonic coordinates (r_harm = R - M).

    All four coordinates are harmonic, so Gamma_a = 0 and the harmonic
    gauge H_a = 0 applies. The chart is regular for r > M; the closed form
    is recorded in docs/charts.md.
    """

    coords = "cartesian"
    default_gauge = "zero"

    def __init__(self, mass=1.0):
        self.mass = mass

    def fd_scale(self, x):
        r = np.sqrt(np.sum(np.asarray(x, dtype=float) ** 2, axis=0))
        return np.maximum(0.5, 0.25 * r)

    def metric(self, t, x):
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        m = self.mass
        r = np.sqrt(np.sum(x ** 2, axis=0))
        nvec = x / r
        aa = (1.0 + m / r) ** 2
        bb = (r + m) / (r - m)
        g = np.zeros((10, n))
        g[idx_g(0, 0)] = -(r - m) / (r + m)
        k = 4
        for i in range(3):
            for j in range(i, 3):
                g[k] = (aa if i == j else 0.0) + (bb - aa) * nvec[i] * nvec[j]
                k += 1
        return g

    def dmetric(self, t, x):
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        m = self.mass
        r = np.sqrt(np.sum(x ** 2, axis=0))
        nvec = x / r
        aa = (1.0 + m / r) ** 2
        bb = (r + m) / (r - m)
        da = -2.0 * (1.0 + m / r) * m / r ** 2
        db = -2.0 * m / (r - m) ** 2
        d00 = -2.0 * m / (r + m) ** 2
        dg = np.zeros((4, 10, n))
        for kdir in range(3):
            nk = nvec[kdir]
            dg[1 + kdir, idx_g(0, 0)] = d00 * nk
            kk = 4
            for i in range(3):
                for j in range(i, 3):
                    dn_i = ((1.0 if i == kdir else 0.0) - nvec[i] * nk) / r
                    dn_j = ((1.0 if j == kdir else 0.0) - nvec[j] * nk) / r
                    val = (da * nk if i == j else 0.0)
                    val = val + (db - da) * nk * nvec[i] * nvec[j]
                    val = val + (bb - aa) * (dn_i * nvec[j] + nvec[i] * dn_j)
                    dg[1 + kdir, kk] = val
                    kk += 1
        return dg


class GaussianG00Perturbation(SpacetimeSampler):
    """Wraps a base sampler, adding a static Gaussian bump to g_00 (and its
    analytic spatial gradient to Phi_i00). Pi is left unchanged: the bump
    is initial data, not a solution."""

    def __init__(self, base, amplitude=1e-4, sigma=0.2, center=(4.0, 0.0)):
        self.base = base
        self.amplitude = amplitude
        self.sigma = sigma
        self.center = center
        self.coords = base.coords
        self.stationary = base.stationary
        self.has_fluid = base.has_fluid
        self.default_gauge = base.default_gauge
        self.excision_half_edge = base.excision_half_edge

    def _embed(self, x):
        """Chart -> (x, y) plane coordinates used by the bump."""
        x = np.asarray(x, dtype=float)
        if self.coords == "spherical":
            r, th = x[0], x[1]
            xx = r * np.sin(th)
            yy = r * np.cos(th)
            J = np.array([[np.sin(th), r * np.cos(th), np.zeros_like(r)],
                          [np.cos(th), -r * np.sin(th), np.zeros_like(r)]])
        else:
            xx, yy = x[0], x[1]
            one = np.ones_like(xx)
            zero = np.zeros_like(xx)
            J = np.array([[one, zero, zero], [zero, one, zero]])
        return xx, yy, J

    def bump(self, x):
        """Bump value and its chart-coordinate gradient (n,), (3, n)."""
        xx, yy, J = self._embed(x)
        dx = xx - self.center[0]
        dy = yy - self.center[1]
        val = self.amplitude * np.exp(-0.5 * (dx * dx + dy * dy) / self.sigma ** 2)
        dval_dxy = np.array([-dx / self.sigma ** 2 * val, -dy / self.sigma ** 2 * val])
        grad = np.einsum("pkn,pn->kn", J, dval_dxy)
        return val, grad

    def fd_scale(self, x):
        return self.base.fd_scale(x)

    def metric(self, t, x):
        g = self.base.metric(t, x)
        val, _ = self.bump(x)
        g[idx_g(0, 0)] = g[idx_g(0, 0)] + val
        return g

    def dmetric(self, t, x):
        dg = self.base.dmetric(t, x)
        _, grad = self.bump(x)
        for k in range(3):
            dg[1 + k, idx_g(0, 0)] = dg[1 + k, idx_g(0, 0)] + grad[k]
        return dg

    def fluid(self, t, x):
        return self.base.fluid(t, x)

    # marker: state assembly applies the bump on top of the base state,
    # leaving Pi untouched
    perturbs_pi = True


# ---------------------------------------------------------------------------
# state assembly
# ---------------------------------------------------------------------------

def gauge_source(sampler, t, x, mode=None):
    """H_a field of a sampler: zeros or -Gamma_a from the analytic data."""
    mode = mode or sampler.default_gauge
    x = np.asarray(x, dtype=float)
    if mode == "zero":
        return np.zeros((4, x.shape[-1]))
    if mode != "from_data":
        raise ValueError(f"unknown gauge mode {mode!r}")
    g = sampler.metric(t, x)
    dg = sampler.dmetric(t, x)
    return -ff.christoffel_trace_fields(g, dg)


def state_at(sampler, t, x, eos=None, gauge=None):
    """Assemble the 59-component state field (59, n) of a sampler."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] != 3:
        x = x.reshape(3, -1)
    n = x.shape[-1]
    base = getattr(sampler, "base", None) if getattr(sampler, "perturbs_pi", False) else None
    src = base if base is not None else sampler
    g = src.metric(t, x)
    dg = src.dmetric(t, x)
    alpha, beta_up, _, _, _ = ff.adm_fields(g)
    u = np.zeros((NVAR, n))
    u[0:10] = g
    for i in range(3):
        u[20 + 10 * i:30 + 10 * i] = dg[1 + i]
    # Pi = (beta^k Phi_k - d_t g) / alpha
    lie = np.einsum("in,ikn->kn", beta_up, dg[1:4])
    u[10:20] = (lie - dg[0]) / alpha
    u[50:54] = gauge_source(src, t, x, gauge)
    prim = sampler.fluid(t, x)
    if prim is not None:
        if eos is None:
            raise ValueError("sampler carries fluid: an EoS is required")
        _, _, _, _, sqrtg = ff.adm_fields(g)
        gam = ff.unpack3(g[4:10])          # (n, 3, 3)
        rho, p = prim[0], prim[4]
        v = prim[1:4]
        v2 = np.einsum("nkl,kn,ln->n", gam, v, v)
        w = 1.0 / np.sqrt(1.0 - v2)
        h = np.where(rho > 0.0,
                     1.0 + eos.gamma / (eos.gamma - 1.0) * p / np.where(rho > 0.0, rho, 1.0),
                     1.0)
        rhw2 = rho * h * w * w
        v_dn = np.einsum("nkl,ln->kn", gam, v)
        u[54] = sqrtg * rho * w
        for i in range(3):
            u[55 + i] = sqrtg * rhw2 * v_dn[i]
        u[58] = sqrtg * (rhw2 - p)
    if base is not None:
        # apply the g00 / Phi_i00 bump on top of the unperturbed Pi
        val, grad = sampler.bump(x)
        u[idx_g(0, 0)] += val
        for i in range(3):
            u[idx_phi(1 + i, 0, 0)] += grad[i]
    return u


def state_gradient(sampler, t, x, eos=None, gauge=None):
    """Spatial gradients (59, 3, n) of the assembled state.

    Fluid rows are left zero (no solver consumes them pointwise).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] != 3:
        x = x.reshape(3, -1)
    n = x.shape[-1]
    base = getattr(sampler, "base", None) if getattr(sampler, "perturbs_pi", False) else None
    src = base if base is not None else sampler
    g = src.metric(t, x)
    dg = src.dmetric(t, x)
    d2g = src.d2metric(t, x)
    alpha, beta_up, _, _, _ = ff.adm_fields(g)
    out = np.zeros((NVAR, 3, n))
    for j in range(3):
        out[0:10, j] = dg[1 + j]
        for i in range(3):
            out[20 + 10 * i:30 + 10 * i, j] = d2g[_S4[1 + j, 1 + i]]
    # d_j Pi: differentiate (beta^k Phi_k - d_t g) / alpha
    dal, dbu = _gauge_gradients(g, dg)
    pi = (np.einsum("in,ikn->kn", beta_up, dg[1:4]) - dg[0]) / alpha
    for j in range(3):
        s = -d2g[_S4[0, 1 + j]].copy()
        for k in range(3):
            s += dbu[j, k][None, :] * dg[1 + k]
            s += beta_up[k][None, :] * d2g[_S4[1 + j, 1 + k]]
        out[10:20, j] = s / alpha - pi * dal[j][None, :] / alpha
    mode = gauge or src.default_gauge
    if mode == "from_data":
        dgam = ff.dchristoffel_trace_fields(g, dg, d2g)
        for j in range(3):
            out[50:54, j] = -dgam[1 + j]
    if base is not None:
        val, grad = sampler.bump(x)
        d2b = _bump_second_derivs(sampler, x)
        for j in range(3):
            out[idx_g(0, 0), j] += grad[j]
            for i in range(3):
                out[idx_phi(1 + i, 0, 0), j] += d2b[j, i]
    return out


def state_time_derivative(sampler, t, x, gauge=None):
    """Exact d_t of the metric-sector state slots (59, n); fluid rows zero.

    Only meaningful for samplers with analytic second derivatives; used as
    the oracle for the evolution right-hand side.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] != 3:
        x = x.reshape(3, -1)
    n = x.shape[-1]
    g = sampler.metric(t, x)
    dg = sampler.dmetric(t, x)
    d2g = sampler.d2metric(t, x)
    alpha, beta_up, beta_dn, gam_up, _ = ff.adm_fields(g)
    out = np.zeros((NVAR, n))
    out[0:10] = dg[0]
    for i in range(3):
        out[20 + 10 * i:30 + 10 * i] = d2g[_S4[0, 1 + i]]
    # d_t Pi
    dtg = dg[0]
    dta, dtb = _dt_gauge(g, dtg, alpha, beta_up, beta_dn, gam_up)
    pi = (np.einsum("in,ikn->kn", beta_up, dg[1:4]) - dtg) / alpha
    s = -d2g[_S4[0, 0]].copy()
    for k in range(3):
        s += dtb[k][None, :] * dg[1 + k]
        s += beta_up[k][None, :] * d2g[_S4[0, 1 + k]]
    out[10:20] = s / alpha - pi * dta[None, :] / alpha
    return out


def _gauge_gradients(g, dg):
    """(d_j alpha, d_j beta^i) as ((3,n), (3,3,n)) from analytic dg."""
    alpha, beta_up, beta_dn, gam_up, _ = ff.adm_fields(g)
    n = g.shape[-1]
    gu = ff.unpack3(gam_up)
    dal = np.empty((3, n))
    dbu = np.empty((3, 3, n))
    for j in range(3):
        dgam = ff.unpack4(dg[1 + j])[:, 1:4, 1:4]
        dgu = -np.einsum("nia,nkb,nab->nik", gu, gu, dgam)
        dbeta_dn = np.array([dg[1 + j, _S4[0, 1 + i]] for i in range(3)])
        dbu[j] = (np.einsum("nik,kn->in", dgu, beta_dn)
                  + np.einsum("nik,kn->in", gu, dbeta_dn))
        num = (np.einsum("in,in->n", dbu[j], beta_dn)
               + np.einsum("in,in->n", beta_up, dbeta_dn))
        dal[j] = (num - dg[1 + j, _S4[0, 0]]) / (2.0 * alpha)
    return dal, dbu


def _dt_gauge(g, dtg, alpha, beta_up, beta_dn, gam_up):
    """(d_t alpha (n,), d_t beta^i (3,n)) from d_t g."""
    gu = ff.unpack3(gam_up)
    dtgam = ff.unpack4(dtg)[:, 1:4, 1:4]
    dgu = -np.einsum("nia,nkb,nab->nik", gu, gu, dtgam)
    dtbeta_dn = np.array([dtg[_S4[0, 1 + i]] for i in range(3)])
    dtb = (np.einsum("nik,kn->in", dgu, beta_dn)
           + np.einsum("nik,kn->in", gu, dtbeta_dn))
    num = (np.einsum("in,in->n", dtb, beta_dn)
           + np.einsum("in,in->n", beta_up, dtbeta_dn))
    dta = (num - dtg[_S4[0, 0]]) / (2.0 * alpha)
    return dta, dtb


def _bump_second_derivs(sampler, x):
    """FD second derivatives (3, 3, n) of a Gaussian bump wrapper."""
    h = 1e-4
    n = x.shape[-1]
    out = np.empty((3, 3, n))
    for j in range(3):
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        _, gp = sampler.bump(xp)
        _, gm = sampler.bump(xm)
        out[j] = (gp - gm) / (2.0 * h)
    return out


def robust_stability_perturbation(u, rho_factor, seed):
    """Add iid uniform noise in +-1e-7/rho^2 to every slot of a state field."""
    rng = np.random.default_rng(seed)
    amp = 1e-7 / rho_factor ** 2
    return u + rng.uniform(-amp, amp, size=u.shape)
