"""Stationary transonic spherical accretion onto a Schwarzschild black hole.

The flow is fixed by the critical radius r_c and the density there. With
u = |u^r| the radial 4-velocity and an isentropic ideal-gas flow
(p = K rho^gamma along streamlines), the two first integrals are

    mdot = 4 pi r^2 rho u          (mass flux)
    h^2 (1 - 2M/r + u^2) = const   (relativistic Bernoulli)

and the critical point conditions are u_c^2 = M / (2 r_c),
c_c^2 = u_c^2 / (1 - 3 u_c^2). Away from r_c the Bernoulli equation is
solved for u by bracketed root-finding on the branch that is subsonic
outside and supersonic inside the critical radius.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .initial_data import KerrSchildSpheroidalSampler


@dataclass
class MichelProfile:
    r_c: float
    rho_c: float
    gamma: float
    mass: float
    K: float = field(init=False)
    u_c: float = field(init=False)
    cs_c: float = field(init=False)
    mdot: float = field(init=False)
    bernoulli: float = field(init=False)

    def __post_init__(self):
        m, g = self.mass, self.gamma
        uc2 = m / (2.0 * self.r_c)
        cc2 = uc2 / (1.0 - 3.0 * uc2)
        if cc2 <= 0 or cc2 >= g - 1.0:
            raise ValueError("critical radius incompatible with the EoS")
        k_h = g / (g - 1.0)
        # c^2 = gamma y / (1 + k_h y) with y = K rho^(gamma-1)
        y_c = cc2 / (g - k_h * cc2)
        self.K = y_c / self.rho_c ** (g - 1.0)
        self.u_c = np.sqrt(uc2)
        self.cs_c = np.sqrt(cc2)
        h_c = 1.0 + k_h * y_c
        self.mdot = 4.0 * np.pi * self.r_c ** 2 * self.rho_c * self.u_c
        self.bernoulli = h_c ** 2 * (1.0 - 2.0 * m / self.r_c + uc2)

    def _h(self, rho):
        return 1.0 + self.gamma / (self.gamma - 1.0) * self.K * rho ** (self.gamma - 1.0)

    def _f(self, u, r):
        rho = self.mdot / (4.0 * np.pi * r * r * u)
        return (self._h(rho) ** 2 * (1.0 - 2.0 * self.mass / r + u * u)
                - self.bernoulli)

    def at_radius(self, r):
        """(rho, u, p) at one radius; u > 0 is the infall 4-velocity."""
        r = float(r)
        if abs(r - self.r_c) < 1e-13 * self.r_c:
            u = self.u_c
        elif r <= 2.0 * self.mass:
            # inside the horizon only the supersonic root exists;
            # the Bernoulli potential forces u^2 > 2M/r - 1
            lo = np.sqrt(2.0 * self.mass / r - 1.0) * (1.0 + 1e-12) + 1e-14
            hi = max(2.0 * self.u_c, 2.0 * lo)
            for _ in range(200):
                if self._f(hi, r) > 0.0:
                    break
                hi *= 2.0
            u = brentq(self._f, lo, hi, args=(r,), xtol=1e-16, rtol=8.9e-16)
        else:
            # the minimum of f(u) separates the sub- and supersonic roots
            def fprime(u):
                rho = self.mdot / (4.0 * np.pi * r * r * u)
                y = self.K * rho ** (self.gamma - 1.0)
                h = 1.0 + self.gamma / (self.gamma - 1.0) * y
                pot = 1.0 - 2.0 * self.mass / r + u * u
                return (-2.0 * h * self.gamma * y / u * pot + 2.0 * u * h * h)

            u_star = brentq(fprime, 1e-12, 50.0, xtol=1e-15, rtol=8.9e-16)
            if r > self.r_c:
                lo, hi = 1e-14, u_star
            else:
                lo, hi = u_star, max(4.0 * self.u_c, 2.0 * u_star)
                for _ in range(200):
                    if self._f(hi, r) > 0.0:
                        break
                    hi *= 2.0
            if self._f(lo, r) * self._f(hi, r) > 0:
                raise ValueError(f"no accretion root bracketed at r={r}")
            u = brentq(self._f, lo, hi, args=(r,), xtol=1e-16, rtol=8.9e-16)
        rho = self.mdot / (4.0 * np.pi * r * r * u)
        p = self.K * rho ** self.gamma
        return rho, u, p

    def derivatives_at(self, r):
        """(drho/dr, du/dr) by implicit differentiation of the integrals."""
        rho, u, _ = self.at_radius(r)
        g = self.gamma
        y = self.K * rho ** (g - 1.0)
        h = 1.0 + g / (g - 1.0) * y
        dh = g * y / rho                      # dh/drho = k_h K (g-1) rho^(g-2)
        pot = 1.0 - 2.0 * self.mass / r + u * u
        # F1 = 4 pi r^2 rho u - mdot,  F2 = h^2 pot - C
        a11 = 4.0 * np.pi * r * r * u
        a12 = 4.0 * np.pi * r * r * rho
        b1 = -8.0 * np.pi * r * rho * u
        a21 = 2.0 * h * dh * pot
        a22 = 2.0 * u * h * h
        b2 = -h * h * 2.0 * self.mass / (r * r)
        det = a11 * a22 - a12 * a21
        drho = (b1 * a22 - a12 * b2) / det
        du = (a11 * b2 - b1 * a21) / det
        return drho, du

    def table(self, radii):
        out = np.empty((3, len(radii)))
        for i, r in enumerate(radii):
            out[:, i] = self.at_radius(r)
        return out


def michel_solution(r_c=8.0, rho_c=1.0 / 16.0, gamma_eos=5.0 / 3.0, mass=1.0):
    if r_c <= 2.0 * mass:
        raise ValueError("critical radius must sit outside the horizon")
    return MichelProfile(r_c=r_c, rho_c=rho_c, gamma=gamma_eos, mass=mass)


class MichelSampler(KerrSchildSpheroidalSampler):
    """Michel flow on the Kerr-Schild spherical chart (horizon penetrating).

    The profile is built in Schwarzschild coordinates; only the time
    coordinate differs, and u^t transforms with dt_KS/dr = (2M/r)/(1-2M/r).
    The transformed u^t is evaluated in a rationalized form that stays
    regular across r = 2M.
    """

    has_fluid = True
    default_gauge = "from_data"

    def __init__(self, profile):
        super().__init__(mass=profile.mass)
        self.profile = profile

    def fluid(self, t, x):
        x = np.asarray(x, dtype=float)
        r = np.atleast_1d(x[0])
        n = r.shape[0]
        prim = np.zeros((5, n))
        m = self.mass
        for i, ri in enumerate(r):
            rho, u, p = self.profile.at_radius(ri)
            b = 2.0 * m / ri
            eps = 1.0 - b
            # u^t in KS time; [sqrt(eps + u^2) - b u] / eps, rationalized
            ut = (1.0 + (1.0 + b) * u * u) / (np.sqrt(eps + u * u) + b * u)
            alpha = 1.0 / np.sqrt(1.0 + b)
            w = alpha * ut
            beta_r = b / (1.0 + b)
            prim[0, i] = rho
            prim[1, i] = -u / w + beta_r / alpha
            prim[4, i] = p
        return prim
