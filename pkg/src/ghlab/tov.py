"""Tolman-Oppenheimer-Volkoff equilibrium star and its isotropic-coordinate
sampler.

Integrates m(r), p(r), phi(r) outward with an adaptive 8th-order
Runge-Kutta (DOP853), detects the surface p -> 0, maps to the isotropic
radius via d(rbar)/rbar = (1 - 2m/r)^(-1/2) dr/r normalized so the
exterior matches isotropic Schwarzschild, and exposes monotone-cubic
interpolants of the metric functions with the star surface as a hard
breakpoint (no interpolation across it).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator

from .initial_data import SpacetimeSampler
from .state import idx_g


@dataclass
class TOVProfile:
    rho_c: float
    K: float
    gamma: float
    ode_tol: float
    mass: float = field(init=False)
    radius: float = field(init=False)          # Schwarzschild (areal) radius
    radius_iso: float = field(init=False)      # isotropic radius of the surface
    r: np.ndarray = field(init=False, repr=False)
    rbar: np.ndarray = field(init=False, repr=False)
    m: np.ndarray = field(init=False, repr=False)
    p: np.ndarray = field(init=False, repr=False)
    rho: np.ndarray = field(init=False, repr=False)
    phi: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self._solve()
        self._build_interpolants()

    # --- structure equations -------------------------------------------
    def _rho_of_p(self, p):
        return (max(p, 0.0) / self.K) ** (1.0 / self.gamma)

    def _rhs(self, r, y):
        p, m, phi, rbar = y
        rho = self._rho_of_p(p)
        h = 1.0 + self.gamma / (self.gamma - 1.0) * p / rho if rho > 0 else 1.0
        e = rho * h - p
        denom = r * (r - 2.0 * m)
        dp = -rho * h * (m + 4.0 * np.pi * r ** 3 * p) / denom
        dm = 4.0 * np.pi * r * r * e
        dphi = (m + 4.0 * np.pi * r ** 3 * p) / denom
        drbar = rbar / (r * np.sqrt(1.0 - 2.0 * m / r))
        return [dp, dm, dphi, drbar]

    def _solve(self):
        p_c = self.K * self.rho_c ** self.gamma
        h_c = 1.0 + self.gamma / (self.gamma - 1.0) * p_c / self.rho_c
        e_c = self.rho_c * h_c - p_c
        r0 = 1e-8
        # series start at the regular center
        p0 = p_c - (2.0 * np.pi / 3.0) * (e_c + p_c) * (e_c + 3.0 * p_c) * r0 ** 2
        m0 = (4.0 * np.pi / 3.0) * e_c * r0 ** 3
        phi0 = (2.0 * np.pi / 3.0) * (e_c + 3.0 * p_c) * r0 ** 2
        p_surf = p_c * 1e-22

        def hit_surface(r, y):
            return y[0] - p_surf
        hit_surface.terminal = True
        hit_surface.direction = -1

        sol = solve_ivp(self._rhs, (r0, 100.0), [p0, m0, phi0, r0],
                        method="DOP853", rtol=self.ode_tol,
                        atol=self.ode_tol * np.array([p_c, 1.0, 1.0, 1.0]) * 1e-3,
                        events=hit_surface, dense_output=True, max_step=0.25)
        if sol.t_events[0].size == 0:
            raise RuntimeError("TOV surface not found within r_max")
        r_end = sol.t_events[0][0]
        p_end, m_end, phi_end, rbar_end = sol.y_events[0][0]

        # linear-extrapolate the last stretch: near the surface rho is linear
        # in (R - r) for gamma=2-like polytropes, p ~ (R - r)^(gamma/(gamma-1))
        rho_end = self._rho_of_p(p_end)
        h_end = 1.0 + self.gamma / (self.gamma - 1.0) * p_end / rho_end
        dpdr = -rho_end * h_end * (m_end + 4.0 * np.pi * r_end ** 3 * p_end) \
            / (r_end * (r_end - 2.0 * m_end))
        # d rho / dr at the surface from dp/dr = K gamma rho^(gamma-1) drho/dr
        drhodr = dpdr / (self.K * self.gamma * rho_end ** (self.gamma - 1.0))
        self.radius = r_end + rho_end / abs(drhodr)
        self.mass = m_end

        # tabulate the interior on dense output
        n_tab = 12000
        r_tab = np.linspace(r0, r_end, n_tab)
        y_tab = sol.sol(r_tab)
        self.r = r_tab
        self.p = np.maximum(y_tab[0], 0.0)
        self.m = y_tab[1]
        phi_raw = y_tab[2]
        rbar_raw = y_tab[3]

        # append the true surface point
        self.r = np.append(self.r, self.radius)
        self.p = np.append(self.p, 0.0)
        self.m = np.append(self.m, self.mass)
        drbar_end = rbar_end / (r_end * np.sqrt(1.0 - 2.0 * m_end / r_end))
        phi_raw = np.append(phi_raw, phi_end + dphi_approx(
            r_end, self.radius, m_end, self.mass))
        rbar_raw = np.append(rbar_raw, rbar_end + drbar_end * (self.radius - r_end))

        self.rho = self._rho_of_p_vec(self.p)

        # normalize phi so alpha matches the exterior at the surface
        phi_surf_target = 0.5 * np.log(1.0 - 2.0 * self.mass / self.radius)
        self.phi = phi_raw + (phi_surf_target - phi_raw[-1])
        # rescale rbar so the surface matches isotropic Schwarzschild
        rbar_surf_target = 0.5 * (self.radius - self.mass
                                  + np.sqrt(self.radius * (self.radius - 2.0 * self.mass)))
        self.rbar = rbar_raw * (rbar_surf_target / rbar_raw[-1])
        self.radius_iso = rbar_surf_target

    def _rho_of_p_vec(self, p):
        return (np.maximum(p, 0.0) / self.K) ** (1.0 / self.gamma)

    # --- interpolants ----------------------------------------------------
    def _build_interpolants(self):
        rb = self.rbar
        # metric functions of the isotropic radius, interior only
        e2phi = np.exp(2.0 * self.phi)
        conf = (self.r / rb) ** 2          # e^{2 psibar}
        self._i_e2phi = PchipInterpolator(rb, e2phi)
        self._i_conf = PchipInterpolator(rb, conf)
        self._i_rho = PchipInterpolator(rb, self.rho)
        self._d_e2phi = self._i_e2phi.derivative()
        self._d_conf = self._i_conf.derivative()

    # --- exterior closed forms -------------------------------------------
    def exterior_e2phi(self, rb):
        f = (1.0 - 0.5 * self.mass / rb) / (1.0 + 0.5 * self.mass / rb)
        return f * f

    def exterior_conf(self, rb):
        return (1.0 + 0.5 * self.mass / rb) ** 4

    def metric_functions(self, rb):
        """(e^{2 phi}, e^{2 psibar}) and radial derivatives at isotropic radii."""
        rb = np.asarray(rb, dtype=float)
        inside = rb < self.radius_iso
        e2phi = np.where(inside, self._i_e2phi(np.minimum(rb, self.radius_iso)),
                         self.exterior_e2phi(np.maximum(rb, 1e-300)))
        conf = np.where(inside, self._i_conf(np.minimum(rb, self.radius_iso)),
                        self.exterior_conf(np.maximum(rb, 1e-300)))
        m = self.mass
        de_out = (2.0 * (1.0 - 0.5 * m / rb) / (1.0 + 0.5 * m / rb)
                  * (0.5 * m / rb ** 2 * (1.0 + 0.5 * m / rb)
                     + (1.0 - 0.5 * m / rb) * 0.5 * m / rb ** 2)
                  / (1.0 + 0.5 * m / rb) ** 2)
        dc_out = 4.0 * (1.0 + 0.5 * m / rb) ** 3 * (-0.5 * m / rb ** 2)
        de2phi = np.where(inside, self._d_e2phi(np.minimum(rb, self.radius_iso)), de_out)
        dconf = np.where(inside, self._d_conf(np.minimum(rb, self.radius_iso)), dc_out)
        return e2phi, conf, de2phi, dconf

    def density(self, rb):
        rb = np.asarray(rb, dtype=float)
        return np.where(rb < self.radius_iso,
                        np.maximum(self._i_rho(np.minimum(rb, self.radius_iso)), 0.0),
                        0.0)


def dphi_approx(r_end, r_surf, m_end, m_surf):
    """phi increment over the tiny extrapolated stretch to the surface."""
    r_mid = 0.5 * (r_end + r_surf)
    m_mid = 0.5 * (m_end + m_surf)
    return m_mid / (r_mid * (r_mid - 2.0 * m_mid)) * (r_surf - r_end)


def tov_solve(rho_c=1.28e-3, K=100.0, gamma_eos=2.0, ode_tol=1e-12):
    if rho_c <= 0 or K <= 0 or gamma_eos <= 1:
        raise ValueError("TOV parameters must be positive with gamma > 1")
    return TOVProfile(rho_c=rho_c, K=K, gamma=gamma_eos, ode_tol=ode_tol)


class TOVSampler(SpacetimeSampler):
    """Conformally flat isotropic-Cartesian chart of a TOV star.

    Inside the star the metric functions come from the profile
    interpolants; outside they are isotropic Schwarzschild. The optional
    pressure perturbation scales p by (1 + amp) everywhere inside.
    """

    coords = "cartesian"
    has_fluid = True
    default_gauge = "from_data"
    _R_FLOOR = 1e-8

    def __init__(self, profile, pressure_perturbation=0.0):
        self.profile = profile
        self.pressure_perturbation = pressure_perturbation

    def metric(self, t, x):
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        rb = np.maximum(np.sqrt(np.sum(x ** 2, axis=0)), self._R_FLOOR)
        e2phi, conf, _, _ = self.profile.metric_functions(rb)
        g = np.zeros((10, n))
        g[idx_g(0, 0)] = -e2phi
        g[idx_g(1, 1)] = conf
        g[idx_g(2, 2)] = conf
        g[idx_g(3, 3)] = conf
        return g

    def dmetric(self, t, x):
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        rb = np.maximum(np.sqrt(np.sum(x ** 2, axis=0)), self._R_FLOOR)
        _, _, de2phi, dconf = self.profile.metric_functions(rb)
        nvec = x / rb
        dg = np.zeros((4, 10, n))
        for k in range(3):
            dg[1 + k, idx_g(0, 0)] = -de2phi * nvec[k]
            for i in range(3):
                dg[1 + k, idx_g(1 + i, 1 + i)] = dconf * nvec[k]
        return dg

    def fluid(self, t, x):
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        rb = np.sqrt(np.sum(x ** 2, axis=0))
        rho = self.profile.density(rb)
        prim = np.zeros((5, n))
        prim[0] = rho
        prim[4] = (self.profile.K * rho ** self.profile.gamma
                   * (1.0 + self.pressure_perturbation))
        return prim

    def fd_scale(self, x):
        return np.full(np.asarray(x).shape[-1], 0.5)
