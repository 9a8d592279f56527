"""Four-metric algebra and 3+1 decomposition (validated, python-facing).

Thin wrappers around the packed numba kernels in :mod:`ghlab.tensors`,
adding the precondition checks and friendly containers the rest of the
code (initial data, diagnostics, tests) works with. Packed storage
follows ``state.SYM4_PAIRS``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import tensors as tk
from .state import SYM3_PAIRS, SYM4_INDEX, SYM4_PAIRS


class GeometryError(ValueError):
    pass


class SingularMetricError(GeometryError):
    pass


class NonSpacelikeSliceError(GeometryError):
    pass


def pack_sym4(m):
    """Pack a full symmetric 4x4 matrix to 10 components."""
    m = np.asarray(m, dtype=float)
    return np.array([m[a, b] for a, b in SYM4_PAIRS])


def unpack_sym4(p):
    p = np.asarray(p, dtype=float)
    out = np.empty(p.shape[:-1] + (4, 4))
    for a in range(4):
        for b in range(4):
            out[..., a, b] = p[..., SYM4_INDEX[a, b]]
    return out


def pack_sym3(m):
    m = np.asarray(m, dtype=float)
    return np.array([m[a, b] for a, b in SYM3_PAIRS])


def unpack_sym3(p):
    p = np.asarray(p, dtype=float)
    out = np.empty(p.shape[:-1] + (3, 3))
    for k, (a, b) in enumerate(SYM3_PAIRS):
        out[..., a, b] = p[..., k]
        out[..., b, a] = p[..., k]
    return out


def invert_sym4(g):
    """Inverse of a packed symmetric 4x4 via closed-form cofactors."""
    g = np.ascontiguousarray(g, dtype=float)
    out = np.empty(10)
    det = tk.sym4_inv(g, out)
    scale = np.max(np.abs(g))
    if not np.isfinite(det) or abs(det) < 1e-14 * max(scale, 1e-300) ** 4:
        raise SingularMetricError(f"metric determinant too small: {det!r}")
    return out


@dataclass
class ADMQuantities:
    """Lapse, shift, spatial metric and the normal observer of a slice."""

    alpha: float
    beta_up: np.ndarray
    beta_down: np.ndarray
    gamma_down: np.ndarray   # packed sym3
    gamma_up: np.ndarray     # packed sym3
    sqrt_gamma: float
    n_up: np.ndarray = field(default=None)
    n_down: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.n_up is None:
            self.n_up = np.concatenate(([1.0 / self.alpha], -self.beta_up / self.alpha))
        if self.n_down is None:
            self.n_down = np.array([-self.alpha, 0.0, 0.0, 0.0])


def adm_split(g):
    """3+1 decomposition of a packed metric per the standard line element."""
    g = np.ascontiguousarray(g, dtype=float)
    buf = np.empty(tk.ADM_LEN)
    if tk.adm_from_g(g, buf) != 0:
        raise NonSpacelikeSliceError(
            "spatial block not positive definite or beta.beta - g00 <= 0")
    return ADMQuantities(
        alpha=buf[tk.ADM_ALPHA],
        beta_up=buf[tk.ADM_BETAU:tk.ADM_BETAU + 3].copy(),
        beta_down=buf[tk.ADM_BETAD:tk.ADM_BETAD + 3].copy(),
        gamma_down=g[4:10].copy(),
        gamma_up=buf[tk.ADM_GAMU:tk.ADM_GAMU + 6].copy(),
        sqrt_gamma=buf[tk.ADM_SQRTG],
    )


def assemble_metric(adm):
    """Rebuild the packed 4-metric from (alpha, beta, gamma)."""
    g = np.empty(10)
    b2 = float(adm.beta_down @ adm.beta_up)
    g[0] = b2 - adm.alpha ** 2
    g[1:4] = adm.beta_down
    g[4:10] = adm.gamma_down
    return g


def time_derivative_of_metric(pi, phi, adm):
    """d_t g_ab = -alpha Pi_ab + beta^k Phi_kab."""
    pi = np.ascontiguousarray(pi, dtype=float)
    phi = np.ascontiguousarray(phi, dtype=float).reshape(30)
    buf = np.empty(tk.ADM_LEN)
    buf[tk.ADM_ALPHA] = adm.alpha
    buf[tk.ADM_BETAU:tk.ADM_BETAU + 3] = adm.beta_up
    out = np.empty(10)
    tk.dt_g_from_pi_phi(pi, phi, buf, out)
    return out


@dataclass
class Christoffel1:
    """First-kind Christoffel symbols, packed (4,10) on the last pair."""

    gamma_abc: np.ndarray
    gamma_a: np.ndarray


def christoffel_first(dt_g, phi, g_up):
    """Assemble Gamma_abc and its trace from the first-order variables.

    The spacetime gradient of g is (dt_g, Phi); spatial derivatives must
    come from Phi so that Gamma stays exact on constraint-satisfying data.
    """
    dg = np.empty((4, 10))
    dg[0] = dt_g
    dg[1:] = np.asarray(phi, dtype=float).reshape(3, 10)
    gamma_l = np.empty((4, 10))
    tk.christoffel_first_kind(dg, gamma_l)
    gamma_a = np.empty(4)
    tk.christoffel_trace(gamma_l, np.ascontiguousarray(g_up, dtype=float), gamma_a)
    return Christoffel1(gamma_abc=gamma_l, gamma_a=gamma_a)
