"""Frozen layout of the 59-component evolved state vector.

The state holds, in this order:

    slots  0..9   g_ab      spacetime metric, symmetric pair order
                            (00,01,02,03,11,12,13,22,23,33)
    slots 10..19  Pi_ab     conjugate variable -n^c d_c g_ab, same pair order
    slots 20..49  Phi_iab   spatial gradient d_i g_ab, i-major
                            (i=1 pairs, i=2 pairs, i=3 pairs)
    slots 50..53  H_a       gauge source vector
    slots 54..58  fluid     densitized conserved (sqrt(gamma) * {D, S_1, S_2, S_3, E})

This ordering is a frozen contract: dumps, the CLI `describe-state`
subcommand and both solvers all rely on it.
"""

import json

import numpy as np

NVAR = 59

# symmetric 4x4 pair order
SYM4_PAIRS = [(0, 0), (0, 1), (0, 2), (0, 3),
              (1, 1), (1, 2), (1, 3),
              (2, 2), (2, 3), (3, 3)]

# lookup (a, b) -> packed index, symmetric
SYM4_INDEX = np.zeros((4, 4), dtype=np.int64)
for _k, (_a, _b) in enumerate(SYM4_PAIRS):
    SYM4_INDEX[_a, _b] = _k
    SYM4_INDEX[_b, _a] = _k

# symmetric 3x3 pair order (for gamma_ij, K_ij)
SYM3_PAIRS = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
SYM3_INDEX = np.zeros((3, 3), dtype=np.int64)
for _k, (_a, _b) in enumerate(SYM3_PAIRS):
    SYM3_INDEX[_a, _b] = _k
    SYM3_INDEX[_b, _a] = _k

G0 = 0        # first metric slot
PI0 = 10      # first Pi slot
PHI0 = 20     # first Phi slot
H0 = 50       # first gauge-source slot
FLUID0 = 54   # first fluid slot
NFLUID = 5


def idx_g(a, b):
    return G0 + SYM4_INDEX[a, b]


def idx_pi(a, b):
    return PI0 + SYM4_INDEX[a, b]


def idx_phi(i, a, b):
    """i is the spatial derivative index, 1..3."""
    return PHI0 + 10 * (i - 1) + SYM4_INDEX[a, b]


def idx_h(a):
    return H0 + a


VARIABLE_NAMES = (
    ["g%d%d" % p for p in SYM4_PAIRS]
    + ["Pi%d%d" % p for p in SYM4_PAIRS]
    + ["Phi%d%d%d" % (i, p[0], p[1]) for i in (1, 2, 3) for p in SYM4_PAIRS]
    + ["H%d" % a for a in range(4)]
    + ["Dt", "St1", "St2", "St3", "Et"]
)
assert len(VARIABLE_NAMES) == NVAR


def state_index_map():
    """Machine-readable description of the 59-slot layout."""
    entries = []
    for k, name in enumerate(VARIABLE_NAMES):
        if k < PI0:
            block, meta = "g", {"pair": SYM4_PAIRS[k]}
        elif k < PHI0:
            block, meta = "Pi", {"pair": SYM4_PAIRS[k - PI0]}
        elif k < H0:
            i, rem = divmod(k - PHI0, 10)
            block, meta = "Phi", {"deriv": i + 1, "pair": SYM4_PAIRS[rem]}
        elif k < FLUID0:
            block, meta = "H", {"component": k - H0}
        else:
            block, meta = "fluid", {"component": ["Dt", "St1", "St2", "St3", "Et"][k - FLUID0]}
        entries.append({"slot": k, "name": name, "block": block, **meta})
    return {"nvar": NVAR, "ordering": "frozen", "variables": entries}


def describe_state_json():
    return json.dumps(state_index_map(), indent=2, default=str)


def minkowski_state():
    """Flat vacuum state vector (g = diag(-1,1,1,1), all else zero)."""
    u = np.zeros(NVAR)
    u[idx_g(0, 0)] = -1.0
    u[idx_g(1, 1)] = 1.0
    u[idx_g(2, 2)] = 1.0
    u[idx_g(3, 3)] = 1.0
    return u
