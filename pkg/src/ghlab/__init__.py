"""gh-lab: high-order solvers for the first-order generalized harmonic
Einstein-Euler system (CWENO finite differences and ADER-DG), with
optional well-balancing and a benchmark harness."""

import os

os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

if "GH_LAB_THREADS" in os.environ:
    os.environ["NUMBA_NUM_THREADS"] = os.environ["GH_LAB_THREADS"]

__version__ = "0.1.0"
