"""Maximum-diffusion RL and trajectory synthesis on desk-scale environments."""

import os

# Single-threaded BLAS keeps per-run float reproducibility and avoids
# oversubscription when sweeps fan out worker processes.  Only effective if
# this package is imported before numpy initializes its backend.
for _v in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_v, "1")
del os, _v

__version__ = "0.1.0"
