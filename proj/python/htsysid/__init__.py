"""Robust identification of partially observed linear systems.

Simulation of heavy-tailed rollouts, bucketed least squares with
geometric-median boosting, Ho-Kalman realization, and the finite-sample
error bound, all backed by the C++ core.
"""

from htsysid._core import *  # noqa: F401,F403

__version__ = "0.1.0"
