"""Variational regularization for Poisson point-process observations.

Library and experiment harness for Tikhonov-type estimators with the
shifted Kullback-Leibler fidelity, convex penalties, a-priori and
balancing parameter choice, plus Monte Carlo studies of the resulting
convergence rates and of a concentration bound for the data noise.
"""

from ._kernels import BACKEND as kernel_backend

__all__ = ["kernel_backend"]
__version__ = "0.1.0"
