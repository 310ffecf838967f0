"""brownflow: matrix Brownian motions and their limiting spectral densities.

Samplers for GUE/Ginibre ensembles and Brownian motions on the unitary and
general linear groups, the analytic densities of the corresponding limits
(uniform disk for the additive flow, the w_t(theta)/r^2 density on the
domain Sigma_t for the multiplicative flow), the Hamilton-Jacobi
characteristic machinery connecting them, and Monte Carlo comparison tools.
"""

from . import brown_analytic, cli, ensembles, free_moments, hj_engine, spectra
from .ensembles import BmPathSpec, RngHandle

__version__ = "0.1.0"

__all__ = [
    "BmPathSpec",
    "RngHandle",
    "brown_analytic",
    "cli",
    "ensembles",
    "free_moments",
    "hj_engine",
    "spectra",
    "__version__",
]
