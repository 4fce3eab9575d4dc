"""Distribution of the SNR loss of adaptive filters.

Samplers for complex matrix-variate laws, covariance-mismatch scenarios,
fully and partially adaptive filters, closed-form and representation-based
SNR-loss laws, and a seeded Monte-Carlo runner that cross-checks them.
"""

from importlib.metadata import PackageNotFoundError, version as _version

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .distributions import BetaParams, Rng
from .laws import LossLaw, cdf_rho, pdf_rho, sample_rho, snr, snr_loss, snr_opt
from .kernels import BACKEND
from .scenarios import Scenario

__all__ = [
    "BACKEND", "BetaParams", "LossLaw", "Rng", "Scenario",
    "cdf_rho", "pdf_rho", "sample_rho", "snr", "snr_loss", "snr_opt",
    "__version__",
]
