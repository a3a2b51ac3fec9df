"""Gaussian scale mixture priors for image coefficient statistics."""

__version__ = "0.1.0"

from .errors import GsmError
from .prior import PriorParams, TabulatedCdf, draw_samples, moment, pdf, tabulate_cdf, variance

__all__ = [
    "__version__",
    "GsmError",
    "PriorParams",
    "TabulatedCdf",
    "draw_samples",
    "moment",
    "pdf",
    "tabulate_cdf",
    "variance",
]
