"""Douglis-Nirenberg systems of Fourier multipliers on the torus."""

from .operators import (
    Elliptic,
    FredholmReport,
    NotElliptic,
    apply,
    boundedness_certificate,
    dn_ellipticity_check,
    fredholm_solve,
    graded_norm,
    parametrix,
    parametrix_residuals,
)
from .regularity import (
    LocalizationWindow,
    apriori_estimate,
    classical_smoothness_check,
    regularity_experiment,
)
from .symbols import DNSystem, Polynomial, format_system, parse_polynomial, parse_system

__all__ = [
    "DNSystem",
    "Polynomial",
    "parse_polynomial",
    "parse_system",
    "format_system",
    "Elliptic",
    "NotElliptic",
    "dn_ellipticity_check",
    "apply",
    "graded_norm",
    "boundedness_certificate",
    "parametrix",
    "parametrix_residuals",
    "FredholmReport",
    "fredholm_solve",
    "regularity_experiment",
    "LocalizationWindow",
    "apriori_estimate",
    "classical_smoothness_check",
]
