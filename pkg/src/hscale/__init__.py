"""Extended Sobolev scale ``H^phi`` on the torus and the circle.

Function parameters (:mod:`hscale.params`), spectral sections and norms
(:mod:`hscale.torus_spaces`), interpolation with a function parameter
(:mod:`hscale.interpolation`), mixed-order elliptic Fourier multipliers
(:mod:`hscale.psdo`) and a two-chart atlas on the circle
(:mod:`hscale.charts`).
"""

from . import errors
from .params import (
    FunctionParameter,
    InterpParam,
    LogPower,
    Power,
    Product,
    Quotient,
    ScaledExp,
    InterpolationSetup,
    certify_or,
    interpolation_parameter,
    matuszewska_indices,
    parse,
    reiterate,
)
from .torus_spaces import (
    FrequencyLattice,
    SpectralSection,
    cq_embedding_check,
    dual_norm,
    embedding_check,
    h_norm,
    phi0_witness,
)

__version__ = "0.1.0"

__all__ = [
    "errors",
    "FunctionParameter",
    "Power",
    "LogPower",
    "Product",
    "Quotient",
    "ScaledExp",
    "InterpParam",
    "parse",
    "matuszewska_indices",
    "certify_or",
    "InterpolationSetup",
    "interpolation_parameter",
    "reiterate",
    "FrequencyLattice",
    "SpectralSection",
    "h_norm",
    "dual_norm",
    "embedding_check",
    "cq_embedding_check",
    "phi0_witness",
]
