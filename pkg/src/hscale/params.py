"""Function parameters of class OR and their algebra.

A function parameter is an immutable expression tree.  Every node knows
its logarithm as a function of ``x = log t``::

    >>> phi = parse("* (pow 1) (logpow 1)")
    >>> float(phi(1.0))                      # 1 * log(e + 1)
    1.3132616875182228
    >>> matuszewska_indices(phi)[:2]
    (1.0, 1.0)

Working with ``log phi(exp(x))`` keeps evaluation finite far beyond the
float range of ``t`` itself, which the quadrature in :mod:`hscale.torus`
relies on.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DomainError,
    EstimationError,
    InvalidSetupError,
    ParseError,
    PreconditionError,
)

__all__ = [
    "FunctionParameter",
    "Power",
    "LogPower",
    "Product",
    "Quotient",
    "ScaledExp",
    "InterpParam",
    "Reiterated",
    "Phi0Witness",
    "OSCILLATIONS",
    "parse",
    "evaluate",
    "MatuszewskaIndices",
    "matuszewska_indices",
    "ORCertificate",
    "certify_or",
    "InterpolationSetup",
    "interpolation_parameter",
    "reiterate",
    "PassWindow",
    "FailWindow",
    "pseudoconcavity_probe",
    "windowed_bounded",
    "inverse",
    "times_rho",
]

REL_TOL = 1e-10


def _fmt(v):
    s = repr(float(v))
    return s[:-2] if s.endswith(".0") else s


# oscillation terms beta0(x), x = log t, bounded by 1; clamped to x >= 0
OSCILLATIONS = {
    "sinlog": lambda x: np.sin(np.maximum(x, 0.0)),
    "sinloglog": lambda x: np.sin(np.log1p(np.maximum(x, 0.0))),
}


class FunctionParameter:
    """Base class of the expression tree.

    Subclasses implement :meth:`logval` (``log phi(e**x)``) and
    :meth:`to_prefix`.  ``domain_lower`` is 1 for parameters living on
    ``[1, inf)`` and 0 for class-B functions defined on ``(0, inf)``.
    """

    domain_lower = 1.0

    def logval(self, x):
        raise NotImplementedError

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(self.logval(np.log(t)))

    def to_prefix(self):
        raise NotImplementedError

    def __str__(self):
        return self.to_prefix()

    def children(self):
        return ()

    def power_log(self):
        """``(a, r)`` if the node behaves exactly like ``t**a * log(t)**r``.

        Only products and quotients of powers and log powers (and their
        interpolation parameters) qualify; everything else returns None.
        """
        return None

    def __mul__(self, other):
        return Product((self, other))

    def __truediv__(self, other):
        return Quotient(self, other)


@dataclass(frozen=True)
class Power(FunctionParameter):
    """``t**s``."""

    s: float

    def logval(self, x):
        return self.s * np.asarray(x, dtype=float)

    def to_prefix(self):
        return f"pow {_fmt(self.s)}"

    def power_log(self):
        return (float(self.s), 0.0)


@dataclass(frozen=True)
class LogPower(FunctionParameter):
    """``log(e + t)**r``."""

    r: float

    def logval(self, x):
        # log(e + e**x) == logaddexp(1, x)
        return self.r * np.log(np.logaddexp(1.0, np.asarray(x, dtype=float)))

    def to_prefix(self):
        return f"logpow {_fmt(self.r)}"

    def power_log(self):
        return (0.0, float(self.r))


@dataclass(frozen=True)
class Product(FunctionParameter):
    factors: tuple

    def __post_init__(self):
        if len(self.factors) < 2:
            raise ValueError("Product needs at least two factors")
        object.__setattr__(self, "factors", tuple(self.factors))

    @property
    def domain_lower(self):
        return max(f.domain_lower for f in self.factors)

    def logval(self, x):
        return sum(f.logval(x) for f in self.factors)

    def to_prefix(self):
        return "* " + " ".join(f"({f.to_prefix()})" for f in self.factors)

    def children(self):
        return self.factors

    def power_log(self):
        parts = [f.power_log() for f in self.factors]
        if any(p is None for p in parts):
            return None
        return (sum(p[0] for p in parts), sum(p[1] for p in parts))


@dataclass(frozen=True)
class Quotient(FunctionParameter):
    num: FunctionParameter
    den: FunctionParameter

    @property
    def domain_lower(self):
        return max(self.num.domain_lower, self.den.domain_lower)

    def logval(self, x):
        return self.num.logval(x) - self.den.logval(x)

    def to_prefix(self):
        return f"/ ({self.num.to_prefix()}) ({self.den.to_prefix()})"

    def children(self):
        return (self.num, self.den)

    def power_log(self):
        a, b = self.num.power_log(), self.den.power_log()
        if a is None or b is None:
            return None
        return (a[0] - b[0], a[1] - b[1])


@dataclass(frozen=True)
class ScaledExp(FunctionParameter):
    """``base(t) * exp(amplitude * beta0(t))`` with ``|amplitude * beta0| <= bound``.

    ``beta0`` is one of :data:`OSCILLATIONS`.  The bound is mandatory.
    """

    base: FunctionParameter
    beta: str
    amplitude: float
    bound: float | None = None

    def __post_init__(self):
        if self.beta not in OSCILLATIONS:
            raise ValueError(f"unknown oscillation {self.beta!r}; "
                             f"choose from {sorted(OSCILLATIONS)}")
        if self.bound is None:
            raise ValueError("ScaledExp requires an explicit oscillation bound")
        if not self.bound >= 0:
            raise ValueError("oscillation bound must be nonnegative")

    @property
    def domain_lower(self):
        return self.base.domain_lower

    def oscillation(self, x):
        return self.amplitude * OSCILLATIONS[self.beta](np.asarray(x, dtype=float))

    def logval(self, x):
        return self.base.logval(x) + self.oscillation(x)

    def to_prefix(self):
        return (f"sexp {self.beta} {_fmt(self.amplitude)} {_fmt(self.bound)} "
                f"({self.base.to_prefix()})")

    def children(self):
        return (self.base,)


@dataclass(frozen=True)
class InterpParam(FunctionParameter):
    """``t**(-s0/(s1-s0)) * phi(t**(1/(s1-s0)))`` for ``t >= 1``, ``phi(1)`` below.

    Defined on ``(0, inf)`` (class B).
    """

    phi: FunctionParameter
    s0: float
    s1: float
    domain_lower = 0.0

    def __post_init__(self):
        if not self.s0 < self.s1:
            raise ValueError("need s0 < s1")

    def logval(self, x):
        x = np.asarray(x, dtype=float)
        d = self.s1 - self.s0
        xp = np.maximum(x, 0.0)
        return np.where(x >= 0.0, -self.s0 / d * xp + self.phi.logval(xp / d),
                        self.phi.logval(0.0))

    def to_prefix(self):
        return f"interp {_fmt(self.s0)} {_fmt(self.s1)} ({self.phi.to_prefix()})"

    def children(self):
        return (self.phi,)

    def power_log(self):
        p = self.phi.power_log()
        if p is None:
            return None
        return ((p[0] - self.s0) / (self.s1 - self.s0), p[1])


@dataclass(frozen=True)
class Reiterated(FunctionParameter):
    """``phi1(t) * psi(phi2(t) / phi1(t))``."""

    phi1: FunctionParameter
    phi2: FunctionParameter
    psi: FunctionParameter

    @property
    def domain_lower(self):
        return max(self.phi1.domain_lower, self.phi2.domain_lower)

    def logval(self, x):
        l1 = self.phi1.logval(x)
        l2 = self.phi2.logval(x)
        return l1 + self.psi.logval(l2 - l1)

    def to_prefix(self):
        return (f"reit ({self.phi1.to_prefix()}) ({self.phi2.to_prefix()}) "
                f"({self.psi.to_prefix()})")

    def children(self):
        return (self.phi1, self.phi2, self.psi)


@dataclass(frozen=True, eq=False)
class Phi0Witness(FunctionParameter):
    """``phi(t) * eta(t)**(1/4)`` with ``eta(t) = int_t^inf tau**(2q+n-1) / phi(tau)**2``.

    ``eta`` is tabulated once by quadrature on a grid in ``y = log(1 + log t)``
    and interpolated by a cubic spline in ``log eta``; beyond the grid the
    fitted exponential tail is used.
    """

    phi: FunctionParameter
    q: int
    n: int
    y_max: float = 14.0
    points: int = 561
    _table: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        from scipy.interpolate import CubicSpline

        from .quadrature import loglog_tail_table

        y = np.linspace(0.0, self.y_max, self.points)
        log_eta, rate = loglog_tail_table(self.log_integrand, y)
        spline = CubicSpline(y, log_eta)
        object.__setattr__(self, "_table", (y, spline, rate))

    def log_integrand(self, x):
        """``log`` of the integrand of ``eta`` in ``x = log t`` (Jacobian included)."""
        x = np.asarray(x, dtype=float)
        return (2 * self.q + self.n) * x - 2.0 * self.phi.logval(x)

    def log_eta(self, x):
        y_grid, spline, rate = self._table
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        y = np.log1p(x)
        inside = spline(np.minimum(y, y_grid[-1]))
        # past the table eta ~ H(y) / (-rate), H the integrand in y
        beyond = self.log_integrand(x) + y - math.log(-rate)
        return np.where(y <= y_grid[-1], inside, beyond)

    def logval(self, x):
        return self.phi.logval(x) + 0.25 * self.log_eta(x)

    def to_prefix(self):
        return f"phi0 {self.q} {self.n} ({self.phi.to_prefix()})"

    def children(self):
        return (self.phi,)


def inverse(phi):
    """``1 / phi``."""
    return Quotient(Power(0.0), phi)


def times_rho(phi, m):
    """``phi * rho**m`` with ``rho(t) = t``."""
    if m == 0:
        return phi
    return Product((phi, Power(float(m))))


def evaluate(phi, t):
    """Evaluate ``phi`` at ``t`` (scalar or array) inside its domain."""
    arr = np.asarray(t, dtype=float)
    if phi.domain_lower > 0:
        bad = arr < phi.domain_lower
    else:
        bad = arr <= 0
    if np.any(bad):
        raise DomainError(f"{phi} is defined for t >= {phi.domain_lower:g}, got {t}")
    val = phi(arr)
    return float(val) if val.ndim == 0 else val


# -- prefix notation ---------------------------------------------------------

_TOKEN = re.compile(r"\s*(\(|\)|[^\s()]+)")


def _tokenize(text):
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"cannot tokenize at {text[pos:]!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, tokens):
        self.toks = tokens
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of expression")
        self.i += 1
        return tok

    def number(self):
        tok = self.take()
        try:
            return float(tok)
        except ValueError:
            raise ParseError(f"expected a number, got {tok!r}") from None

    def integer(self):
        v = self.number()
        if v != int(v):
            raise ParseError(f"expected an integer, got {v}")
        return int(v)

    def expr(self):
        tok = self.take()
        if tok == "(":
            node = self.expr()
            if self.take() != ")":
                raise ParseError("missing ')'")
            return node
        if tok == "pow":
            return Power(self.number())
        if tok == "logpow":
            return LogPower(self.number())
        if tok == "*":
            factors = [self.expr()]
            while self.peek() not in (None, ")"):
                factors.append(self.expr())
            if len(factors) < 2:
                raise ParseError("'*' needs at least two operands")
            return Product(tuple(factors))
        if tok == "/":
            return Quotient(self.expr(), self.expr())
        if tok == "sexp":
            name = self.take()
            amp, bound = self.number(), self.number()
            try:
                return ScaledExp(self.expr(), name, amp, bound)
            except ValueError as exc:
                raise ParseError(str(exc)) from None
        if tok == "interp":
            s0, s1 = self.number(), self.number()
            try:
                return InterpParam(self.expr(), s0, s1)
            except ValueError as exc:
                raise ParseError(str(exc)) from None
        if tok == "reit":
            return Reiterated(self.expr(), self.expr(), self.expr())
        if tok == "phi0":
            q, n = self.integer(), self.integer()
            return Phi0Witness(self.expr(), q, n)
        raise ParseError(f"unknown operator {tok!r}")


def parse(text):
    """Parse prefix notation, e.g. ``"* (pow 1.5) (logpow 2)"``."""
    tokens = _tokenize(text)
    if not tokens:
        raise ParseError("empty expression")
    p = _Parser(tokens)
    node = p.expr()
    if p.peek() is not None:
        raise ParseError(f"trailing tokens: {' '.join(tokens[p.i:])}")
    return node


# -- Matuszewska indices -----------------------------------------------------

@dataclass(frozen=True)
class MatuszewskaIndices:
    """Lower/upper Matuszewska indices.

    ``provenance`` is ``"analytic"`` or ``"estimated"``; estimated results
    carry the sampled ``window`` in ``t`` and the ``grid`` shape.  For
    analytic power-log trees ``lower_attained``/``upper_attained`` record
    whether the extremal exponent itself satisfies the two-sided bound.
    """

    sigma0: float
    sigma1: float
    provenance: str = "analytic"
    window: tuple | None = None
    grid: tuple | None = None
    lower_attained: bool | None = None
    upper_attained: bool | None = None

    def __iter__(self):
        yield self.sigma0
        yield self.sigma1
        yield self.provenance

    def __getitem__(self, item):
        return tuple(self)[item]


def _scaled_exp_nodes(phi):
    stack, out = [phi], []
    while stack:
        node = stack.pop()
        if isinstance(node, ScaledExp):
            out.append(node)
        stack.extend(node.children())
    return out


def _check_oscillation_bounds(phi, x):
    for node in _scaled_exp_nodes(phi):
        beta = node.oscillation(x)
        if np.max(np.abs(beta)) > node.bound * (1 + REL_TOL) + 1e-300:
            raise EstimationError(
                f"oscillation of {node.beta} exceeds declared bound {node.bound:g} "
                "on the window; index estimate would not converge")


def matuszewska_indices(phi, T=1e8, lam_max=16.0, grid=(256, 64), method="auto"):
    """Matuszewska indices of ``phi``.

    Products/quotients of powers and log powers get exact indices.  Any
    other tree is estimated: slopes ``(log phi(lam t) - log phi(t)) / log lam``
    over a log-spaced grid on ``[1, T] x (1, lam_max]``, reporting the
    extremal slopes.
    """
    pl = phi.power_log() if method == "auto" else None
    if pl is not None:
        a, r = pl
        return MatuszewskaIndices(a, a, "analytic",
                                  lower_attained=r >= 0, upper_attained=r <= 0)
    if method not in ("auto", "estimate"):
        raise ValueError(f"unknown method {method!r}")
    nt, nl = grid
    xt = np.linspace(0.0, math.log(T), nt)
    xl = np.linspace(0.0, math.log(lam_max), nl + 1)[1:]
    _check_oscillation_bounds(phi, np.concatenate([xt, xt[-1] + xl]))
    base = phi.logval(xt)
    shifted = phi.logval(xt[:, None] + xl[None, :])
    slopes = (shifted - base[:, None]) / xl[None, :]
    if not np.all(np.isfinite(slopes)):
        raise EstimationError("non-finite log-ratio slopes on the window")
    return MatuszewskaIndices(float(slopes.min()), float(slopes.max()), "estimated",
                              window=(1.0, float(T)), grid=(nt, nl))


# -- OR certificates ---------------------------------------------------------

@dataclass(frozen=True)
class ORCertificate:
    """Windowed certificate ``c^-1 <= phi(lam t)/phi(t) <= c`` on the grid."""

    a: float
    c: float
    window: tuple
    grid: int

    def __str__(self):
        return (f"a={self.a:.6g} c={self.c:.6g} "
                f"window=[{self.window[0]:.6g}, {self.window[1]:.6g}] grid={self.grid}")


def certify_or(phi, a=2.0, T=1e6, grid=256):
    """Smallest ``c`` with ``c**-1 <= phi(lam t)/phi(t) <= c`` on sampled
    ``t in [1, T]``, ``lam in [1, a]`` (endpoints included)."""
    if not a > 1:
        raise ValueError("need a > 1")
    if not T >= a:
        raise ValueError("need T >= a")
    grid = int(grid)
    if grid < 2:
        raise ValueError("grid must be at least 2")
    xt = np.linspace(0.0, math.log(T), grid)
    xl = np.linspace(0.0, math.log(a), grid)
    logr = phi.logval(xt[:, None] + xl[None, :]) - phi.logval(xt)[:, None]
    c = float(np.exp(np.max(np.abs(logr))))
    return ORCertificate(float(a), c, (1.0, float(T)), grid)


# -- interpolation parameter ---------------------------------------------------

@dataclass(frozen=True)
class InterpolationSetup:
    """Exponents ``s0 < s1`` bracketing the Matuszewska indices of ``phi``.

    Equality ``s0 == sigma0`` (or ``s1 == sigma1``) is accepted only when
    the extremal exponent is known to be attained: decided exactly for
    power-log trees, otherwise only if the caller sets ``attained=True``.
    """

    s0: float
    s1: float
    phi: FunctionParameter
    attained: bool = False

    def indices(self):
        return matuszewska_indices(self.phi)

    def validate(self):
        if not self.s0 < self.s1:
            raise InvalidSetupError(f"need s0 < s1, got {self.s0} >= {self.s1}")
        idx = self.indices()
        tol = REL_TOL * max(1.0, abs(idx.sigma0), abs(idx.sigma1))
        low_ok = self.s0 < idx.sigma0 - tol or (
            abs(self.s0 - idx.sigma0) <= tol and (self.attained or idx.lower_attained))
        high_ok = self.s1 > idx.sigma1 + tol or (
            abs(self.s1 - idx.sigma1) <= tol and (self.attained or idx.upper_attained))
        if not low_ok:
            raise InvalidSetupError(
                f"s0={self.s0} not admissible for lower index {idx.sigma0} ({idx.provenance})")
        if not high_ok:
            raise InvalidSetupError(
                f"s1={self.s1} not admissible for upper index {idx.sigma1} ({idx.provenance})")
        return idx


def interpolation_parameter(setup):
    """Interpolation parameter turning ``[H^(s0), H^(s1)]`` into ``H^phi``."""
    setup.validate()
    return InterpParam(setup.phi, float(setup.s0), float(setup.s1))


# -- reiteration -------------------------------------------------------------

def windowed_bounded(log_ratio, T=1e8, points=512, growth_tol=0.01):
    """Heuristic test that ``exp(log_ratio(x))`` stays bounded on ``[1, T]``.

    Compares the maximum over the second half of the log window with the
    maximum over the first half; a rise beyond ``growth_tol`` (in log) with
    the overall maximum in the last tenth counts as growth.
    """
    x = np.linspace(0.0, math.log(T), points)
    y = np.asarray(log_ratio(x), dtype=float)
    half = points // 2
    first, second = y[:half].max(), y[half:].max()
    growing = (second - first > growth_tol) and (np.argmax(y) >= int(0.9 * points))
    return not growing


def reiterate(phi1, phi2, psi, T=1e8):
    """``phi(t) = phi1(t) * psi(phi2(t) / phi1(t))``.

    Raises PreconditionError if ``phi1 / phi2`` grows on the window.
    """
    if not windowed_bounded(lambda x: phi1.logval(x) - phi2.logval(x), T):
        raise PreconditionError("phi1/phi2 is not bounded on the window")
    return Reiterated(phi1, phi2, psi)


# -- pseudoconcavity -----------------------------------------------------------

@dataclass(frozen=True)
class PassWindow:
    c: float


@dataclass(frozen=True)
class FailWindow:
    t: float
    s: float
    c: float


def pseudoconcavity_probe(psi, T=1e6, grid=256, ceiling=1e3):
    """Windowed check of ``psi(s) <= c * max(1, s/t) * psi(t)`` on ``[1, T]``.

    Returns PassWindow with the smallest windowed ``c`` or FailWindow with
    the maximising pair when that ``c`` exceeds ``ceiling``.
    """
    x = np.linspace(0.0, math.log(T), int(grid))
    lv = psi.logval(x)
    # rows: s, columns: t
    logc = lv[:, None] - lv[None, :] - np.maximum(0.0, x[:, None] - x[None, :])
    i, j = np.unravel_index(np.argmax(logc), logc.shape)
    c = float(np.exp(logc[i, j]))
    if c <= ceiling * (1 + REL_TOL):
        return PassWindow(c)
    return FailWindow(t=float(np.exp(x[j])), s=float(np.exp(x[i])), c=c)
