"""Generalized Sobolev spaces on the torus via Fourier coefficients.

A section is stored spectrally: one ``C^p`` vector per lattice point
``k in Z^n`` with ``|k|_inf <= N``.  The space ``H^phi`` carries the norm

    ||u||_phi^2 = sum_k phi(<k>)^2 |u_k|^2,     <k> = (1 + |k|^2)^(1/2).

With the normalized Lebesgue measure on the torus, Plancherel constants
are all one, so the pairing of two sections is the coefficient dot
product.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import EstimationError, NumericalOverflowError, PreconditionError
from .params import (
    FunctionParameter,
    Phi0Witness,
    Power,
    certify_or,
    inverse,
    matuszewska_indices,
)
from .quadrature import loglog_integral

__all__ = [
    "FrequencyLattice",
    "SpectralSection",
    "NormReport",
    "h_norm",
    "sandwich_constants",
    "EmbeddingVerdict",
    "embedding_check",
    "CqVerdict",
    "cq_embedding_check",
    "Phi0Checks",
    "phi0_witness",
    "phi0_checks",
    "duality_pairing",
    "dual_norm",
    "norm_reports_csv",
]

_LOG_MAX = 709.0


@dataclass(frozen=True)
class FrequencyLattice:
    """Frequencies ``k in Z^n`` with ``|k|_inf <= N``, in lexicographic order."""

    n: int
    N: int

    def __post_init__(self):
        if int(self.n) != self.n or not 1 <= self.n <= 3:
            raise ValueError("dimension n must be 1, 2 or 3")
        if int(self.N) != self.N or self.N < 0:
            raise ValueError("truncation N must be a nonnegative integer")

    @property
    def size(self):
        return (2 * self.N + 1) ** self.n

    @cached_property
    def points(self):
        """``(size, n)`` integer array of frequencies."""
        axes = [np.arange(-self.N, self.N + 1)] * self.n
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    @cached_property
    def bracket(self):
        """``<k> = sqrt(1 + |k|^2)`` for every lattice point."""
        return np.sqrt(1.0 + np.sum(self.points.astype(float) ** 2, axis=1))

    @cached_property
    def shell(self):
        """Sup-norm ``|k|_inf`` for every lattice point."""
        return np.max(np.abs(self.points), axis=1)

    def index_of(self, k):
        k = np.atleast_1d(np.asarray(k, dtype=int))
        if k.shape != (self.n,) or np.any(np.abs(k) > self.N):
            raise ValueError(f"frequency {k.tolist()} is not on the lattice")
        idx = 0
        for c in k:
            idx = idx * (2 * self.N + 1) + int(c) + self.N
        return idx

    def __iter__(self):
        return (tuple(int(c) for c in row) for row in self.points)


@dataclass(frozen=True, eq=False)
class SpectralSection:
    """Coefficients ``u_k in C^p`` on a frequency lattice, shape ``(size, p)``."""

    lattice: FrequencyLattice
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim == 1:
            c = c[:, None]
        if c.ndim != 2 or c.shape[0] != self.lattice.size or c.shape[1] < 1:
            raise ValueError(
                f"coefficients must have shape ({self.lattice.size}, p), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def rank(self):
        return self.coeffs.shape[1]

    @classmethod
    def zeros(cls, lattice, rank=1):
        return cls(lattice, np.zeros((lattice.size, rank), dtype=complex))

    @classmethod
    def single_mode(cls, lattice, k, rank=1, component=0, value=1.0):
        c = np.zeros((lattice.size, rank), dtype=complex)
        c[lattice.index_of(k), component] = value
        return cls(lattice, c)

    @classmethod
    def from_function(cls, lattice, f, rank=1):
        """Coefficients from ``f(points) -> (size,)`` or ``(size, rank)``."""
        vals = np.asarray(f(lattice.points), dtype=complex)
        return cls(lattice, vals.reshape(lattice.size, rank))

    @classmethod
    def random(cls, lattice, rank=1, rng=None, decay=0.0):
        """Complex Gaussian coefficients damped by ``<k>**(-decay)``."""
        rng = np.random.default_rng(rng)
        shape = (lattice.size, rank)
        c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        return cls(lattice, c * lattice.bracket[:, None] ** (-decay))

    def __add__(self, other):
        _check_compatible(self, other)
        return SpectralSection(self.lattice, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_compatible(self, other)
        return SpectralSection(self.lattice, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralSection(self.lattice, self.coeffs * scalar)

    __rmul__ = __mul__

    def restrict(self, N):
        """Truncate to the sub-lattice ``|k|_inf <= N``."""
        if N > self.lattice.N:
            raise ValueError("cannot restrict to a larger lattice")
        small = FrequencyLattice(self.lattice.n, N)
        mask = self.lattice.shell <= N
        return SpectralSection(small, self.coeffs[mask])

    def to_jsonl(self):
        lines = []
        for k, row in zip(self.lattice.points, self.coeffs):
            lines.append(json.dumps({"k": [int(c) for c in k],
                                     "re": [float(v) for v in row.real],
                                     "im": [float(v) for v in row.imag]}))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text):
        recs = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not recs:
            raise ValueError("empty section")
        ks = np.array([r["k"] for r in recs], dtype=int)
        n = ks.shape[1]
        N = int(np.max(np.abs(ks)))
        lattice = FrequencyLattice(n, N)
        rank = len(recs[0]["re"])
        c = np.zeros((lattice.size, rank), dtype=complex)
        seen = np.zeros(lattice.size, dtype=bool)
        for k, r in zip(ks, recs):
            i = lattice.index_of(k)
            c[i] = np.asarray(r["re"]) + 1j * np.asarray(r["im"])
            seen[i] = True
        if not seen.all():
            raise ValueError("JSONL section does not cover the full lattice")
        return cls(lattice, c)


def _check_compatible(u, v):
    if u.lattice != v.lattice:
        raise ValueError("sections live on different lattices")
    if u.rank != v.rank:
        raise ValueError(f"rank mismatch: {u.rank} vs {v.rank}")


# -- norms -----------------------------------------------------------------

@dataclass(frozen=True)
class NormReport:
    """``value`` is the truncated ``H^phi`` norm; ``tail_flag`` is set when the
    outermost shell carries more than 1% of the squared norm."""

    value: float
    phi: FunctionParameter
    N: int
    tail_flag: bool

    def __float__(self):
        return float(self.value)


def _log_weighted_terms(u, log_weight):
    return _log_terms(log_weight, u.coeffs)


def _log_terms(log_weight, coeffs):
    # scale each row by its largest entry so tiny coefficients do not underflow
    a = np.abs(coeffs)
    m = np.max(a, axis=1)
    safe = np.where(m > 0, m, 1.0)
    with np.errstate(divide="ignore"):
        log_mod2 = 2.0 * np.log(m) + np.log(np.sum((a / safe[:, None]) ** 2, axis=1))
    return 2.0 * log_weight + log_mod2


def _sqrt_sum_exp(lt):
    """``sqrt(sum(exp(lt)))`` computed with a shift; raises on overflow."""
    if np.all(lt == -np.inf):
        return 0.0
    m = float(np.max(lt))
    s = float(np.sum(np.exp(lt - m)))
    log_val = 0.5 * (m + math.log(s))
    if log_val > _LOG_MAX:
        raise NumericalOverflowError(f"norm exceeds float range (log value {log_val:.4g})")
    return math.exp(log_val)


def h_norm(u, phi):
    """``H^phi`` norm of ``u`` on its lattice."""
    lw = np.asarray(phi.logval(np.log(u.lattice.bracket)), dtype=float)
    if not np.all(np.isfinite(lw)):
        raise NumericalOverflowError("phi is not finite on the lattice")
    lt = _log_weighted_terms(u, lw)
    value = _sqrt_sum_exp(lt)
    tail = False
    if value > 0:
        outer = u.lattice.shell == u.lattice.N
        if u.lattice.N > 0 and np.any(outer):
            tail = _sqrt_sum_exp(lt[outer]) ** 2 > 0.01 * value ** 2
    return NormReport(value, phi, u.lattice.N, bool(tail))


def sandwich_constants(phi, lattice, s0, s1):
    """Lattice constants ``c0, c1`` with
    ``c0 ||u||_{s0} <= ||u||_phi <= c1 ||u||_{s1}``.

    ``c0 = min phi(<k>) <k>**-s0`` and ``c1 = max phi(<k>) <k>**-s1``.
    """
    x = np.log(lattice.bracket)
    lw = phi.logval(x)
    return float(np.exp(np.min(lw - s0 * x))), float(np.exp(np.max(lw - s1 * x)))


def norm_reports_csv(reports):
    """CSV rows ``phi,N,value,tail_flag``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["phi", "N", "value", "tail_flag"])
    for r in reports:
        w.writerow([r.phi.to_prefix(), r.N, f"{r.value:.12g}", str(r.tail_flag).lower()])
    return buf.getvalue()


# -- embeddings --------------------------------------------------------------

@dataclass(frozen=True)
class EmbeddingVerdict:
    """``kind`` in {ContinuousDense, Compact, NoEmbedding, Indeterminate};
    ``confidence`` in {ProvedByIndices, Exact, Windowed}."""

    kind: str
    confidence: str
    detail: str = ""

    def __str__(self):
        return f"{self.kind} ({self.confidence})"


def _window_drift(log_ratio, T, points=400):
    """Change of the running maximum of ``log_ratio`` between the windows
    ``[T^(1/4), T^(1/2)]`` and ``[T^(1/2), T]``."""
    L = math.log(T)
    x_mid = np.linspace(L / 4, L / 2, points)
    x_far = np.linspace(L / 2, L, points)
    return float(np.max(log_ratio(x_far)) - np.max(log_ratio(x_mid)))


def embedding_check(phi1, phi2, T=1e8):
    """Classify the embedding ``H^phi2 -> H^phi1``.

    The embedding holds iff ``phi1 / phi2`` is bounded at infinity and is
    compact iff the ratio tends to zero.  An index gap between two exactly
    known index pairs settles the question; otherwise the ratio is
    monitored on the window ``[T^(1/4), T]``: a drop of the running maximum
    by more than 0.1 (in log) reads as decay, a rise by more than 0.1 as
    growth, and a change below 0.02 as a bounded ratio.
    """
    i1, i2 = matuszewska_indices(phi1), matuszewska_indices(phi2)
    if i1.provenance == "analytic" and i2.provenance == "analytic":
        if i1.sigma1 < i2.sigma0:
            return EmbeddingVerdict("Compact", "ProvedByIndices",
                                    f"sigma1(phi1)={i1.sigma1:g} < sigma0(phi2)={i2.sigma0:g}")
        if i1.sigma0 > i2.sigma1:
            return EmbeddingVerdict("NoEmbedding", "ProvedByIndices",
                                    f"sigma0(phi1)={i1.sigma0:g} > sigma1(phi2)={i2.sigma1:g}")

    def log_ratio(x):
        return phi1.logval(x) - phi2.logval(x)

    drift = _window_drift(log_ratio, T)
    detail = f"window drift of log ratio {drift:.4g} on [T^1/4, T], T={T:g}"
    if drift < -0.1:
        return EmbeddingVerdict("Compact", "Windowed", detail)
    if drift > 0.1:
        return EmbeddingVerdict("NoEmbedding", "Windowed", detail)
    if abs(drift) <= 0.02:
        return EmbeddingVerdict("ContinuousDense", "Windowed", detail)
    return EmbeddingVerdict("Indeterminate", "Windowed", detail)


@dataclass(frozen=True)
class CqVerdict:
    """Outcome of the ``C^q`` embedding test.

    ``integral`` estimates ``int_1^inf t^(2q+n-1) phi(t)^-2 dt`` when finite.
    ``confidence`` is ``"Exact"`` for power-log trees (decided from the
    exponents) and ``"Windowed"`` otherwise.
    """

    kind: str
    integral: float | None
    confidence: str
    decay_rate: float | None = None

    def __str__(self):
        if self.integral is None:
            return f"{self.kind} ({self.confidence})"
        return f"{self.kind} ({self.confidence}) integral={self.integral:.12g}"


def _cq_log_integrand(phi, q, n):
    def f(x):
        x = np.asarray(x, dtype=float)
        return (2 * q + n) * x - 2.0 * phi.logval(x)
    return f


def cq_embedding_check(phi, q, n, y_max=14.0, margin=0.05):
    """Does ``H^phi(T^n)`` embed into ``C^q``?

    Equivalent to convergence of ``int_1^inf t^(2q+n-1) / phi(t)^2 dt``.
    For ``phi = t^a log(e+t)^r`` the answer is exact: convergence iff
    ``a > q + n/2``, or ``a = q + n/2`` and ``r > 1/2``.  Other parameters
    are integrated numerically in ``y = log(1 + log t)`` and classified by
    the fitted decay rate of the integrand (Indeterminate within
    ``margin`` of zero).
    """
    if q < 0 or int(q) != q:
        raise ValueError("q must be a nonnegative integer")
    if n < 1 or int(n) != n:
        raise ValueError("n must be a positive integer")
    kappa = q + n / 2.0
    f = _cq_log_integrand(phi, q, n)
    pl = phi.power_log()
    if pl is not None:
        a, r = pl
        tol = 1e-12 * max(1.0, abs(kappa))
        converges = a > kappa + tol or (abs(a - kappa) <= tol and 2 * r > 1)
        if not converges:
            return CqVerdict("Fails", None, "Exact")
        res = loglog_integral(f, y_max=y_max, margin=margin)
        return CqVerdict("Embeds", res.value, "Exact", res.decay_rate)
    res = loglog_integral(f, y_max=y_max, margin=margin)
    if res.converged is True:
        return CqVerdict("Embeds", res.value, "Windowed", res.decay_rate)
    if res.converged is False:
        return CqVerdict("Fails", None, "Windowed", res.decay_rate)
    return CqVerdict("Indeterminate", None, "Windowed", res.decay_rate)


@dataclass(frozen=True)
class Phi0Checks:
    """Window checks on the witness ``phi0 = phi * eta**(1/4)``."""

    or_c: float
    or_c_far: float
    or_stable: bool
    ratio_decreasing: bool
    ratio_end: float
    embeds: bool

    @property
    def passed(self):
        return self.or_stable and self.ratio_decreasing and self.embeds


def phi0_checks(phi0, T=1e8):
    """OR window (``c`` on ``[1, T^(3/4)]`` vs ``[1, T]``), decay of
    ``phi0/phi``, and the ``C^q`` test for ``phi0``."""
    c_near = certify_or(phi0, a=2.0, T=T ** 0.75).c
    c_far = certify_or(phi0, a=2.0, T=T).c
    x = np.linspace(0.0, math.log(T), 400)
    lr = 0.25 * phi0.log_eta(x)
    decreasing = bool(np.all(np.diff(lr) <= 1e-12) and lr[-1] < lr[0])
    verdict = cq_embedding_check(phi0, phi0.q, phi0.n)
    return Phi0Checks(c_near, c_far, c_far <= c_near * 1.01, decreasing,
                      float(np.exp(lr[-1])), verdict.kind == "Embeds")


def phi0_witness(phi, q, n, check=True):
    """``phi0 = phi * eta**(1/4)`` with ``eta(t) = int_t^inf tau^(2q+n-1) phi^-2``.

    ``phi0 / phi -> 0`` while ``H^phi0`` still embeds into ``C^q``.
    Requires ``cq_embedding_check(phi, q, n)`` to be Embeds.
    """
    verdict = cq_embedding_check(phi, q, n)
    if verdict.kind != "Embeds":
        raise PreconditionError(f"H^phi does not embed into C^{q}: {verdict}")
    w = Phi0Witness(phi, int(q), int(n))
    if check:
        chk = phi0_checks(w)
        if not chk.passed:
            raise EstimationError(f"phi0 witness failed its window checks: {chk}")
    return w


# -- duality -----------------------------------------------------------------

def duality_pairing(u, v):
    """``sum_k <u_k, v_k>`` (linear in ``u``, antilinear in ``v``)."""
    _check_compatible(u, v)
    return complex(np.sum(u.coeffs * np.conj(v.coeffs)))


def dual_norm(u, phi):
    """``sup |<u, v>| / ||v||_{1/phi}``, attained at ``v_k = phi(<k>)^2 u_k``."""
    w2 = np.exp(2.0 * phi.logval(np.log(u.lattice.bracket)))
    v = SpectralSection(u.lattice, u.coeffs * w2[:, None])
    denom = h_norm(v, inverse(phi)).value
    if denom == 0.0:
        return 0.0
    return abs(duality_pairing(u, v)) / denom


def sobolev(s):
    """``Power(s)``, the classical Sobolev parameter."""
    return Power(float(s))
