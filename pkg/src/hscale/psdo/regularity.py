"""Regularity, a priori estimates and classical smoothness for DN systems.

The global regularity statement on the torus is exact in the multiplier
setting: ``u`` lies in the graded source space iff ``f = A u`` lies in the
graded target space.  On a finite lattice membership is read off from the
decay of the shell sums of the weighted coefficients, fitted over the
outer half of the lattice.

Local statements need multiplication by cutoffs.  On the circle the
cutoffs are band-limited: indicator functions of arcs smoothed by a
Gaussian multiplier, so multiplying a section by a cutoff is an exact
discrete convolution of coefficient sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..params import Power, times_rho
from ..torus_spaces import FrequencyLattice, SpectralSection, cq_embedding_check
from .operators import apply, graded_log_weights, graded_norm

__all__ = [
    "RegularityRow",
    "RegularityReport",
    "shell_decay_exponent",
    "regularity_experiment",
    "LocalizationWindow",
    "AprioriReport",
    "apriori_estimate",
    "classical_smoothness_check",
]

CONVERGENCE_MARGIN = 0.05


def shell_decay_exponent(log_w, u, N=None):
    """Fitted ``beta`` with shell sums ``S(r) ~ r^-beta`` on ``r in [N/2, N]``.

    ``S(r)`` sums ``w(k)^2 |u_k|^2`` over the shell ``|k|_inf = r``; the
    weighted series converges iff ``beta > 1``.  Returns ``inf`` when the
    window carries no mass.
    """
    lat = u.lattice
    N = lat.N if N is None else N
    terms = np.sum(np.exp(2.0 * log_w) * np.abs(u.coeffs) ** 2, axis=1)
    S = np.bincount(lat.shell, weights=terms, minlength=lat.N + 1)
    r = np.arange(max(N // 2, 1), N + 1)
    s = S[r]
    if np.all(s == 0):
        return math.inf
    if np.any(s == 0):
        return math.inf
    slope = np.polyfit(np.log(r), np.log(s), 1)[0]
    return float(-slope)


@dataclass(frozen=True)
class RegularityRow:
    N: int
    u_norm: float
    f_norm: float
    beta_u: float
    beta_f: float

    @property
    def u_converges(self):
        return self.beta_u > 1.0 + CONVERGENCE_MARGIN

    @property
    def f_converges(self):
        return self.beta_f > 1.0 + CONVERGENCE_MARGIN

    @property
    def agree(self):
        return self.u_converges == self.f_converges


@dataclass(frozen=True)
class RegularityReport:
    rows: tuple

    @property
    def agree(self):
        return all(r.agree for r in self.rows)


def regularity_experiment(A, phi, u, Ns=(16, 32, 64, 128)):
    """Graded norms of ``u`` and ``f = A u`` across truncations.

    ``u`` is given on the largest lattice and restricted to each ``N``.
    Each row records both norms and the fitted shell-decay exponents; the
    report agrees when source and target verdicts coincide at every ``N``.
    """
    if max(Ns) > u.lattice.N:
        raise ValueError("section lattice is smaller than the largest truncation")
    f = apply(A, u)
    rows = []
    for N in sorted(Ns):
        uN, fN = u.restrict(N), f.restrict(N)
        lw_u = graded_log_weights(A, phi, uN.lattice, "source")
        lw_f = graded_log_weights(A, phi, fN.lattice, "target")
        rows.append(RegularityRow(
            N,
            graded_norm(A, uN, phi, "source"),
            graded_norm(A, fN, phi, "target"),
            _component_beta(lw_u, uN),
            _component_beta(lw_f, fN),
        ))
    return RegularityReport(tuple(rows))


def _component_beta(log_w, u):
    # a sum of series converges iff each component series does
    betas = [shell_decay_exponent(log_w[:, [c]], SpectralSection(u.lattice, u.coeffs[:, [c]]))
             for c in range(u.rank)]
    return min(betas)


# -- cutoffs -------------------------------------------------------------------

def _arc_coefficients(a, b, width, B):
    """Fourier coefficients on ``|k| <= B`` of the indicator of ``[a, b]``
    convolved with a periodized Gaussian of standard deviation ``width``."""
    k = np.arange(-B, B + 1, dtype=float)
    c = np.empty(k.size, dtype=complex)
    nz = k != 0
    c[nz] = (np.exp(-1j * k[nz] * a) - np.exp(-1j * k[nz] * b)) / (2j * np.pi * k[nz])
    c[~nz] = (b - a) / (2 * np.pi)
    return c * np.exp(-0.5 * (width * k) ** 2)


@dataclass(frozen=True, eq=False)
class LocalizationWindow:
    """Band-limited cutoffs ``chi``, ``eta`` on the circle with ``eta = 1``
    near the essential support of ``chi``.

    ``chi_arc`` and ``eta_arc`` are angle intervals ``(a, b)``; ``width`` is
    the Gaussian smoothing scale, which also fixes the band limit
    ``B = ceil(sqrt(70) / width)`` (Gaussian factor below ``e^-35``).
    """

    chi_arc: tuple = (1.2, 2.8)
    eta_arc: tuple = (0.5, 3.5)
    width: float = 0.05
    chi_hat: np.ndarray = None
    eta_hat: np.ndarray = None
    band: int = 0

    def __post_init__(self):
        if self.chi_hat is None:
            B = math.ceil(math.sqrt(70.0) / self.width)
            object.__setattr__(self, "band", B)
            object.__setattr__(self, "chi_hat", _arc_coefficients(*self.chi_arc, self.width, B))
            object.__setattr__(self, "eta_hat", _arc_coefficients(*self.eta_arc, self.width, B))
        self.validate()

    @classmethod
    def global_window(cls):
        """``chi = eta = 1``."""
        one = np.array([1.0 + 0j])
        return cls((0.0, 2 * np.pi), (0.0, 2 * np.pi), 0.0, one, one, 0)

    def values(self, which, theta):
        c = self.chi_hat if which == "chi" else self.eta_hat
        k = np.arange(-self.band, self.band + 1)
        return np.real(np.exp(1j * np.outer(theta, k)) @ c)

    def validate(self, points=4096, tol=1e-8):
        theta = 2 * np.pi * np.arange(points) / points
        chi, eta = self.values("chi", theta), self.values("eta", theta)
        ess = np.abs(chi) > tol
        if np.any(eta[ess] < 1.0 - tol):
            raise ValueError("eta is not 1 on the essential support of chi")
        return True

    def multiply(self, which, u):
        """Coefficients of ``cutoff * u`` on the lattice enlarged by the band."""
        if u.lattice.n != 1:
            raise ValueError("localization windows are implemented on the circle")
        c = self.chi_hat if which == "chi" else self.eta_hat
        cols = [np.convolve(c, u.coeffs[:, j]) for j in range(u.rank)]
        lat = FrequencyLattice(1, u.lattice.N + self.band)
        return SpectralSection(lat, np.stack(cols, axis=1))


# -- a priori estimate -------------------------------------------------------------

@dataclass(frozen=True)
class AprioriReport:
    """Empirical constants per truncation.

    ``c`` maximizes the full ratio with the lower-order term, ``c_principal``
    the ratio without it.  ``stable`` compares the first and last ``c``
    within 20%.
    """

    Ns: tuple
    c: tuple
    c_principal: tuple
    variant: str
    trials: int

    @property
    def drift(self):
        if self.c[0] == 0:
            return 0.0
        return abs(self.c[-1] - self.c[0]) / self.c[0]

    @property
    def stable(self):
        return self.drift <= 0.2


def _sobolev_norm(u, lam):
    x = np.log(u.lattice.bracket)
    mod2 = np.sum(np.abs(u.coeffs) ** 2, axis=1)
    return float(np.sqrt(np.sum(np.exp(2 * lam * x) * mod2)))


def _ratios(A, window, phi, lam, u, variant):
    f = apply(A, u)
    chi_u = window.multiply("chi", u)
    lhs = graded_norm(A, chi_u, phi, "source")
    if variant == "local":
        rhs_main = graded_norm(A, window.multiply("eta", f), phi, "target")
        rhs_low = _sobolev_norm(u, lam)
    elif variant == "shifted":
        rhs_main = graded_norm(A, window.multiply("chi", f), phi, "target")
        rhs_low = graded_norm(A, u, phi, "source", shift=-1.0)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    full = lhs / (rhs_main + rhs_low) if lhs > 0 else 0.0
    principal = lhs / rhs_main if lhs > 0 else 0.0
    return full, principal


def apriori_estimate(A, window, phi=None, lam=-1.0, trials=100, Ns=(64, 128), seed=42,
                     decay=0.0, variant="local"):
    """Empirical constant of the local a priori estimate.

    ``variant="local"``: ``||chi u||' <= c (||eta f||'' + ||u||_lam)``;
    ``variant="shifted"``: ``||chi u||' <= c (||chi f||'' + ||u||'_{phi/rho})``.
    Trials draw complex Gaussian coefficients on ``|k| <= N`` damped by
    ``<k>^-decay``, seeded per truncation.
    """
    phi = phi if phi is not None else Power(0.0)
    cs, cps = [], []
    for N in Ns:
        rng = np.random.default_rng([seed, N])
        lat = FrequencyLattice(A.n, N)
        best, best_p = 0.0, 0.0
        for _ in range(trials):
            u = SpectralSection.random(lat, A.p, rng, decay)
            full, principal = _ratios(A, window, phi, lam, u, variant)
            best, best_p = max(best, full), max(best_p, principal)
        cs.append(best)
        cps.append(best_p)
    return AprioriReport(tuple(Ns), tuple(cs), tuple(cps), variant, trials)


def apriori_ratio(A, window, phi, lam, u, variant="local"):
    """Full and principal ratios for a single section (0 for ``u = 0``)."""
    return _ratios(A, window, phi, lam, u, variant)


# -- classical smoothness ------------------------------------------------------

def classical_smoothness_check(A, component, q, phi=None, n=None):
    """Does ``u_k`` in ``H^(phi rho^(m_k))`` lie in ``C^q``?

    Tests convergence of ``int_1^inf t^(2q+n-1-2 m_k) phi^-2(t) dt``, with
    ``m_k`` the order of source block ``component`` (0-based).  Returns
    ``"Implies"``, ``"NotImplied"`` or ``"Indeterminate"`` and the verdict.
    """
    if not 0 <= component < len(A.m):
        raise ValueError(f"component {component} out of range for {len(A.m)} source blocks")
    phi = phi if phi is not None else Power(0.0)
    n = A.n if n is None else n
    verdict = cq_embedding_check(times_rho(phi, A.m[component]), q, n)
    label = {"Embeds": "Implies", "Fails": "NotImplied"}.get(verdict.kind, "Indeterminate")
    return label, verdict
