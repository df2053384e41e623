"""Two-chart model of the circle: flattening, sewing and chart norms.

Chart ``j`` covers the open arc of half-width ``H = pi - delta`` around
the centre ``c_j`` (``c_2 = c_1 + pi``) through

    alpha_j(x) = c_j + H tanh(x),   x in R.

The partition of unity is ``chi_j = T(d_j)`` with ``d_j`` the angular
distance to ``c_j`` and ``T`` a C-infinity step from 1 (``d <= pi/2 - w``)
to 0 (``d >= pi/2 + w``); since ``d_1 + d_2 = pi`` the two functions sum
to one.  Chart functions live on ``[-L, L)`` with ``L`` eight times the
support radius ``X = artanh((pi/2 + w) / H)``.

The flattening map sends ``u`` to ``((chi_1 u) o alpha_1, (chi_2 u) o alpha_2)``;
sewing multiplies by the chart cutoffs ``eta_j``, pushes forward and
projects onto Fourier modes by quadrature in the chart variable.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .torus_spaces import FrequencyLattice, SpectralSection

__all__ = [
    "AliasingWarning",
    "CircleAtlas",
    "ChartSection",
    "flatten",
    "sew",
    "chart_norm",
    "spectral_values",
    "project",
    "roundtrip_errors",
    "atlas_independence_experiment",
    "spectral_chart_window",
    "atlas_csv",
]


class AliasingWarning(UserWarning):
    """The chart grid under-resolves the pulled-back section."""


def _smooth_step(t):
    """C-infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f0 = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        f1 = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return f0 / (f0 + f1)


def _wrap(theta):
    """Angle in ``[-pi, pi)``."""
    return (np.asarray(theta, dtype=float) + np.pi) % (2 * np.pi) - np.pi


@dataclass(frozen=True)
class CircleAtlas:
    """Two charts with centres ``rotation`` and ``rotation + pi``.

    ``delta`` is the half-width of the excluded arc of each chart,
    ``overlap`` the half-width of the transition zone of the partition of
    unity, ``margin`` the padding of the chart cutoffs around the support.
    """

    rotation: float = 0.0
    delta: float = 0.3
    overlap: float = 0.4
    margin: float = 0.3

    def __post_init__(self):
        if not 0 < self.delta < np.pi / 2 - self.overlap:
            raise ValueError("need 0 < delta < pi/2 - overlap")
        if not 0 < self.overlap < np.pi / 2:
            raise ValueError("need 0 < overlap < pi/2")

    @property
    def centres(self):
        return (self.rotation, self.rotation + np.pi)

    @property
    def H(self):
        return np.pi - self.delta

    @property
    def support_radius(self):
        """``X`` with ``supp (chi_j o alpha_j) = [-X, X]``."""
        return float(np.arctanh((np.pi / 2 + self.overlap) / self.H))

    @property
    def L(self):
        return 8.0 * self.support_radius

    def alpha(self, j, x):
        return self.centres[j] + self.H * np.tanh(x)

    def alpha_prime(self, x):
        return self.H / np.cosh(x) ** 2

    def alpha_inv(self, j, theta):
        """Chart coordinate of ``theta``; NaN outside the chart."""
        s = _wrap(np.asarray(theta, dtype=float) - self.centres[j]) / self.H
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(np.abs(s) < 1, np.arctanh(np.clip(s, -1, 1)), np.nan)

    def chi(self, j, theta):
        d = np.abs(_wrap(np.asarray(theta, dtype=float) - self.centres[j]))
        a = np.pi / 2 - self.overlap
        return _smooth_step((a + 2 * self.overlap - d) / (2 * self.overlap))

    def eta(self, x):
        """Chart cutoff: 1 on ``|x| <= X + margin``, 0 beyond ``X + 2 margin``."""
        X = self.support_radius
        return _smooth_step((X + 2 * self.margin - np.abs(x)) / self.margin)

    def grid(self, M):
        h = 2 * self.L / M
        return -self.L + h * np.arange(M), h

    def grid_size(self, N, oversample=4.0, floor=4096):
        """Grid points resolving frequency ``N`` pulled back through the charts.

        ``floor`` keeps the transition of ``chi_j o alpha_j`` near the edge of
        its support resolved to rounding level even for small ``N``.
        """
        need = oversample * 2 * self.L * N * self.H / np.pi
        return int(2 ** math.ceil(math.log2(max(need, floor))))

    def describe(self):
        return f"rot={self.rotation:g}"


@dataclass(frozen=True, eq=False)
class ChartSection:
    """Samples of the two chart functions on the common grid ``x``.

    ``values`` has shape ``(2, M, p)``.
    """

    x: np.ndarray
    h: float
    values: np.ndarray


def spectral_values(u, theta):
    """Pointwise values ``sum_k u_k e^{i k theta}``, shape ``(len(theta), p)``."""
    if u.lattice.n != 1:
        raise ValueError("charts are implemented on the circle")
    k = u.lattice.points[:, 0]
    return np.exp(1j * np.outer(theta, k)) @ u.coeffs


def flatten(u, atlas, M=None, warn=True):
    """``T u = ((chi_1 u) o alpha_1, (chi_2 u) o alpha_2)`` on the chart grid."""
    M = atlas.grid_size(u.lattice.N) if M is None else int(M)
    x, h = atlas.grid(M)
    if warn and u.lattice.N > 0 and h > np.pi / (u.lattice.N * atlas.H):
        warnings.warn(f"chart grid h={h:.3g} under-resolves frequency {u.lattice.N}",
                      AliasingWarning, stacklevel=2)
    vals = []
    for j in (0, 1):
        theta = atlas.alpha(j, x)
        vals.append(atlas.chi(j, theta)[:, None] * spectral_values(u, theta))
    return ChartSection(x, h, np.stack(vals))


def sew(w, atlas, N, tol=1e-12):
    """``K w = sum_j Theta_j((eta_j w_j) o alpha_j^-1)`` projected on ``|k| <= N``.

    The Fourier coefficients are integrated in the chart variable,
    ``(1/2 pi) int (eta_j w_j)(x) e^{-i k alpha_j(x)} alpha_j'(x) dx``, by the
    trapezoidal rule on the chart grid.
    """
    eta = atlas.eta(w.x)
    scale = max(float(np.max(np.abs(w.values))), 1e-300)
    if np.any(np.abs(w.values[:, eta == 0.0, :]) > tol * scale):
        raise ValueError("chart function is not supported inside its chart cutoff")
    lat = FrequencyLattice(1, N)
    k = lat.points[:, 0]
    jac = atlas.alpha_prime(w.x) * w.h / (2 * np.pi)
    coeffs = np.zeros((lat.size, w.values.shape[2]), dtype=complex)
    for j in (0, 1):
        theta = atlas.alpha(j, w.x)
        kernel = np.exp(-1j * np.outer(k, theta))
        coeffs += kernel @ ((eta * jac)[:, None] * w.values[j])
    return SpectralSection(lat, coeffs)


def _line_norm2(f, h, phi):
    """Squared ``H^phi(R)`` norms of the columns of grid samples ``f`` (shape
    ``(M, F)``) on ``[-L, L)``: unitary transform by FFT, weight ``phi(<xi>)^2``."""
    M = f.shape[0]
    L = M * h / 2
    xi = 2 * np.pi * np.fft.fftfreq(M, d=h)
    fh = np.fft.fft(f, axis=0) * h / np.sqrt(2 * np.pi)
    w2 = np.exp(2 * phi.logval(np.log(np.sqrt(1 + xi ** 2))))
    return np.sum(w2[:, None] * np.abs(fh) ** 2, axis=0) * (np.pi / L)


def _chart_norms2(coeffs, N, phi, atlas, M):
    """Squared chart norms of the columns of ``coeffs`` (shape ``(2N+1, F)``)."""
    x, h = atlas.grid(M)
    k = np.arange(-N, N + 1)
    total = np.zeros(coeffs.shape[1])
    for j in (0, 1):
        theta = atlas.alpha(j, x)
        vals = atlas.chi(j, theta)[:, None] * (np.exp(1j * np.outer(theta, k)) @ coeffs)
        total += _line_norm2(vals, h, phi)
    return total


def chart_norm(u, phi, atlas, M=None):
    """``(sum_j ||(chi_j u) o alpha_j||^2_{H^phi(R)})^(1/2)``."""
    if u.lattice.n != 1:
        raise ValueError("charts are implemented on the circle")
    N = u.lattice.N
    M = atlas.grid_size(N) if M is None else int(M)
    if N > 0 and 2 * atlas.L / M > np.pi / (N * atlas.H):
        warnings.warn(f"chart grid under-resolves frequency {N}", AliasingWarning, stacklevel=2)
    return math.sqrt(float(np.sum(_chart_norms2(u.coeffs, N, phi, atlas, M))))


def project(f, N, points=4096):
    """Fourier coefficients of a callable ``f(theta)`` on ``|k| <= N`` by FFT."""
    theta = 2 * np.pi * np.arange(points) / points
    vals = np.asarray(f(theta), dtype=complex)
    c = np.fft.fft(vals) / points
    k = np.arange(-N, N + 1)
    return SpectralSection(FrequencyLattice(1, N), c[k % points])


def roundtrip_errors(f, atlas, Ns=(16, 32, 64), reference_N=1024):
    """Relative ``L2`` errors of ``K T P_N f`` against ``f`` under joint
    refinement of the truncation ``N`` and the chart grid."""
    ref = project(f, reference_N, points=8 * reference_N)
    ref_norm = float(np.linalg.norm(ref.coeffs))
    errors = []
    for N in Ns:
        uN = project(f, N, points=8 * reference_N)
        back = sew(flatten(uN, atlas), atlas, N)
        diff = ref.coeffs.copy()
        diff[reference_N - N: reference_N + N + 1] -= back.coeffs
        errors.append(float(np.linalg.norm(diff)) / ref_norm)
    return tuple(errors)


def _test_family(N, n_random, rng):
    """Columns: every Fourier mode ``|k| <= N``, then seeded random sections."""
    size = 2 * N + 1
    modes = np.eye(size, dtype=complex)
    k = np.arange(-N, N + 1)
    rand = (rng.standard_normal((size, n_random)) + 1j * rng.standard_normal((size, n_random)))
    rand *= (1.0 + k[:, None] ** 2) ** -0.5
    return np.concatenate([modes, rand], axis=1)


def atlas_independence_experiment(phi, atlas1, atlas2, N, n_random=16, seed=42):
    """``(min, max)`` of ``chart_norm_1 / chart_norm_2`` over all Fourier modes
    ``|k| <= N`` and ``n_random`` seeded random sections."""
    rng = np.random.default_rng([seed, N])
    fam = _test_family(N, n_random, rng)
    M = max(atlas1.grid_size(N), atlas2.grid_size(N))
    ratios = np.sqrt(_chart_norms2(fam, N, phi, atlas1, M) / _chart_norms2(fam, N, phi, atlas2, M))
    return float(np.min(ratios)), float(np.max(ratios))


def spectral_chart_window(phi, atlas, N, n_random=16, seed=42):
    """``(min, max)`` of ``chart_norm / h_norm`` over the same test family."""
    rng = np.random.default_rng([seed, N])
    fam = _test_family(N, n_random, rng)
    chart = np.sqrt(_chart_norms2(fam, N, phi, atlas, atlas.grid_size(N)))
    br = np.sqrt(1.0 + np.arange(-N, N + 1) ** 2.0)
    w = np.exp(phi.logval(np.log(br)))
    spectral = np.sqrt(np.sum((w[:, None] * np.abs(fam)) ** 2, axis=0))
    ratios = chart / spectral
    return float(np.min(ratios)), float(np.max(ratios))


def atlas_csv(rows):
    """CSV ``atlas1,atlas2,phi,N,c_lower,c_upper`` from tuples of those fields."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["atlas1", "atlas2", "phi", "N", "c_lower", "c_upper"])
    for a1, a2, phi, N, lo, hi in rows:
        w.writerow([a1, a2, phi, N, f"{lo:.12g}", f"{hi:.12g}"])
    return buf.getvalue()
