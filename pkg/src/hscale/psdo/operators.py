"""Ellipticity, boundedness, parametrix and Fredholm solves for DN systems.

Everything is per frequency: a multiplier system is a field of small
``p x p`` matrices ``A(k)``, so the operator on the truncated lattice is
block diagonal and kernel, cokernel and index come from per-frequency SVDs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import (
    HomogeneityError,
    NotEllipticError,
    SingularSymbolError,
    UnboundedSymbolError,
)
from ..params import Power
from ..torus_spaces import FrequencyLattice, SpectralSection
from .symbols import DNSystem

__all__ = [
    "Elliptic",
    "NotElliptic",
    "sphere_samples",
    "dn_ellipticity_check",
    "require_elliptic",
    "apply",
    "graded_log_weights",
    "graded_norm",
    "BoundednessCertificate",
    "boundedness_certificate",
    "parametrix",
    "parametrix_residuals",
    "FredholmReport",
    "fredholm_solve",
    "SVD_RTOL",
    "COMPAT_RTOL",
]

SVD_RTOL = 1e-10
COMPAT_RTOL = 1e-8
ELLIPTIC_TOL = 1e-8


@dataclass(frozen=True)
class Elliptic:
    """``min_det`` is the raw minimum of ``|det a0(xi)|`` on the sampled
    sphere; ``min_normalized`` divides it by the largest product of row
    norms of ``a0`` over the sampled sphere."""

    min_det: float
    min_normalized: float


@dataclass(frozen=True)
class NotElliptic:
    witness: tuple
    min_normalized: float


def sphere_samples(n, samples):
    """Uniform angular grid on the unit sphere of ``R^n`` (n = 1, 2, 3)."""
    if n == 1:
        return np.array([[-1.0], [1.0]])
    if n == 2:
        th = 2 * np.pi * np.arange(samples) / samples
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    if n == 3:
        nlat = max(samples // 2, 2)
        lat = np.pi * np.arange(nlat + 1) / nlat
        lon = 2 * np.pi * np.arange(samples) / samples
        pts = [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]
        for t in lat[1:-1]:
            for p in lon:
                pts.append([np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)])
        return np.array(pts)
    raise ValueError("sphere sampling implemented for n in {1, 2, 3}")


def _check_homogeneity(A, xi, rtol=1e-9):
    orders = A.entry_orders
    base = A.principal(xi)
    scale = max(1.0, float(np.max(np.abs(base))))
    for lam in (0.5, 2.0, 3.0):
        scaled = A.principal(lam * xi)
        expect = base * lam ** orders[None, :, :]
        err = float(np.max(np.abs(scaled - expect)))
        if err > rtol * scale * lam ** max(0.0, float(np.max(orders))):
            i = int(np.argmax(np.max(np.abs(scaled - expect), axis=(1, 2))))
            raise HomogeneityError(
                f"principal part is not homogeneous of the declared orders "
                f"(lambda={lam}, xi={xi[i].tolist()}, error {err:.3g})")


def dn_ellipticity_check(A, samples=64):
    """Sample ``det a0(xi)`` on the unit sphere.

    Returns Elliptic when the normalized minimum exceeds 1e-8, else
    NotElliptic with the minimizing direction.
    """
    xi = sphere_samples(A.n, samples)
    _check_homogeneity(A, xi)
    P = A.principal(xi)
    det = np.abs(np.linalg.det(P))
    # one scale for the whole sphere: a pointwise row normalization would
    # hide a degenerate scalar symbol
    scale = float(np.max(np.prod(np.linalg.norm(P, axis=2), axis=1)))
    normalized = det / scale if scale > 0 else np.zeros_like(det)
    i = int(np.argmin(normalized))
    if normalized[i] > ELLIPTIC_TOL:
        return Elliptic(float(np.min(det)), float(normalized[i]))
    witness = tuple(float(round(v, 12)) + 0.0 for v in xi[i])
    return NotElliptic(witness, float(normalized[i]))


def require_elliptic(A, samples=64):
    res = dn_ellipticity_check(A, samples)
    if isinstance(res, NotElliptic):
        raise NotEllipticError(f"system is not elliptic; witness xi={res.witness}",
                               witness=res.witness)
    return res


def _check_section(A, u):
    if u.rank != A.p:
        raise ValueError(f"section rank {u.rank} does not match system size {A.p}")
    if u.lattice.n != A.n:
        raise ValueError(f"section lives on T^{u.lattice.n}, system on T^{A.n}")


def apply(A, u):
    """``f_k = A(k) u_k``."""
    _check_section(A, u)
    mats = A(u.lattice.points)
    return SpectralSection(u.lattice, np.einsum("kij,kj->ki", mats, u.coeffs))


def graded_log_weights(A, phi, lattice, side="source", shift=0.0):
    """``log`` of the per-component weights of the graded spaces.

    ``side="source"``: ``phi(<k>) <k>^(m_k + shift)``; ``side="target"``:
    ``phi(<k>) <k>^(-ell_j + shift)``.  Shape ``(size, p)``.
    """
    x = np.log(lattice.bracket)
    orders = A.col_orders if side == "source" else -A.row_orders
    return phi.logval(x)[:, None] + (orders[None, :] + shift) * x[:, None]


def graded_norm(A, u, phi, side="source", shift=0.0):
    """Norm in ``(+)_k H^(phi rho^(m_k))`` (source) or ``(+)_j H^(phi rho^(-ell_j))``."""
    lw = graded_log_weights(A, phi, u.lattice, side, shift)
    mod2 = np.abs(u.coeffs) ** 2
    if not np.any(mod2):
        return 0.0
    with np.errstate(divide="ignore"):
        lt = 2.0 * lw + np.log(mod2)
    mx = float(np.max(lt))
    return math.exp(0.5 * (mx + math.log(float(np.sum(np.exp(lt - mx))))))


@dataclass(frozen=True)
class BoundednessCertificate:
    """Operator norms on the graded spaces for each truncation in ``Ns``."""

    Ns: tuple
    values: tuple
    stable: bool

    @property
    def constant(self):
        return self.values[-1]


def boundedness_certificate(A, phi=None, Ns=(16, 32, 64), rtol=0.01, raise_on_growth=True):
    """``max_k || D2(k) A(k) D1(k)^-1 ||_2`` per truncation ``N``.

    ``D1`` and ``D2`` carry the source and target weights; ``phi`` cancels
    in the quotient but is kept in the computation.  The certificate is
    stable when the last relative increment is below ``rtol``.
    """
    phi = phi if phi is not None else Power(0.0)
    values = []
    for N in Ns:
        lat = FrequencyLattice(A.n, N)
        src = graded_log_weights(A, phi, lat, "source")
        tgt = graded_log_weights(A, phi, lat, "target")
        scaled = A(lat.points) * np.exp(tgt[:, :, None] - src[:, None, :])
        values.append(float(np.max(np.linalg.svd(scaled, compute_uv=False)[:, 0])))
    last, prev = values[-1], values[-2] if len(values) > 1 else values[-1]
    stable = abs(last - prev) <= rtol * max(abs(last), 1e-300) or last == prev
    if not stable and raise_on_growth:
        raise UnboundedSymbolError(
            f"certificate keeps growing: {dict(zip(Ns, values))}; "
            "order vectors are inconsistent with the symbol")
    return BoundednessCertificate(tuple(Ns), tuple(values), bool(stable))


def parametrix(A, R, N=None):
    """Two-sided parametrix ``B(k) = A(k)^-1`` for ``<k> > R``, zero otherwise.

    With ``N`` given, every lattice frequency with ``<k> > R`` is scanned
    first and a singular ``A(k)`` raises SingularSymbolError with witness.
    The returned system has orders ``ell_B = -m``, ``m_B = -ell``.
    """
    if N is not None:
        lat = FrequencyLattice(A.n, N)
        mask = lat.bracket > R
        if np.any(mask):
            s = np.linalg.svd(A(lat.points[mask]), compute_uv=False)
            bad = s[:, -1] <= SVD_RTOL * s[:, 0]
            if np.any(bad):
                k = tuple(int(v) for v in lat.points[mask][np.argmax(bad)])
                raise SingularSymbolError(f"A(k) is singular at k={k} beyond R={R}",
                                          witness=k)
    sym, prin = A.symbol, A.principal
    p = A.p

    def symbol(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        br = np.sqrt(1.0 + np.sum(pts ** 2, axis=1))
        out = np.zeros((pts.shape[0], p, p), dtype=complex)
        mask = br > R
        if np.any(mask):
            mats = sym(pts[mask])
            s = np.linalg.svd(mats, compute_uv=False)
            bad = s[:, -1] <= SVD_RTOL * s[:, 0]
            if np.any(bad):
                k = tuple(float(v) for v in pts[mask][np.argmax(bad)])
                raise SingularSymbolError(f"A(k) is singular at k={k} beyond R={R}",
                                          witness=k)
            out[mask] = np.linalg.inv(mats)
        return out

    def principal(xi):
        return np.linalg.inv(prin(xi))

    return DNSystem(A.n, A.col_sizes, A.row_sizes, tuple(-v for v in A.m),
                    tuple(-v for v in A.ell), symbol, principal,
                    name=f"parametrix({A.name}, R={R:g})" if A.name else f"parametrix(R={R:g})")


@dataclass(frozen=True)
class ParametrixResiduals:
    """Residuals of ``BA - I`` and ``AB - I`` inside and beyond the cutoff."""

    beyond_BA: float
    beyond_AB: float
    support: tuple  # frequencies where the remainder is nonzero


def parametrix_residuals(A, B, N, R):
    """Relative per-frequency residuals ``||B(k)A(k) - I|| / ||I||`` for ``<k> > R``
    and the set of frequencies carrying a nonzero remainder."""
    lat = FrequencyLattice(A.n, N)
    a, b = A(lat.points), B(lat.points)
    eye = np.eye(A.p)
    r1 = np.linalg.norm(b @ a - eye, ord=2, axis=(1, 2))
    r2 = np.linalg.norm(a @ b - eye, ord=2, axis=(1, 2))
    mask = lat.bracket > R
    beyond1 = float(np.max(r1[mask])) if np.any(mask) else 0.0
    beyond2 = float(np.max(r2[mask])) if np.any(mask) else 0.0
    nz = (r1 > 1e-12) | (r2 > 1e-12)
    support = tuple(tuple(int(v) for v in k) for k in lat.points[nz])
    return ParametrixResiduals(beyond1, beyond2, support)


# -- Fredholm ------------------------------------------------------------------

def _mode_section(lattice, idx, vec):
    c = np.zeros((lattice.size, vec.size), dtype=complex)
    c[idx] = vec
    return SpectralSection(lattice, c)


@dataclass(frozen=True)
class FredholmReport:
    """Kernel and cokernel bases (single-frequency modes), index, solvability.

    ``pairings`` lists ``<f, w>`` for each cokernel element ``w``;
    ``solution`` is the minimal-norm solution when ``solvable``.
    """

    kernel_basis: list
    cokernel_basis: list
    index: int
    solvable: bool
    solution: SpectralSection | None
    pairings: tuple = ()
    residual: float = 0.0
    u_norm: float | None = None
    f_norm: float | None = None
    kernel_modes: tuple = field(default=(), repr=False)
    cokernel_modes: tuple = field(default=(), repr=False)

    @property
    def dim_kernel(self):
        return len(self.kernel_basis)

    @property
    def dim_cokernel(self):
        return len(self.cokernel_basis)

    @property
    def max_pairing(self):
        return max((abs(p) for p in self.pairings), default=0.0)

    def to_json(self):
        def modes(items):
            return [{"k": list(k), "re": [float(f"{v:.12g}") for v in vec.real],
                     "im": [float(f"{v:.12g}") for v in vec.imag]} for k, vec in items]

        doc = {
            "index": self.index,
            "dim_kernel": self.dim_kernel,
            "dim_cokernel": self.dim_cokernel,
            "solvable": self.solvable,
            "max_pairing": float(f"{self.max_pairing:.12g}"),
            "residual": float(f"{self.residual:.12g}"),
            "u_norm": None if self.u_norm is None else float(f"{self.u_norm:.12g}"),
            "f_norm": None if self.f_norm is None else float(f"{self.f_norm:.12g}"),
            "kernel": modes(self.kernel_modes),
            "cokernel": modes(self.cokernel_modes),
        }
        if self.solution is not None:
            sol = self.solution
            nz = np.any(np.abs(sol.coeffs) > 0, axis=1)
            doc["solution"] = modes((tuple(int(c) for c in sol.lattice.points[i]), sol.coeffs[i])
                                    for i in np.flatnonzero(nz))
        return json.dumps(doc, sort_keys=True)


def _clean(vec):
    """Fix the phase so the largest component is real positive (deterministic output)."""
    i = int(np.argmax(np.abs(vec)))
    if abs(vec[i]) == 0:
        return vec
    return vec * (abs(vec[i]) / vec[i])


def fredholm_solve(A, f, phi=None, check_ellipticity=True):
    """Kernel, cokernel, index and minimal-norm solution of ``A u = f``.

    Per frequency, singular values at most ``1e-10 * s_max(k)`` count as
    zero.  ``f`` is compatible when ``|<f, w>| <= 1e-8 ||f||`` for every
    cokernel mode ``w``; then ``u_k = pinv(A(k)) f_k``.
    """
    _check_section(A, f)
    if check_ellipticity:
        require_elliptic(A)
    phi = phi if phi is not None else Power(0.0)
    lat = f.lattice
    mats = A(lat.points)
    U, s, Vh = np.linalg.svd(mats)
    smax = s[:, :1]
    zero = s <= SVD_RTOL * smax
    kernel, kmodes, cokernel, cmodes = [], [], [], []
    for i in np.flatnonzero(zero.any(axis=1)):
        k = tuple(int(v) for v in lat.points[i])
        for col in np.flatnonzero(zero[i]):
            v = _clean(np.conj(Vh[i, col, :]))
            w = _clean(U[i, :, col])
            kernel.append(_mode_section(lat, i, v))
            kmodes.append((k, v))
            cokernel.append(_mode_section(lat, i, w))
            cmodes.append((k, w))
    # square blocks: kernel and cokernel dimensions agree per frequency
    pairings = tuple(complex(np.vdot(w, f.coeffs[lat.index_of(k)]))
                     for k, w in cmodes)
    fnorm = float(np.linalg.norm(f.coeffs))
    solvable = all(abs(p) <= COMPAT_RTOL * fnorm for p in pairings)
    solution, residual, u_norm = None, 0.0, None
    if solvable:
        pinv = np.linalg.pinv(mats, rcond=SVD_RTOL)
        u = SpectralSection(lat, np.einsum("kij,kj->ki", pinv, f.coeffs))
        solution = u
        residual = float(np.linalg.norm(apply(A, u).coeffs - f.coeffs))
        u_norm = graded_norm(A, u, phi, "source")
    f_norm = graded_norm(A, f, phi, "target")
    return FredholmReport(kernel, cokernel, len(kernel) - len(cokernel), bool(solvable),
                          solution, pairings, residual, u_norm, f_norm,
                          tuple(kmodes), tuple(cmodes))
