"""Quadratic interpolation with a function parameter on diagonal pairs.

A Hilbert pair ``[X0, X1]`` on a frequency lattice is given by two weight
sequences with ``||u||_i^2 = sum_k w_i(k)^2 |u_k|^2``.  Its generating
operator is the multiplier ``j(k) = w1(k) / w0(k) >= 1`` and the
interpolation space with parameter ``psi`` has the norm

    ||u||_psi = ||psi(J) u||_0 = (sum_k psi(j(k))^2 w0(k)^2 |u_k|^2)^(1/2).

On a finite lattice every such pair is trivially regular, so the checks
below verify functional-calculus identities, not density statements.
Each ``verify_*`` function returns a relative deviation.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .params import (
    Reiterated,
    interpolation_parameter,
    inverse,
    windowed_bounded,
)
from .torus_spaces import FrequencyLattice, SpectralSection, _log_terms, _sqrt_sum_exp, h_norm

__all__ = [
    "DiagonalPair",
    "sobolev_pair",
    "direct_sum",
    "interp_norm",
    "embedding_constants",
    "check_class_b",
    "verify_prop1_identity",
    "verify_reiteration",
    "verify_orthogonal_sum",
    "verify_duality_interp",
    "DeviationRecord",
    "deviation_csv",
]


@dataclass(frozen=True, eq=False)
class DiagonalPair:
    """Diagonal Hilbert pair with weights ``w0 <= w1`` on ``lattice``.

    ``w0``/``w1`` are stored as logarithms to keep high orders finite.
    """

    lattice: FrequencyLattice
    log_w0: np.ndarray
    log_w1: np.ndarray

    def __post_init__(self):
        for name in ("log_w0", "log_w1"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.shape != (self.lattice.size,):
                raise ValueError(f"{name} must have one entry per lattice point")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} must be finite (weights positive)")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if np.any(self.log_w1 - self.log_w0 < -1e-12):
            raise ValueError("generating multiplier j = w1/w0 must be >= 1")

    @classmethod
    def from_weights(cls, lattice, w0, w1):
        return cls(lattice, np.log(np.asarray(w0, dtype=float)),
                   np.log(np.asarray(w1, dtype=float)))

    @property
    def log_j(self):
        return np.maximum(self.log_w1 - self.log_w0, 0.0)

    @property
    def j(self):
        return np.exp(self.log_j)

    def swapped_dual(self):
        """The dual pair ``[X1', X0']``: weights ``1/w1 <= 1/w0``."""
        return DiagonalPair(self.lattice, -self.log_w1, -self.log_w0)


def sobolev_pair(lattice, s0, s1):
    """``[H^(s0), H^(s1)]`` with ``s0 <= s1``; ``j(k) = <k>^(s1 - s0)``."""
    if s1 < s0:
        raise ValueError("need s0 <= s1")
    x = np.log(lattice.bracket)
    return DiagonalPair(lattice, s0 * x, s1 * x)


def direct_sum(pairs):
    """Pairs stacked block by block; returns ``(weights0, weights1)`` logs and
    block offsets so sections can be concatenated alongside."""
    lw0 = np.concatenate([p.log_w0 for p in pairs])
    lw1 = np.concatenate([p.log_w1 for p in pairs])
    offsets = np.cumsum([0] + [p.lattice.size for p in pairs])
    return lw0, lw1, offsets


def _weighted_norm(log_w, coeffs):
    return _sqrt_sum_exp(_log_terms(log_w, np.asarray(coeffs, dtype=complex)))


def interp_norm(pair, psi, u):
    """``||psi(J) u||_{X0}``."""
    if u.lattice != pair.lattice:
        raise ValueError("section and pair live on different lattices")
    lw = pair.log_w0 + psi.logval(pair.log_j)
    return _weighted_norm(lw, u.coeffs)


def embedding_constants(pair, psi):
    """Lattice constants of ``||u||_0 <= C0 ||u||_psi <= C1 ||u||_1``:
    ``C0 = max 1/psi(j)``, ``C1 = max psi(j)/j``."""
    lpsi = psi.logval(pair.log_j)
    return float(np.exp(np.max(-lpsi))), float(np.exp(np.max(lpsi - pair.log_j)))


def check_class_b(psi, a=1e-3, b=1e3, r=1.0, T=1e8, points=400, bound=1e12):
    """Windowed class-B test: ``psi`` bounded on ``[a, b]``, ``1/psi`` bounded
    on ``[r, T]`` (both below ``bound``).  Returns ``True`` or raises."""
    xs = np.linspace(math.log(a), math.log(b), points)
    lv = psi.logval(xs)
    if not np.all(np.isfinite(lv)) or np.max(lv) > math.log(bound):
        raise PreconditionError("psi is not bounded on the compact window")
    xs = np.linspace(math.log(r), math.log(T), points)
    if np.max(-psi.logval(xs)) > math.log(bound):
        raise PreconditionError("1/psi is not bounded near infinity")
    return True


def _rel(a, b):
    if b == 0.0:
        return abs(a)
    return abs(a - b) / abs(b)


def verify_prop1_identity(setup, u):
    """Relative gap between ``||u||_{[H^s0, H^s1]_psi}`` and ``||u||_phi``,
    ``psi`` the interpolation parameter of ``setup``."""
    psi = interpolation_parameter(setup)
    pair = sobolev_pair(u.lattice, setup.s0, setup.s1)
    lhs = interp_norm(pair, psi, u)
    rhs = h_norm(u, setup.phi).value
    if rhs == 0.0:
        warnings.warn("zero section: identity holds trivially", RuntimeWarning, stacklevel=2)
        return 0.0
    return _rel(lhs, rhs)


def verify_reiteration(pair, psi1, psi2, psi, u, T=1e8):
    """Compare ``[X_psi1, X_psi2]_psi`` with ``X_omega``,
    ``omega = psi1 * psi(psi2 / psi1)``.

    The iterated pair has weights ``psi1(j) w0`` and ``psi2(j) w0``.
    """
    if not windowed_bounded(lambda x: psi1.logval(x) - psi2.logval(x), T):
        raise PreconditionError("psi1/psi2 is not bounded near infinity")
    if u.lattice != pair.lattice:
        raise ValueError("section and pair live on different lattices")
    lj = pair.log_j
    # generating multiplier of the inner pair is psi2(j)/psi1(j); it may dip
    # below 1 where psi2 < psi1, which class-B psi handles on (0, inf)
    inner_w0 = pair.log_w0 + psi1.logval(lj)
    inner_j = psi2.logval(lj) - psi1.logval(lj)
    lhs = _weighted_norm(inner_w0 + psi.logval(inner_j), u.coeffs)
    rhs = interp_norm(pair, Reiterated(psi1, psi2, psi), u)
    return _rel(lhs, rhs)


def verify_orthogonal_sum(pairs, psi, blocks):
    """Squared interpolation norm of the orthogonal sum against the sum of
    blockwise squared norms."""
    if len(pairs) != len(blocks):
        raise ValueError("need one block per pair")
    for p, b in zip(pairs, blocks):
        if p.lattice != b.lattice:
            raise ValueError("block does not match its pair")
    if len({b.rank for b in blocks}) != 1:
        raise ValueError("blocks must share the rank")
    lw0, lw1, _ = direct_sum(pairs)
    lj = np.maximum(lw1 - lw0, 0.0)
    coeffs = np.concatenate([b.coeffs for b in blocks])
    whole = _weighted_norm(lw0 + psi.logval(lj), coeffs) ** 2
    parts = sum(interp_norm(p, psi, b) ** 2 for p, b in zip(pairs, blocks))
    return _rel(whole, parts)


def verify_duality_interp(setup, u, T=1e8):
    """Duality of interpolation spaces on a Sobolev pair.

    With ``psi`` from ``setup`` and ``chi(t) = t / psi(t)``, checks both

    * ``||u||_{[H^-s1, H^-s0]_chi} = ||u||_{1/phi}``, and
    * the dual norm of ``[H^-s1, H^-s0]_chi`` under the coefficient pairing
      equals ``||u||_{[H^s0, H^s1]_psi} = ||u||_phi``,

    and returns the larger relative deviation.
    """
    psi = interpolation_parameter(setup)
    if not windowed_bounded(lambda x: psi.logval(x) - x, T):
        raise PreconditionError("psi(t)/t is not bounded near infinity")
    phi = setup.phi
    lattice = u.lattice
    dual_pair = sobolev_pair(lattice, -setup.s1, -setup.s0)
    chi = _Chi(psi)
    dev_a = _rel(interp_norm(dual_pair, chi, u), h_norm(u, inverse(phi)).value)

    # dual norm of [Z0, Z1]_chi under the coefficient pairing, evaluated at
    # its maximizer, against [H^s0, H^s1]_psi
    lw = dual_pair.log_w0 + chi.logval(dual_pair.log_j)
    v = SpectralSection(lattice, u.coeffs * np.exp(-2.0 * lw)[:, None])
    pairing = abs(np.sum(u.coeffs * np.conj(v.coeffs)))
    v_norm = _weighted_norm(lw, v.coeffs)
    dual_value = 0.0 if v_norm == 0.0 else pairing / v_norm
    primal = interp_norm(sobolev_pair(lattice, setup.s0, setup.s1), psi, u)
    dev_b = max(_rel(dual_value, primal), _rel(primal, h_norm(u, phi).value))
    return max(dev_a, dev_b)


class _Chi:
    """``t / psi(t)``."""

    def __init__(self, psi):
        self.psi = psi

    def logval(self, x):
        return np.asarray(x, dtype=float) - self.psi.logval(x)


@dataclass(frozen=True)
class DeviationRecord:
    test: str
    setup: str
    deviation: float
    tolerance: float

    @property
    def passed(self):
        return self.deviation <= self.tolerance


def deviation_csv(records):
    """CSV rows ``test,setup,deviation,tolerance,pass``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["test", "setup", "deviation", "tolerance", "pass"])
    for r in records:
        w.writerow([r.test, r.setup, f"{r.deviation:.6e}", f"{r.tolerance:.1e}",
                    str(r.passed).lower()])
    return buf.getvalue()
