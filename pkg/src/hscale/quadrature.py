"""Adaptive quadrature for improper integrals of OR-type integrands.

Integrands are supplied in log form and in the variable ``x = log t``.
Everything downstream is evaluated in log space, so integrands such as
``1 / (t log^2 t)`` can be followed out to ``t = exp(1e6)`` without
overflow.  The half line ``x >= 0`` is mapped once more through
``y = log(1 + x)``; in that variable power-of-log tails decay
exponentially, which is what makes a short window plus a local tail
estimate accurate to ~1e-10.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import QuadratureError

__all__ = [
    "adaptive_simpson",
    "TailIntegral",
    "loglog_integral",
    "loglog_tail_table",
]

_LOG_OVERFLOW = 700.0


def adaptive_simpson(f, breakpoints, tol=1e-10, min_level=2, max_level=48):
    """Integrate ``f`` over consecutive segments of ``breakpoints``.

    Breadth-first adaptive Simpson: every refinement level evaluates the
    integrand on all unfinished intervals in one vectorised call.  The
    absolute tolerance ``tol`` is distributed proportionally to interval
    length.

    Returns
    -------
    ndarray
        One integral per segment (``len(breakpoints) - 1`` values).
    """
    bp = np.asarray(breakpoints, dtype=float)
    if bp.ndim != 1 or bp.size < 2:
        raise ValueError("need at least two breakpoints")
    span = bp[-1] - bp[0]
    if span <= 0:
        raise ValueError("breakpoints must be increasing")
    nseg = bp.size - 1

    fbp = _checked(f, bp)
    a, b = bp[:-1], bp[1:]
    m = 0.5 * (a + b)
    fa, fb = fbp[:-1], fbp[1:]
    fm = _checked(f, m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    seg = np.arange(nseg)
    out = np.zeros(nseg)

    for level in range(max_level):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        vals = _checked(f, np.concatenate([lm, rm]))
        flm, frm = vals[: a.size], vals[a.size:]
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        err = left + right - whole
        eps = tol * (b - a) / span
        done = np.abs(err) <= 15.0 * eps
        if level + 1 < min_level:
            done[:] = False
        if done.any():
            out += np.bincount(seg[done], weights=(left + right + err / 15.0)[done],
                               minlength=nseg)
        keep = ~done
        if not keep.any():
            return out
        a, m, b = a[keep], m[keep], b[keep]
        fa, fm, fb = fa[keep], fm[keep], fb[keep]
        lm, rm, flm, frm = lm[keep], rm[keep], flm[keep], frm[keep]
        left, right, seg = left[keep], right[keep], seg[keep]
        # children: [a, m] and [m, b]
        a, m, b, fa, fm, fb, whole, seg = (
            np.concatenate([a, m]),
            np.concatenate([lm, rm]),
            np.concatenate([m, b]),
            np.concatenate([fa, fm]),
            np.concatenate([flm, frm]),
            np.concatenate([fm, fb]),
            np.concatenate([left, right]),
            np.concatenate([seg, seg]),
        )
    raise QuadratureError(
        f"adaptive Simpson did not reach tol={tol:g} within {max_level} levels"
    )


def _checked(f, x):
    v = np.asarray(f(x), dtype=float)
    if not np.all(np.isfinite(v)):
        raise QuadratureError("non-finite integrand value")
    return v


@dataclass(frozen=True)
class TailIntegral:
    """Result of an integral over ``[x0, inf)``.

    ``converged`` is True/False for a clear verdict and None when the fitted
    decay rate sits inside the indeterminate margin.  ``decay_rate`` is the
    slope of the log integrand in ``y = log(1 + x)`` over the last unit of
    the window; negative means exponential decay in ``y``.
    """

    value: float
    converged: bool | None
    decay_rate: float
    head: float
    tail: float
    window: float


def _log_h(log_integrand, y):
    x = np.expm1(y)
    return np.asarray(log_integrand(x), dtype=float) + y


def _decay_rate(log_integrand, y_max):
    ys = np.linspace(y_max - 1.0, y_max, 17)
    lh = _log_h(log_integrand, ys)
    if np.any(np.isnan(lh)):
        raise QuadratureError("NaN in integrand tail")
    if np.all(lh == -np.inf):
        return -np.inf, -np.inf
    if np.any(~np.isfinite(lh)):
        raise QuadratureError("non-finite integrand tail")
    slope = np.polyfit(ys, lh, 1)[0]
    return float(slope), float(lh[-1])


def _log_tail(log_integrand, y_max, rate, lh_end, h=1e-3):
    """``log int_{y_max}^inf H(y) dy`` from the local log-slope at ``y_max``.

    ``H / (-d log H / dy)`` is exact for ``H = exp(-c y)`` and correct to
    leading order for ``H = exp(-c exp(y))``, i.e. for tails that are powers
    of ``log t`` or of ``t``.  Falls back to the window-fitted ``rate`` if
    the local slope is not negative (oscillating integrands).
    """
    if not np.isfinite(lh_end):
        return -np.inf
    l1, l2 = _log_h(log_integrand, np.array([y_max - h, y_max - 2 * h]))
    local = (3.0 * lh_end - 4.0 * l1 + l2) / (2.0 * h)
    slope = local if local < 0 else rate
    return lh_end - np.log(-slope)


def loglog_integral(log_integrand, x0=0.0, y_max=14.0, tol=1e-10, margin=0.05):
    """Integrate ``exp(log_integrand(x))`` over ``[x0, inf)``.

    Parameters
    ----------
    log_integrand : callable
        Vectorised ``x -> log g(x)``.  For an integral in ``t`` the caller
        folds the Jacobian ``dt = t dx`` into ``g``.
    x0 : float
        Lower limit, ``x0 >= 0``.
    y_max : float
        Window end in ``y = log(1 + x)``; 14 corresponds to ``t ~ exp(1.2e6)``.
    tol : float
        Absolute tolerance of the windowed part.
    margin : float
        Decay rates in ``[-margin, 0)`` are reported as indeterminate.
    """
    if x0 < 0:
        raise ValueError("x0 must be nonnegative")
    y0 = float(np.log1p(x0))
    if y_max <= y0 + 1.0:
        raise ValueError("window too short")
    rate, lh_end = _decay_rate(log_integrand, y_max)
    if rate >= 0:
        return TailIntegral(np.inf, False, rate, np.inf, np.inf, y_max)

    nbp = max(3, int(np.ceil((y_max - y0) / 0.5)) + 1)
    bp = np.linspace(y0, y_max, nbp)
    probe = _log_h(log_integrand, np.linspace(y0, y_max, 8 * nbp))
    if np.nanmax(probe) > _LOG_OVERFLOW:
        raise QuadratureError("integrand overflows on the window")
    head = float(np.sum(adaptive_simpson(
        lambda y: np.exp(_log_h(log_integrand, y)), bp, tol=tol)))
    tail = float(np.exp(_log_tail(log_integrand, y_max, rate, lh_end)))
    converged = True if rate < -margin else None
    return TailIntegral(head + tail, converged, rate, head, tail, y_max)


def loglog_tail_table(log_integrand, y_grid, rtol=1e-12, margin=0.05):
    """Tabulate ``log eta(x)`` with ``eta(x) = int_x^inf exp(log_integrand)``.

    ``y_grid`` is increasing with ``y_grid[0] >= 0``; values refer to
    ``x = expm1(y_grid)``.  Each segment integral is computed in ``x`` after
    dividing by the integrand at the left end, so the table stays finite even
    where ``eta`` itself underflows.  Returns ``(log_eta, decay_rate)`` and
    raises if the tail does not converge.
    """
    y = np.asarray(y_grid, dtype=float)
    if y.ndim != 1 or y.size < 2 or np.any(np.diff(y) <= 0) or y[0] < 0:
        raise ValueError("y_grid must be increasing and start at y >= 0")
    rate, lh_end = _decay_rate(log_integrand, y[-1])
    if not rate < -margin:
        raise QuadratureError(
            f"tail does not converge (decay rate {rate:.4g} in log-log variable)")
    x = np.expm1(y)
    lx = np.asarray(log_integrand(x), dtype=float)
    if not np.all(np.isfinite(lx)):
        raise QuadratureError("non-finite integrand on the grid")
    log_seg = np.empty(y.size - 1)
    for i in range(y.size - 1):
        ref = lx[i]
        with warnings.catch_warnings():
            # roundoff warnings near the requested rtol are harmless here;
            # the value is checked below
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, _ = integrate.quad(lambda s, ref=ref: np.exp(float(log_integrand(s)) - ref),
                                    x[i], x[i + 1], epsabs=0.0, epsrel=rtol, limit=200)
        if not (np.isfinite(val) and val > 0):
            raise QuadratureError(f"segment integral failed near x={x[i]:.6g}")
        log_seg[i] = np.log(val) + ref
    log_tail = _log_tail(log_integrand, y[-1], rate, lh_end)
    log_eta = np.empty_like(y)
    log_eta[-1] = log_tail
    acc = log_tail
    for i in range(y.size - 2, -1, -1):
        acc = np.logaddexp(acc, log_seg[i])
        log_eta[i] = acc
    return log_eta, rate
