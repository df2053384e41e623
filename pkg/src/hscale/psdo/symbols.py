"""Polynomial symbols and Douglis-Nirenberg block systems.

A system acts on ``C^p``-valued sections.  Source components are grouped
into blocks of sizes ``col_sizes`` carrying orders ``m``, target
components into blocks of sizes ``row_sizes`` carrying orders ``ell``.
The entry linking target block ``j`` and source block ``k`` has order
``ell[j] + m[k]``; its principal part is the homogeneous part of that
degree.

Plain-text system files look like::

    # 2x2 mixed-order system on the circle
    n = 1
    rows = 1 1
    cols = 1 1
    ell = 0 -1
    m = 2 1
    a 1 1 = k1^2 + 1
    a 1 2 = i*k1
    a 2 1 = i*k1
    a 2 2 = 1

``a R C`` addresses the scalar entry in row ``R``, column ``C`` (1-based);
missing entries are zero.  ``rows``/``cols`` default to all-ones blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ParseError

__all__ = ["Polynomial", "DNSystem", "parse_polynomial", "parse_system", "format_system"]


@dataclass(frozen=True)
class Polynomial:
    """Complex polynomial in ``k_1..k_n``: ``{exponent tuple: coefficient}``."""

    n: int
    terms: tuple = ()

    @classmethod
    def from_dict(cls, n, terms):
        clean = tuple(sorted((tuple(int(e) for e in exp), complex(c))
                             for exp, c in terms.items() if c != 0))
        for exp, _ in clean:
            if len(exp) != n or min(exp, default=0) < 0:
                raise ValueError(f"bad exponent {exp} for n={n}")
        return cls(n, clean)

    @classmethod
    def constant(cls, n, c):
        return cls.from_dict(n, {(0,) * n: c})

    def as_dict(self):
        return dict(self.terms)

    @property
    def degree(self):
        """Total degree; ``-inf`` for the zero polynomial."""
        return max((sum(e) for e, _ in self.terms), default=float("-inf"))

    def homogeneous_part(self, d):
        return Polynomial(self.n, tuple((e, c) for e, c in self.terms if sum(e) == d))

    def conj(self):
        """Coefficientwise conjugate (the symbol conjugate at real ``k``)."""
        return Polynomial(self.n, tuple((e, c.conjugate()) for e, c in self.terms))

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        out = np.zeros(pts.shape[0], dtype=complex)
        for exp, c in self.terms:
            term = np.full(pts.shape[0], c, dtype=complex)
            for d, e in enumerate(exp):
                if e:
                    term = term * pts[:, d] ** e
            out += term
        return out

    def to_text(self):
        """Round-trippable text in the system-file syntax."""
        if not self.terms:
            return "0"
        parts = []
        for exp, c in self.terms:
            mono = "*".join(f"k{d + 1}^{e}" if e > 1 else f"k{d + 1}"
                            for d, e in enumerate(exp) if e)
            coef = _fmt_complex(c)
            parts.append(coef if not mono else f"{coef}*{mono}")
        return " + ".join(parts)


def _fmt_complex(c):
    re, im = float(c.real), float(c.imag)

    def num(v):
        return repr(int(v)) if v == int(v) else repr(v)

    if im == 0:
        return f"({num(re)})"
    if re == 0:
        return f"({num(im)}*i)"
    return f"({num(re)} + {num(im)}*i)"


def parse_polynomial(text, n):
    """Parse an expression in ``k1..kn`` (``^`` or ``**`` for powers, ``i``
    for the imaginary unit) into a :class:`Polynomial`."""
    import sympy
    from sympy.parsing.sympy_parser import (
        convert_xor,
        implicit_multiplication,
        parse_expr,
        standard_transformations,
    )

    ks = [sympy.Symbol(f"k{d + 1}", real=True) for d in range(n)]
    local = {f"k{d + 1}": ks[d] for d in range(n)}
    local.update({"i": sympy.I, "I": sympy.I})
    try:
        expr = parse_expr(text, local_dict=local, global_dict={"Integer": sympy.Integer,
                                                             "Float": sympy.Float,
                                                             "Rational": sympy.Rational,
                                                             "Symbol": sympy.Symbol},
                          transformations=standard_transformations
                          + (convert_xor, implicit_multiplication))
        poly = sympy.Poly(sympy.expand(expr), *ks)
    except Exception as exc:
        raise ParseError(f"cannot parse polynomial {text!r}: {exc}") from None
    if poly.free_symbols - set(ks):
        raise ParseError(f"unknown symbols in {text!r}")
    return Polynomial.from_dict(n, {exp: complex(c) for exp, c in poly.terms()})


def _offsets(sizes):
    return np.concatenate([[0], np.cumsum(sizes)]).astype(int)


@dataclass(frozen=True, eq=False)
class DNSystem:
    """Mixed-order system of Fourier multipliers on ``T^n``.

    Parameters
    ----------
    n : int
        Torus dimension.
    row_sizes, col_sizes : tuple of int
        Block sizes of the target (``j``) and source (``k``) decompositions.
    ell, m : tuple of float
        Target and source orders.
    symbol : callable
        ``points (M, n) -> (M, p, p)`` complex full symbol.
    principal : callable
        ``xi (M, n) -> (M, p, p)`` principal symbol on ``R^n \\ {0}``.
    entries : dict, optional
        ``(row, col) -> Polynomial`` when built from polynomials; enables
        serialization and exact adjoints.
    """

    n: int
    row_sizes: tuple
    col_sizes: tuple
    ell: tuple
    m: tuple
    symbol: object
    principal: object
    entries: dict | None = field(default=None)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "row_sizes", tuple(int(s) for s in self.row_sizes))
        object.__setattr__(self, "col_sizes", tuple(int(s) for s in self.col_sizes))
        object.__setattr__(self, "ell", tuple(float(v) for v in self.ell))
        object.__setattr__(self, "m", tuple(float(v) for v in self.m))
        if len(self.ell) != len(self.row_sizes) or len(self.m) != len(self.col_sizes):
            raise ValueError("one order per block required")
        if min(self.row_sizes + self.col_sizes) < 1:
            raise ValueError("block sizes must be positive")
        if sum(self.row_sizes) != sum(self.col_sizes):
            raise ValueError("total system must be square (sum of row sizes = sum of col sizes)")

    @property
    def p(self):
        return sum(self.col_sizes)

    @property
    def row_orders(self):
        """``ell_j`` per scalar target component."""
        return np.repeat(self.ell, self.row_sizes)

    @property
    def col_orders(self):
        """``m_k`` per scalar source component."""
        return np.repeat(self.m, self.col_sizes)

    @property
    def entry_orders(self):
        """``(p, p)`` array of ``ell_j + m_k``."""
        return self.row_orders[:, None] + self.col_orders[None, :]

    def block_of_column(self, c):
        return int(np.searchsorted(_offsets(self.col_sizes), c, side="right") - 1)

    def __call__(self, points):
        return np.asarray(self.symbol(np.asarray(points, dtype=float)), dtype=complex)

    @classmethod
    def from_polynomials(cls, n, ell, m, entries, row_sizes=None, col_sizes=None, name=""):
        """Build from scalar polynomial entries ``{(row, col): Polynomial}`` (0-based).

        Each entry must have degree at most its order ``ell_j + m_k``; the
        principal part keeps the terms of exactly that degree.
        """
        row_sizes = tuple(row_sizes or (1,) * len(ell))
        col_sizes = tuple(col_sizes or (1,) * len(m))
        p = sum(col_sizes)
        rows = np.repeat(np.asarray(ell, float), row_sizes)
        cols = np.repeat(np.asarray(m, float), col_sizes)
        entries = {(int(r), int(c)): poly for (r, c), poly in entries.items()}
        principal_entries = {}
        for (r, c), poly in entries.items():
            if not (0 <= r < p and 0 <= c < p):
                raise ValueError(f"entry ({r + 1}, {c + 1}) outside the {p}x{p} system")
            order = rows[r] + cols[c]
            if poly.degree > order + 1e-12:
                raise ValueError(
                    f"entry ({r + 1}, {c + 1}) has degree {poly.degree} above its order {order:g}")
            if float(order).is_integer() and order >= 0:
                principal_entries[(r, c)] = poly.homogeneous_part(int(order))

        def symbol(pts, entries=entries, p=p):
            pts = np.atleast_2d(pts)
            out = np.zeros((pts.shape[0], p, p), dtype=complex)
            for (r, c), poly in entries.items():
                out[:, r, c] = poly(pts)
            return out

        def principal(xi, pe=principal_entries, p=p):
            xi = np.atleast_2d(xi)
            out = np.zeros((xi.shape[0], p, p), dtype=complex)
            for (r, c), poly in pe.items():
                out[:, r, c] = poly(xi)
            return out

        return cls(n, row_sizes, col_sizes, tuple(ell), tuple(m), symbol, principal,
                   entries=entries, name=name)

    def adjoint(self):
        """Formal adjoint: conjugate-transposed symbol, orders ``ell`` and ``m`` swapped."""
        sym, prin = self.symbol, self.principal

        def symbol(pts):
            return np.conj(np.swapaxes(sym(pts), -1, -2))

        def principal(xi):
            return np.conj(np.swapaxes(prin(xi), -1, -2))

        entries = None
        if self.entries is not None:
            entries = {(c, r): poly.conj() for (r, c), poly in self.entries.items()}
        return DNSystem(self.n, self.col_sizes, self.row_sizes, self.m, self.ell,
                        symbol, principal, entries=entries,
                        name=f"adjoint({self.name})" if self.name else "adjoint")


def _ints(text):
    return [int(v) for v in text.split()]


def _floats(text):
    return [float(v) for v in text.split()]


def parse_system(text, name=""):
    """Parse a plain-text system description (see module docstring)."""
    n = None
    meta, raw_entries = {}, []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        parts = key.split()
        if parts[0] == "a":
            if len(parts) != 3:
                raise ParseError(f"line {lineno}: entry key must be 'a ROW COL'")
            try:
                r, c = int(parts[1]) - 1, int(parts[2]) - 1
            except ValueError:
                raise ParseError(f"line {lineno}: bad entry indices") from None
            raw_entries.append((r, c, value, lineno))
        elif key in ("n", "rows", "cols", "ell", "m", "name"):
            meta[key] = value
        else:
            raise ParseError(f"line {lineno}: unknown key {key!r}")
    try:
        n = int(meta["n"])
        ell = _floats(meta["ell"])
        m = _floats(meta["m"])
        rows = _ints(meta["rows"]) if "rows" in meta else [1] * len(ell)
        cols = _ints(meta["cols"]) if "cols" in meta else [1] * len(m)
    except KeyError as exc:
        raise ParseError(f"missing key {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    entries = {}
    for r, c, value, lineno in raw_entries:
        if (r, c) in entries:
            raise ParseError(f"line {lineno}: duplicate entry ({r + 1}, {c + 1})")
        entries[(r, c)] = parse_polynomial(value, n)
    try:
        return DNSystem.from_polynomials(n, ell, m, entries, rows, cols,
                                         name=meta.get("name", name))
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def format_system(A):
    """Inverse of :func:`parse_system` for polynomial systems."""
    if A.entries is None:
        raise ValueError("only polynomial systems can be serialized")

    def nums(vs):
        return " ".join(repr(int(v)) if float(v).is_integer() else repr(float(v)) for v in vs)

    lines = []
    if A.name:
        lines.append(f"name = {A.name}")
    lines += [f"n = {A.n}", f"rows = {nums(A.row_sizes)}", f"cols = {nums(A.col_sizes)}",
              f"ell = {nums(A.ell)}", f"m = {nums(A.m)}"]
    for (r, c) in sorted(A.entries):
        lines.append(f"a {r + 1} {c + 1} = {A.entries[(r, c)].to_text()}")
    return "\n".join(lines) + "\n"
