"""Exact Laurent-type series in the shifted variable z = x1 - i*eps.

A :class:`CoeffSeries` is a finite sum ``sum_e c_e * z**e`` where the
exponents ``e`` are half-integers (stored as :class:`fractions.Fraction`).
Coefficients may be Python numbers or sympy expressions, which lets the
same code serve numerical evaluation and exact symbolic audits.

The conjugate of such a series lives in the variable ``x1 + i*eps``; it is
tracked with ``branch=-1``.  Arithmetic between series on different
branches is refused because the result is not of this form.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Number

import numpy as np
import sympy as sp


def _frac(e) -> Fraction:
    f = Fraction(e)
    if (2 * f).denominator != 1:
        raise ValueError(f"exponent {e} is not a half-integer")
    return f


def _is_zero(c) -> bool:
    if isinstance(c, sp.Basic):
        return sp.expand(c) == 0
    return c == 0


def _conj(c):
    if isinstance(c, sp.Basic):
        return sp.conjugate(c)
    return complex(c).conjugate() if isinstance(c, complex) else c


class CoeffSeries:
    """Finite sum of ``c * (x1 - branch*i*eps)**e`` terms."""

    __slots__ = ("eps", "terms", "branch")

    def __init__(self, terms=None, eps=1.0, branch=1):
        self.eps = eps
        self.branch = branch
        self.terms: dict[Fraction, object] = {}
        for e, c in (terms or {}).items():
            e = _frac(e)
            self.terms[e] = self.terms.get(e, 0) + c
        self._prune()

    # -- construction helpers -------------------------------------------------
    @classmethod
    def zero(cls, eps=1.0, branch=1):
        return cls({}, eps, branch)

    @classmethod
    def monomial(cls, exponent, coeff=1, eps=1.0, branch=1):
        return cls({exponent: coeff}, eps, branch)

    @classmethod
    def x1(cls, eps=1.0, branch=1):
        """The coordinate x1 itself, written as z + branch*i*eps."""
        ieps = (sp.I if isinstance(eps, sp.Basic) else 1j) * eps * branch
        return cls({1: 1, 0: ieps}, eps, branch)

    def _prune(self):
        self.terms = {e: c for e, c in self.terms.items() if not _is_zero(c)}

    def _like(self, terms):
        return CoeffSeries(terms, self.eps, self.branch)

    def _check(self, other):
        if other.branch != self.branch:
            raise ValueError("cannot combine series on conjugate branches")

    # -- algebra --------------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, CoeffSeries):
            self._check(other)
            out = dict(self.terms)
            for e, c in other.terms.items():
                out[e] = out.get(e, 0) + c
            return self._like(out)
        if _is_zero(other):
            return self
        return self + self._like({0: other})

    __radd__ = __add__

    def __neg__(self):
        return self._like({e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, CoeffSeries):
            self._check(other)
            out: dict[Fraction, object] = {}
            for e1, c1 in self.terms.items():
                for e2, c2 in other.terms.items():
                    out[e1 + e2] = out.get(e1 + e2, 0) + c1 * c2
            return self._like(out)
        return self._like({e: c * other for e, c in self.terms.items()})

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("only nonnegative integer powers")
        out = self._like({0: 1})
        for _ in range(n):
            out = out * self
        return out

    def diff(self):
        """d/dx1, exact on exponents."""
        return self._like({e - 1: c * e_num(e, self.terms[e]) for e, c in self.terms.items()})

    def conjugate(self):
        return CoeffSeries({e: _conj(c) for e, c in self.terms.items()}, self.eps, -self.branch)

    def simplify(self):
        if any(isinstance(c, sp.Basic) for c in self.terms.values()):
            return self._like({e: sp.expand(c) for e, c in self.terms.items()})
        return self

    def is_zero(self) -> bool:
        return all(_is_zero(c) for c in self.terms.values())

    def __eq__(self, other):
        if not isinstance(other, CoeffSeries):
            return NotImplemented
        return self.branch == other.branch and (self - other).is_zero()

    def __hash__(self):  # pragma: no cover - series are not meant as dict keys
        raise TypeError("CoeffSeries is unhashable")

    def __repr__(self):
        sign = "-" if self.branch == 1 else "+"
        body = " + ".join(f"({c})*z^{e}" for e, c in sorted(self.terms.items()))
        return f"CoeffSeries[z=x1{sign}i*eps]({body or '0'})"

    # -- evaluation -----------------------------------------------------------
    def __call__(self, x1):
        """Evaluate numerically on the principal branch (needs x1 > 0 or eps > 0)."""
        x1 = np.asarray(x1, dtype=float)
        z = x1 - 1j * float(self.eps) * self.branch
        logz = np.log(z)
        out = np.zeros(x1.shape, dtype=complex)
        for e, c in self.terms.items():
            out = out + complex(c) * np.exp(float(e) * logz)
        return out

    def to_sympy(self, x1: sp.Symbol, eps=None):
        eps = self.eps if eps is None else eps
        z = x1 - self.branch * sp.I * eps
        return sum((sp.sympify(c) * z ** sp.Rational(e.numerator, e.denominator)
                    for e, c in self.terms.items()), sp.Integer(0))


def e_num(e: Fraction, c):
    """Exponent as a number compatible with the coefficient type."""
    if isinstance(c, sp.Basic):
        return sp.Rational(e.numerator, e.denominator)
    if isinstance(c, Number) and not isinstance(c, (float, complex)):
        return e
    return float(e)


RESONANCE_TOL = 1e-12


def solve_transport(rate, source: CoeffSeries, homogeneous=0) -> CoeffSeries:
    """Solve ``y' + rate/z * y + source = 0`` exactly in the series algebra.

    Each source term ``c z^e`` yields the particular term ``-c/(e+1+rate) z^(e+1)``;
    the homogeneous part is ``homogeneous * z^(-rate)``.  A resonant exponent
    (``e + 1 + rate == 0``) would need a logarithm and raises ``ValueError``.
    """
    rate = _frac(rate)
    out = {}
    for e, c in source.terms.items():
        denom = e + 1 + rate
        if denom == 0:
            if not isinstance(c, sp.Basic) and abs(c) < RESONANCE_TOL:
                continue  # floating-point remnant of an exactly cancelling term
            raise ValueError(f"resonant source exponent {e} for rate {rate}")
        out[e + 1] = -c / e_num(denom, c)
    if not _is_zero(homogeneous):
        out[-rate] = out.get(-rate, 0) + homogeneous
    return CoeffSeries(out, source.eps, source.branch)
