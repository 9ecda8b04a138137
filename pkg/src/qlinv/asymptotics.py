"""Stationary phase for integrals int e^{i lam F(t)} U(t) dt with a nondegenerate
critical point at t = 0, the phase functions of the Gaussian triple product,
and the exact moment identities used by the density arguments.

Phases and amplitudes are handled through Taylor coefficients at 0, so the
operators ``L_j`` are evaluated exactly (numbers or sympy expressions).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
import sympy as sp
from scipy import integrate

from .quasimode import psi_series


# ---------------------------------------------------------------------------
# truncated power series as coefficient lists
# ---------------------------------------------------------------------------


def _mul(a, b, n):
    out = [0] * n
    for i, x in enumerate(a[:n]):
        if x == 0:
            continue
        for j, y in enumerate(b[: n - i]):
            out[i + j] = out[i + j] + x * y
    return out


def _pow(a, m, n):
    out = [1] + [0] * (n - 1)
    for _ in range(m):
        out = _mul(out, a, n)
    return out


@dataclass
class PhaseModel:
    """Phase F through its Taylor coefficients at the stationary point 0."""

    coeffs: list
    func: Callable | None = None
    interval: tuple = (-1.0, 1.0)

    def __post_init__(self):
        if len(self.coeffs) < 3:
            raise ValueError("phase needs Taylor coefficients through t^2")
        if self.coeffs[1] != 0:
            raise ValueError("F'(0) must vanish")
        if self.coeffs[2] == 0:
            raise ValueError("F''(0) must be nonzero")

    @property
    def f0(self):
        return self.coeffs[0]

    @property
    def fpp(self):
        return 2 * self.coeffs[2]

    @property
    def g(self):
        """Taylor coefficients of G = F - F(0) - F''(0) t^2 / 2."""
        return [0, 0, 0] + list(self.coeffs[3:])

    def __call__(self, t):
        if self.func is not None:
            return self.func(t)
        t = np.asarray(t, dtype=float)
        return sum(complex(c) * t**j for j, c in enumerate(self.coeffs))

    def im_nonnegative(self, n=2001) -> bool:
        t = np.linspace(*self.interval, n)
        return bool(np.all(np.imag(self(t)) >= -1e-14))


@dataclass
class AmplitudeSample:
    """Amplitude with Taylor coefficients at 0 (and optionally a pointwise evaluator)."""

    taylor: list
    func: Callable | None = None

    def coeff(self, m):
        return self.taylor[m] if m < len(self.taylor) else None


def lj_terms(phase: PhaseModel, U: AmplitudeSample, k: int):
    """[L_0 U, ..., L_{k-1} U] from the generic double sum over (nu, mu).

    L_j U = sum_{nu - mu = j, 2 nu >= 3 mu} i^{-j} / (nu! mu!) (-1/(2F''(0)))^nu d^{2nu}(G^mu U)(0).
    """
    symbolic = any(isinstance(c, sp.Basic) for c in list(phase.coeffs) + list(U.taylor))
    imag = sp.I if symbolic else 1j
    fact = sp.factorial if symbolic else math.factorial
    A = -1 / (2 * phase.fpp) if not symbolic else -sp.Integer(1) / (2 * phase.fpp)
    out = []
    for j in range(k):
        total = 0
        for mu in range(0, 2 * j + 1):
            nu = j + mu
            if 2 * nu < 3 * mu:
                continue
            n = 2 * nu + 1
            need = 2 * nu - 3 * mu  # highest U derivative entering
            if need >= len(U.taylor):
                raise ValueError(f"L_{j} needs U derivatives through order {need}")
            g = list(phase.g) + [0] * max(0, n - len(phase.g))
            prod = _mul(_pow(g, mu, n), list(U.taylor) + [0] * n, n)
            deriv = fact(2 * nu) * prod[2 * nu]
            total = total + imag ** (-j) / (fact(nu) * fact(mu)) * A**nu * deriv
        out.append(sp.simplify(total) if symbolic else total)
    return out


def stationary_expand(phase: PhaseModel, U: AmplitudeSample, lam: float, k: int = 3):
    """e^{i lam F(0)} (2 pi i / (lam F''(0)))^(1/2) sum_{j<k} lam^-j L_j U, and the L_j list."""
    if k > 3 or k < 1:
        raise ValueError("k must be 1, 2 or 3")
    terms = [complex(t) for t in lj_terms(phase, U, k)]
    pref = np.exp(1j * lam * complex(phase.f0)) * np.sqrt(2j * np.pi / (lam * complex(phase.fpp)))
    return pref * sum(lam ** (-j) * t for j, t in enumerate(terms)), terms


def oscillatory_quadrature(phase: PhaseModel, U: AmplitudeSample, lam: float, rtol=1e-12):
    """Direct adaptive quadrature of int_I e^{i lam F} U over the phase interval."""
    a, b = phase.interval
    w = 1.0 / math.sqrt(lam)
    pts = sorted({a, b, 0.0, *[c for c in (-8 * w, -2 * w, 2 * w, 8 * w) if a < c < b]})
    f = lambda t: np.exp(1j * lam * phase(t)) * U.func(t)  # noqa: E731
    total = 0j
    for lo, hi in zip(pts[:-1], pts[1:]):
        val, _ = integrate.quad(f, lo, hi, complex_func=True, epsabs=0.0, epsrel=rtol, limit=400)
        total += val
    return total


# ---------------------------------------------------------------------------
# phases of the Gaussian triple product
# ---------------------------------------------------------------------------


def _taylor_from_psi(psi, x1, part):
    """Coefficients in x2 of part(Psi) at fixed x1 (part: 'im' or 're')."""
    vals = []
    for c in psi:
        v = complex(c(np.array(x1)))
        vals.append(v.imag if part == "im" else v.real)
    return vals


def phase_F(eps: float, x1: float, p3=0, p4=0, p5=0, interval=(-0.5, 0.5)):
    """(F2, F1) for three probes sharing Psi: F2 = 4i Im Psi, F1 = 4i (Re Psi - x1)."""
    psi = psi_series(eps, p3, p4, p5)
    im = _taylor_from_psi(psi, x1, "im")
    re = _taylor_from_psi(psi, x1, "re")
    f2 = [4j * c for c in im]
    f1 = [4j * c for c in re]
    f1[0] -= 4j * x1
    F2 = PhaseModel(f2, interval=interval)
    F1 = lambda t: sum(c * np.asarray(t) ** j for j, c in enumerate(f1))  # noqa: E731
    return F2, F1


def phase_F_symbolic(x1: sp.Symbol, eps: sp.Symbol):
    """F2 as a symbolic PhaseModel (p3 = p4 = p5 = 0)."""
    psi = psi_series(eps)
    coeffs = []
    for c in psi:
        f = c.to_sympy(x1, eps)
        coeffs.append(sp.simplify(2 * (f - sp.conjugate(f))))  # 4i Im
    return PhaseModel(coeffs)


def lj_closed_forms(eps, x1, U0, U2, U4):
    """(L0 U, L1 U, L2 U) for F2 given U, d2^2 U, d2^4 U at x2 = 0.

    The U-coefficient of L1 is 3(3 x1^2 - eps^2)/(32 eps s), s = x1^2 + eps^2,
    the value produced by the generic formula and confirmed by quadrature.
    """
    s = x1**2 + eps**2
    r = 3 * x1**2 - eps**2
    L0 = U0
    L1 = s / (8 * eps) * U2 + 3 * r / (32 * eps * s) * U0
    L2 = (s**2 * U4 + 15 * r / 2 * U2 + 105 * r**2 / (16 * s**2) * U0) / (128 * eps**2)
    return L0, L1, L2


def l1_printed_form(eps, x1, U0, U2):
    """L1 with the U-coefficient (3 x1^2 - eps^2)/(64 eps s) as commonly displayed."""
    s = x1**2 + eps**2
    return (s * U2 + (3 * x1**2 - eps**2) / (8 * s) * U0) / (8 * eps)


# ---------------------------------------------------------------------------
# moment identities
# ---------------------------------------------------------------------------


def _dfact_ratio(l):
    """(2l-1)!! / (2^l l!) as an exact fraction."""
    out = Fraction(1)
    for m in range(1, l + 1):
        out *= Fraction(2 * m - 1, 2 * m)
    return out


def moment_coefficients(max_order: int):
    """Taylor coefficients of (1-z)^(-1/2) (1+z)^(-1), by direct series product."""
    a = [_dfact_ratio(l) for l in range(max_order + 1)]
    b = [Fraction((-1) ** j) for j in range(max_order + 1)]
    return [sum(a[l] * b[j - l] for l in range(j + 1)) for j in range(max_order + 1)]


def moment_partial_sums(max_order: int):
    """sum_{l <= j} (-1)^l (2l-1)!!/(2^l l!) for j = 0..max_order."""
    out, acc = [], Fraction(0)
    for l in range(max_order + 1):
        acc += (-1) ** l * _dfact_ratio(l)
        out.append(acc)
    return out


@dataclass
class MomentReport:
    coefficients: list
    partial_sums: list
    all_nonzero: bool
    routes_agree: bool
    partial_sums_positive: bool
    condition_numbers: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.all_nonzero and self.routes_agree and self.partial_sums_positive


def moment_system_condition(mu=0.5, interval=(1.0, 2.0), sizes=(2, 4, 6, 8)):
    """Condition numbers of the Gram matrices of t^(-mu-k) on an interval."""
    a, b = interval
    out = {}
    for n in sizes:
        G = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                p = 1 - 2 * mu - i - j
                G[i, j] = (b**p - a**p) / p if p != 0 else math.log(b / a)
        out[n] = float(np.linalg.cond(G))
    return out


def moment_checks(max_order: int = 200) -> MomentReport:
    coeffs = moment_coefficients(max_order)
    partial = moment_partial_sums(max_order)
    alt = [(-1) ** j * partial[j] for j in range(max_order + 1)]
    return MomentReport(
        coefficients=coeffs,
        partial_sums=partial,
        all_nonzero=all(c != 0 for c in coeffs),
        routes_agree=coeffs == alt,
        partial_sums_positive=all(p > 0 for p in partial),
        condition_numbers=moment_system_condition(),
    )


def series_check_sympy(order: int = 6):
    """Independent sympy expansion of (1-z)^(-1/2)(1+z)^(-1) for cross-checks."""
    z = sp.Symbol("z")
    ser = sp.series((1 - z) ** sp.Rational(-1, 2) / (1 + z), z, 0, order + 1).removeO()
    return [Fraction(int(sp.fraction(c)[0]), int(sp.fraction(c)[1]))
            for c in (sp.Poly(ser, z).coeff_monomial(z**j) for j in range(order + 1))]


__all__ = [
    "PhaseModel", "AmplitudeSample", "lj_terms", "stationary_expand", "oscillatory_quadrature",
    "phase_F", "phase_F_symbolic", "lj_closed_forms", "l1_printed_form", "moment_coefficients",
    "moment_partial_sums", "moment_checks", "MomentReport", "series_check_sympy",
]
