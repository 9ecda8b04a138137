"""Probe functions: harmonic polynomials, complex exponentials e^{i zeta.x} with
zeta.zeta = 0, and the Gaussian quasi-modes (re-exported from ``quasimode``)."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
import sympy as sp

from .quasimode import (QuasimodeParams, Quasimode, cutoff, evaluate_expansion, psi_series,  # noqa: F401
                        quasimode, v_closed_forms, v_expansion, v_series)
from .series import CoeffSeries  # noqa: F401


def _monomials(d: int, n: int) -> list:
    return [e for e in itertools.product(range(n + 1), repeat=d) if sum(e) == n][::-1]


@lru_cache(maxsize=None)
def _harmonic_basis(d: int, n: int) -> tuple:
    """Integer coefficient vectors spanning the degree-n harmonic polynomials."""
    mons = _monomials(d, n)
    if n < 2:
        return tuple(tuple(int(i == j) for i in range(len(mons))) for j in range(len(mons))), tuple(mons)
    low = {m: r for r, m in enumerate(_monomials(d, n - 2))}
    L = sp.zeros(len(low), len(mons))
    for c, e in enumerate(mons):
        for a in range(d):
            if e[a] >= 2:
                f = list(e)
                f[a] -= 2
                L[low[tuple(f)], c] += e[a] * (e[a] - 1)
    basis = []
    for v in L.nullspace():
        den = sp.ilcm(*[sp.fraction(x)[1] for x in v])
        basis.append(tuple(int(x * den) for x in v))
    return tuple(basis), tuple(mons)


@dataclass(frozen=True)
class HarmonicPolynomial:
    """sum_e coeff_e x^e with exact integer coefficients."""

    dim: int
    terms: tuple  # ((exponent tuple, int coefficient), ...)

    @property
    def degree(self) -> int:
        return max(sum(e) for e, _ in self.terms)

    def value(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.zeros(X.shape[1:])
        for e, c in self.terms:
            out = out + c * np.prod([X[a] ** e[a] for a in range(self.dim)], axis=0)
        return out

    def gradient(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.zeros((self.dim,) + X.shape[1:])
        for e, c in self.terms:
            for a in range(self.dim):
                if e[a] == 0:
                    continue
                f = [X[b] ** (e[b] - (b == a)) for b in range(self.dim)]
                out[a] = out[a] + c * e[a] * np.prod(f, axis=0)
        return out

    def laplacian_terms(self) -> dict:
        """Exact Laplacian as {exponent: coefficient}; empty for harmonic input."""
        out = {}
        for e, c in self.terms:
            for a in range(self.dim):
                if e[a] >= 2:
                    f = list(e)
                    f[a] -= 2
                    out[tuple(f)] = out.get(tuple(f), 0) + c * e[a] * (e[a] - 1)
        return {k: v for k, v in out.items() if v != 0}

    def manifest(self) -> dict:
        return {"kind": "harmonic_polynomial", "dim": self.dim,
                "terms": [[list(e), c] for e, c in self.terms]}


def harmonic_polynomials(d: int, max_degree: int, min_degree: int = 0) -> list:
    """A basis of the real harmonic polynomials of degree min_degree..max_degree."""
    if max_degree > 6:
        raise ValueError("max_degree must be at most 6")
    out = []
    for n in range(min_degree, max_degree + 1):
        basis, mons = _harmonic_basis(d, n)
        for v in basis:
            out.append(HarmonicPolynomial(d, tuple((m, c) for m, c in zip(mons, v) if c != 0)))
    return out


def harmonic_dimension(d: int, n: int) -> int:
    """Classical count C(n+d-1, d-1) - C(n+d-3, d-1)."""
    from math import comb
    return comb(n + d - 1, d - 1) - (comb(n + d - 3, d - 1) if n >= 2 else 0)


@dataclass(frozen=True)
class CGOParams:
    xi: tuple
    mu: tuple
    sign: int = 1

    def __post_init__(self):
        xi, mu = np.asarray(self.xi, float), np.asarray(self.mu, float)
        if xi.shape != mu.shape or not np.any(xi):
            raise ValueError("xi must be a nonzero vector of the same length as mu")
        if abs(np.linalg.norm(mu) - 1) > 1e-12 or abs(xi @ mu) > 1e-12 * np.linalg.norm(xi):
            raise ValueError("mu must be a unit vector orthogonal to xi")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def zeta(self) -> np.ndarray:
        xi, mu = np.asarray(self.xi, float), np.asarray(self.mu, float)
        return 0.5 * xi + self.sign * 0.5j * np.linalg.norm(xi) * mu


@dataclass(frozen=True)
class CGO:
    """x -> exp(i k zeta . x); ``scale`` k allows the doubled frequencies used in products."""

    params: CGOParams
    scale: float = 1.0

    @property
    def zeta(self) -> np.ndarray:
        return self.scale * self.params.zeta

    def value(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.exp(1j * np.tensordot(self.zeta, X, axes=(0, 0)))

    def gradient(self, X) -> np.ndarray:
        v = self.value(X)
        return 1j * self.zeta.reshape((-1,) + (1,) * v.ndim) * v

    def manifest(self) -> dict:
        return {"kind": "cgo", "xi": list(map(float, self.params.xi)), "mu": list(map(float, self.params.mu)),
                "sign": self.params.sign, "scale": self.scale}


def cgo(params: CGOParams, scale: float = 1.0) -> CGO:
    return CGO(params, scale)


@dataclass(frozen=True)
class RealPart:
    """Real or imaginary part of a complex probe (both harmonic)."""

    base: CGO
    part: str = "re"

    def value(self, X):
        v = self.base.value(X)
        return v.real if self.part == "re" else v.imag

    def gradient(self, X):
        g = self.base.gradient(X)
        return g.real if self.part == "re" else g.imag

    def manifest(self) -> dict:
        return {"kind": "cgo_part", "part": self.part, "base": self.base.manifest()}


class CoordinateProbe:
    """x -> x_m as a probe (harmonic, constant gradient)."""

    def __init__(self, m: int, d: int):
        self.m, self.d = m, d

    def value(self, X):
        return np.asarray(X, dtype=float)[self.m]

    def gradient(self, X):
        X = np.asarray(X, dtype=float)
        g = np.zeros_like(X)
        g[self.m] = 1.0
        return g

    def manifest(self) -> dict:
        return {"kind": "coordinate", "m": self.m, "dim": self.d}


def random_cgo_params(rng: np.random.Generator, d: int, freq: float, sign: int = 1) -> CGOParams:
    xi = rng.standard_normal(d)
    xi *= freq / np.linalg.norm(xi)
    mu = rng.standard_normal(d)
    mu -= (mu @ xi) / (xi @ xi) * xi
    mu /= np.linalg.norm(mu)
    return CGOParams(tuple(xi), tuple(mu), sign)


def cgo_dictionary(rng: np.random.Generator, d: int, count: int = 40, freqs=(1.0, 2.0, 3.0)) -> list:
    """``count`` real/imaginary parts of random exponentials spread over ``freqs``."""
    out = []
    n = 0
    while len(out) < count:
        p = random_cgo_params(rng, d, freqs[n % len(freqs)])
        for part in ("re", "im"):
            if len(out) < count:
                out.append(RealPart(CGO(p), part))
        n += 1
    return out


def default_dictionary(d: int, seed: int = 0, poly_degree: int = 3, n_cgo: int = 40, freqs=(1.0, 2.0, 3.0)) -> list:
    return harmonic_polynomials(d, poly_degree, min_degree=1) + cgo_dictionary(np.random.default_rng(seed), d, n_cgo, freqs)


def probe_from_manifest(m: dict):
    kind = m["kind"]
    if kind == "harmonic_polynomial":
        return HarmonicPolynomial(int(m["dim"]), tuple((tuple(e), int(c)) for e, c in m["terms"]))
    if kind == "cgo":
        return CGO(CGOParams(tuple(m["xi"]), tuple(m["mu"]), int(m["sign"])), float(m.get("scale", 1.0)))
    if kind == "coordinate":
        return CoordinateProbe(int(m["m"]), int(m["dim"]))
    if kind == "cgo_part":
        return RealPart(probe_from_manifest(m["base"]), m["part"])
    raise ValueError(f"unknown probe kind {kind!r}")


def null_relations(params: CGOParams) -> dict:
    """zeta_+.zeta_+, zeta_-.zeta_- and zeta_+.zeta_- for the parameter pair."""
    zp = CGOParams(params.xi, params.mu, 1).zeta
    zm = CGOParams(params.xi, params.mu, -1).zeta
    return {"pp": complex(zp @ zp), "mm": complex(zm @ zm), "pm": complex(zp @ zm),
            "half_xi2": 0.5 * float(np.dot(params.xi, params.xi))}


def exact_box_integral_exp(k, lo, hi) -> complex:
    """int over the box prod [lo_a, hi_a] of exp(i k.x) in closed form."""
    out = 1.0 + 0j
    for ka, a, b in zip(np.asarray(k, dtype=complex), lo, hi):
        if abs(ka) < 1e-300:
            out *= b - a
        else:
            out *= (np.exp(1j * ka * b) - np.exp(1j * ka * a)) / (1j * ka)
    return out


__all__ = [
    "HarmonicPolynomial", "harmonic_polynomials", "harmonic_dimension", "CGOParams", "CGO", "cgo", "RealPart", "CoordinateProbe",
    "random_cgo_params", "cgo_dictionary", "default_dictionary", "probe_from_manifest", "null_relations",
    "exact_box_integral_exp", "psi_series", "v_series", "v_closed_forms", "quasimode", "QuasimodeParams",
    "Quasimode", "v_expansion", "evaluate_expansion", "cutoff", "CoeffSeries", "Fraction",
]
