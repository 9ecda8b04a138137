import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from qlinv.harmonics import (CGO, CGOParams, RealPart, cgo_dictionary, default_dictionary, exact_box_integral_exp,
                             harmonic_dimension, harmonic_polynomials, null_relations, probe_from_manifest,
                             random_cgo_params)


def _sympy_poly(p, xs):
    return sum(c * sp.prod([x**e for x, e in zip(xs, exps)]) for exps, c in p.terms)


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("n", range(0, 5))
def test_basis_counts_and_harmonicity(d, n):
    polys = harmonic_polynomials(d, n, min_degree=n)
    assert len(polys) == harmonic_dimension(d, n)
    xs = sp.symbols(f"x0:{d}")
    exprs = [sp.expand(_sympy_poly(p, xs)) for p in polys]
    for e in exprs:
        assert sp.expand(sum(sp.diff(e, x, 2) for x in xs)) == 0
        assert sp.Poly(e, *xs).is_homogeneous and sp.Poly(e, *xs).total_degree() == n
    mons = sorted({m for e in exprs for m in sp.Poly(e, *xs).monoms()})
    M = sp.Matrix([[sp.Poly(e, *xs).coeff_monomial(m) for m in mons] for e in exprs])
    assert M.rank() == len(exprs)


def test_dimension_in_three_dimensions():
    assert [harmonic_dimension(3, n) for n in range(6)] == [1, 3, 5, 7, 9, 11]
    assert len(harmonic_polynomials(3, 3, min_degree=1)) == 3 + 5 + 7


def test_degree_cap():
    with pytest.raises(ValueError):
        harmonic_polynomials(3, 7)


def test_laplacian_terms_empty(rng):
    for p in harmonic_polynomials(3, 4):
        assert p.laplacian_terms() == {}


def test_polynomial_gradient_fd(rng):
    X = rng.uniform(0, 1, (3, 20))
    h = 1e-6
    for p in harmonic_polynomials(3, 3, min_degree=1):
        g = p.gradient(X)
        for a in range(3):
            E = np.zeros((3, 1))
            E[a] = h
            assert np.allclose((p.value(X + E) - p.value(X - E)) / (2 * h), g[a], atol=1e-7)


def test_zeta_examples():
    p = CGOParams((2.0, 0.0, 0.0), (0.0, 1.0, 0.0), 1)
    assert np.allclose(p.zeta, [1, 1j, 0])
    assert np.allclose(CGOParams((2.0, 0.0, 0.0), (0.0, 1.0, 0.0), -1).zeta, [1, -1j, 0])
    rel = null_relations(p)
    assert abs(rel["pp"]) < 1e-15 and abs(rel["mm"]) < 1e-15
    assert rel["pm"] == pytest.approx(2.0) and rel["half_xi2"] == 2.0


def test_bad_cgo_params():
    with pytest.raises(ValueError):
        CGOParams((1.0, 0.0, 0.0), (1.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        CGOParams((1.0, 0.0, 0.0), (0.0, 2.0, 0.0))
    with pytest.raises(ValueError):
        CGOParams((0.0, 0.0, 0.0), (0.0, 1.0, 0.0))
    with pytest.raises(ValueError):
        CGOParams((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.5, 5.0))
def test_random_cgo_is_null_and_harmonic(seed, freq):
    rng = np.random.default_rng(seed)
    p = random_cgo_params(rng, 3, freq)
    z = p.zeta
    assert abs(z @ z) < 1e-12 * freq**2
    assert np.linalg.norm(p.xi) == pytest.approx(freq)
    w = CGO(p)
    X = rng.uniform(0, 1, (3, 5))
    h = 1e-4
    lap = sum((w.value(X + h * e[:, None]) - 2 * w.value(X) + w.value(X - h * e[:, None])) / h**2 for e in np.eye(3))
    assert np.allclose(lap, 0, atol=1e-5 * (1 + freq**2) * np.abs(w.value(X)).max())


def test_cgo_gradient_fd(rng):
    w = CGO(random_cgo_params(rng, 3, 2.0), scale=2.0)
    X = rng.uniform(0, 1, (3, 10))
    h = 1e-6
    for part in ("re", "im"):
        r = RealPart(w, part)
        for a in range(3):
            E = np.zeros((3, 1))
            E[a] = h
            assert np.allclose((r.value(X + E) - r.value(X - E)) / (2 * h), r.gradient(X)[a], atol=1e-6)


def test_dictionary_shape_and_manifests():
    D = default_dictionary(3, seed=0)
    assert len(D) == 15 + 40
    assert len(cgo_dictionary(np.random.default_rng(0), 3, 7)) == 7
    X = np.random.default_rng(1).uniform(0, 1, (3, 4))
    for p in D:
        q = probe_from_manifest(p.manifest())
        assert np.allclose(q.value(X), p.value(X))
    coord = probe_from_manifest({"kind": "coordinate", "m": 2, "dim": 3})
    assert np.array_equal(coord.value(X), X[2]) and np.array_equal(coord.gradient(X)[2], np.ones(4))
    with pytest.raises(ValueError):
        probe_from_manifest({"kind": "nope"})


def test_exact_box_integral_matches_quadrature(rng):
    k = np.array([1.3 + 0.4j, -2.0, 0.0])
    lo, hi = (0.1, 0.2, 0.3), (0.6, 0.5, 0.9)
    t, w = np.polynomial.legendre.leggauss(20)
    axes = [0.5 * (b + a) + 0.5 * (b - a) * t for a, b in zip(lo, hi)]
    W = [0.5 * (b - a) * w for a, b in zip(lo, hi)]
    G = np.meshgrid(*axes, indexing="ij")
    val = np.einsum("ijk,i,j,k->", np.exp(1j * sum(kk * g for kk, g in zip(k, G))), *W)
    assert exact_box_integral_exp(k, lo, hi) == pytest.approx(val, rel=1e-13)
