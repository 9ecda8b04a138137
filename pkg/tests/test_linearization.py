import numpy as np
import pytest

from qlinv import pde_core as pc
from qlinv.forward import DtNOracle, edge_fluxes, weak_pairing
from qlinv.linearization import (ConditioningError, cascade_solve, compositions, default_eps_set,
                                 extract_lambda_k, fit_lambda, multinomial_sources)
from qlinv.nonlinearity import NonlinearitySpec, edge_vectors, linear_spec
from qlinv.suites import demo_spec


def _brute_compositions(k):
    """All alpha with sum j alpha_j = k, 2 <= sum alpha_j < k, by exhaustive search."""
    import itertools
    import math
    out = []
    for alpha in itertools.product(*(range(k // j + 1) for j in range(1, k))):
        if sum((j + 1) * a for j, a in enumerate(alpha)) != k:
            continue
        l = sum(alpha)
        if not 2 <= l < k:
            continue
        coeff = math.factorial(l)
        for a in alpha:
            coeff //= math.factorial(a)
        out.append((l, {j + 1: a for j, a in enumerate(alpha) if a}, coeff))
    return sorted(out, key=lambda c: (c[0], sorted(c[1].items())))


def test_compositions_small():
    assert compositions(2) == []
    assert compositions(3) == [(2, {1: 1, 2: 1}, 2)]
    c4 = {(l, tuple(sorted(a.items()))): c for l, a, c in compositions(4)}
    assert c4 == {(2, ((1, 1), (3, 1))): 2, (2, ((2, 2),)): 1, (3, ((1, 2), (2, 1))): 3}


@pytest.mark.parametrize("k", range(2, 9))
def test_compositions_match_brute_force(k):
    assert compositions(k) == _brute_compositions(k)


@pytest.fixture(scope="module")
def g():
    return pc.build_grid(3, 13)


def test_linear_spec_cascade_vanishes(g):
    X = g.mesh()
    cas = cascade_solve(NonlinearitySpec(g, {}), pc.trace(g, X[0] * X[1]), N=3)
    assert all(np.all(u == 0) for u in cas.u[1:])


def test_sources_vanish_without_tensors(g, rng):
    v = {j: rng.standard_normal((3,) + g.shape) for j in (1, 2, 3)}
    assert np.all(multinomial_sources({}, v, 4) == 0)


def test_n3_is_twice_bilinear(g, rng):
    spec = demo_spec(g)
    v1, v2 = rng.standard_normal((3,) + g.shape), rng.standard_normal((3,) + g.shape)
    N3 = multinomial_sources(spec.tensors, {1: v1, 2: v2}, 3)
    assert np.allclose(N3, 2 * spec.tensors[2].multilinear([v1, v2]))


def test_cascade_defect_order(g):
    spec = demo_spec(g, N=3)
    X = g.mesh()
    f = pc.trace(g, X[0] * X[1] + X[2])
    cas = cascade_solve(spec, f)
    from qlinv.forward import picard_solve
    eps = np.geomspace(1e-3, 10**-1.5, 4)
    d = [pc.h1_norm(g, picard_solve(spec, e * f, tol=1e-15)[0] - cas.partial_sum(e)) for e in eps]
    assert np.polyfit(np.log(eps), np.log(d), 1)[0] >= 3.7


@pytest.fixture(scope="module")
def oracle(g):
    o = DtNOracle(demo_spec(g), tol=1e-13)
    X = g.mesh()
    o.calibrate(pc.trace(g, X[0] * X[1] + X[2]))
    return o


def _direct_c2(spec, g, w, f):
    """<w, Lambda_2 f> from the cascade: pairing of J_2 : (grad u_1)^2 plus the u_2 term."""
    cas = cascade_solve(spec, f, N=2)
    total = weak_pairing(g, NonlinearitySpec(g, {}), w, cas.u[1])
    for a, Dw in enumerate(pc.edge_gradient(g, w)):
        J = spec.tensors[2]
        lead = J.multilinear([edge_vectors(g, cas.u[0], a)] * 2, coeff=J.edge_data(a))[a]
        total += np.sum(pc.edge_weights(g, a) * Dw * lead)
    return total


def test_lambda_fit_matches_cascade(oracle, g):
    X = g.mesh()
    f = pc.trace(g, X[0] * X[1] + X[2])
    w = X[0] * X[2]
    fit = fit_lambda(oracle, [w], f, default_eps_set(oracle, f, 2))
    assert fit.c(1)[0] == pytest.approx(weak_pairing(g, linear_spec(g), w, pc.harmonic_extension(g, f)), rel=1e-9)
    assert fit.c(2)[0] == pytest.approx(_direct_c2(oracle.flux, g, w, f), rel=1e-6)
    assert fit.condition < 1e12


def test_lambda_homogeneity(oracle, g):
    X = g.mesh()
    f = pc.trace(g, X[0] * X[1] + X[2])
    w = X[0] * X[2]
    base = extract_lambda_k(oracle, w, f, 2)
    for t in (0.5, 2.0):
        assert extract_lambda_k(oracle, w, t * f, 2) == pytest.approx(t**2 * base, rel=1e-5)


def test_linear_spec_has_no_second_order(g):
    X = g.mesh()
    o = DtNOracle(linear_spec(g))
    f = pc.trace(g, X[0] * X[1])
    c2 = extract_lambda_k(o, X[2], f, 2, eps_set=np.geomspace(0.01, 0.1, 4), N=2)
    assert abs(c2) < 1e-9


def test_bad_eps_sets(oracle, g):
    X = g.mesh()
    f = pc.trace(g, X[0])
    with pytest.raises(ValueError):
        fit_lambda(oracle, [X[0]], f, [0.1, 0.1, 0.2])
    with pytest.raises(ConditioningError):
        fit_lambda(oracle, [X[0]], f, np.linspace(0.099, 0.1, 14))
    with pytest.raises(ValueError):
        default_eps_set(DtNOracle(oracle.flux), f, 2)
