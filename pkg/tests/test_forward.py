import numpy as np
import pytest

from qlinv import pde_core as pc
from qlinv.forward import (DtNOracle, Diverged, MaxIter, RadiusError, boundary_norm, dtn_apply, dtn_pair,
                           dtn_pair_many, picard_solve, weak_pairing)
from qlinv.linearization import cascade_solve
from qlinv.nonlinearity import linear_spec
from qlinv.suites import demo_spec


@pytest.fixture(scope="module")
def g():
    return pc.build_grid(3, 13)


@pytest.fixture(scope="module")
def spec(g):
    return demo_spec(g)


def test_zero_data_gives_zero(spec, g):
    u, rep = picard_solve(spec, np.zeros(len(g.boundary_index)))
    assert np.all(u == 0) and rep.iterations == 1


def test_linear_case_is_harmonic_extension(g):
    X = g.mesh()
    f = pc.trace(g, X[0] * X[1] + X[2] ** 2)
    u, rep = picard_solve(linear_spec(g), f)
    assert rep.iterations == 1 and rep.converged
    assert np.array_equal(u, pc.harmonic_extension(g, f))


def test_picard_converges_with_contraction(spec, g):
    X = g.mesh()
    f = 0.2 * pc.trace(g, X[0] * X[1] + X[2])
    u, rep = picard_solve(spec, f, tol=1e-11)
    assert rep.converged and 0 < rep.contraction < 1
    assert rep.residual <= 10 * 1e-11
    norms = rep.update_norms[1:]
    assert all(b < a for a, b in zip(norms, norms[1:]))


def test_fixed_point_unique_from_other_start(spec, g, rng):
    X = g.mesh()
    f = 0.2 * pc.trace(g, X[0] * X[1] + X[2])
    u1, _ = picard_solve(spec, f, tol=1e-11)
    v0 = pc.harmonic_extension(g, f) + 0.05 * pc.with_boundary(g, np.zeros(len(g.boundary_index)),
                                                               rng.standard_normal(g.shape))
    u2, _ = picard_solve(spec, f, tol=1e-11, v0=v0)
    assert pc.h1_norm(g, u1 - u2) < 10 * 1e-11


def test_small_data_matches_cascade_third_order(spec, g):
    X = g.mesh()
    f = pc.trace(g, X[0] * X[1])
    cas = cascade_solve(spec, f, N=2)
    eps = np.array([1e-2, 5e-3, 2.5e-3])
    d = []
    for e in eps:
        u, _ = picard_solve(spec, e * f, tol=1e-15)
        d.append(pc.h1_norm(g, u - cas.partial_sum(e)))
    assert np.polyfit(np.log(eps), np.log(d), 1)[0] > 2.7


def test_large_data_diverges(spec, g):
    X = g.mesh()
    with pytest.raises((Diverged, MaxIter)):
        picard_solve(spec, 50 * pc.trace(g, X[0] * X[1] + X[2]), max_iter=60)


def test_oracle_radius(spec, g):
    X = g.mesh()
    f = pc.trace(g, X[0] * X[1] + X[2])
    o = DtNOracle(spec)
    kappa = o.calibrate(f)
    assert 0 < kappa < np.inf
    with pytest.raises(RadiusError):
        o.solve(2 * kappa / boundary_norm(g, f) * f)
    o.solve(0.5 * kappa / boundary_norm(g, f) * f)


def test_linear_dtn_of_x0(g):
    X = g.mesh()
    o = DtNOracle(linear_spec(g))
    flux = dtn_apply(o, pc.trace(g, X[0]))
    full = pc.with_boundary(g, flux)
    inner = (slice(1, -1), slice(1, -1))
    assert np.allclose(full[0][inner], -1) and np.allclose(full[-1][inner], 1)
    assert np.allclose(full[1:-1, 0, 1:-1], 0) and np.allclose(full[1:-1, 1:-1, -1], 0)
    assert np.all(dtn_apply(o, np.zeros(len(g.boundary_index))) == 0)


def test_linear_pairing_of_x0(g):
    X = g.mesh()
    o = DtNOracle(linear_spec(g))
    assert dtn_pair(o, X[0], pc.trace(g, X[0])) == pytest.approx(1.0, abs=1e-12)
    assert dtn_pair(o, X[0], np.zeros(len(g.boundary_index))) == 0


def test_linear_pairing_symmetry(g):
    X = g.mesh()
    o = DtNOracle(linear_spec(g))
    w, v = X[0] * X[1], X[2] ** 2 - X[0] ** 2 + X[1]
    a = dtn_pair(o, pc.harmonic_extension(g, pc.trace(g, w)), pc.trace(g, v))
    b = dtn_pair(o, pc.harmonic_extension(g, pc.trace(g, v)), pc.trace(g, w))
    assert a == pytest.approx(b, rel=1e-12)


def test_dual_channels_agree_exactly():
    # discrete summation by parts makes both readouts the same number
    for n in (9, 17):
        g = pc.build_grid(3, n)
        X = g.mesh()
        o = DtNOracle(demo_spec(g))
        f = 0.3 * pc.trace(g, X[0] * X[1] + X[2])
        w = X[0] * X[2]
        a = dtn_pair(o, w, f)
        b = pc.boundary_pairing(g, pc.trace(g, w), dtn_apply(o, f))
        assert a == pytest.approx(b, abs=1e-12)


def test_pair_many_matches_single(spec, g):
    X = g.mesh()
    f = 0.2 * pc.trace(g, X[0] * X[1] + X[2])
    ws = [X[0], X[1] * X[2], X[0] ** 2 - X[2] ** 2]
    o = DtNOracle(spec, tol=1e-12)
    many = dtn_pair_many(o, ws, f)
    assert np.allclose(many, [dtn_pair(o, w, f) for w in ws], rtol=1e-12)
    u, _ = o.solve(f)
    assert many[0] == pytest.approx(weak_pairing(g, spec, ws[0], u), rel=1e-13)
