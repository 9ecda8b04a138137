import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qlinv import pde_core as pc


def test_grid_counts():
    g = pc.build_grid(3, 9, [(0, 1), (1, 2), (0, 1)])
    assert g.n_nodes == 9**3
    assert len(g.interior_index) == 7**3
    assert len(g.boundary_index) == 9**3 - 7**3


def test_grid_four_dimensions():
    g = pc.build_grid(4, 9)
    assert g.n_nodes == 9**4
    assert len(g.boundary_index) == 9**4 - 7**4 == 4160


def test_grid_rejects_small_resolution_and_dimension():
    with pytest.raises(pc.ResolutionError):
        pc.build_grid(3, 2)
    with pytest.raises(pc.DimensionError):
        pc.build_grid(2, 9)


def test_grid_lies_in_positive_x1():
    g = pc.build_grid(3, 7, [(0, 1), (-1, 1), (0, 1)])
    assert g.box[1][0] >= 0
    assert g.shift[1] == 1.0


def test_affine_and_quadratic_harmonics_reproduced(grid9):
    X = grid9.mesh()
    for u in (X[0], X[0] ** 2 - X[1] ** 2, X[0] * X[2] + 3 * X[1] - 2):
        v = pc.harmonic_extension(grid9, pc.trace(grid9, u))
        assert np.max(np.abs(v - u)) < 1e-13


@pytest.mark.parametrize("method", ["dst", "splu"])
def test_manufactured_solution_second_order(method):
    errs, hs = [], []
    for n in (9, 17, 33):
        g = pc.build_grid(3, n)
        X = g.mesh()
        u = np.sin(np.pi * X[0]) * np.sin(np.pi * X[1]) * np.exp(X[2])
        lap = (1 - 2 * np.pi**2) * u
        v = pc.solve_poisson_dirichlet(g, lap, pc.trace(g, u), method=method)
        errs.append(np.max(np.abs(v - u)))
        hs.append(g.h)
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert abs(slope - 2) < 0.2


def test_dst_and_lu_agree(rng):
    g = pc.build_grid(3, [9, 11, 13])
    r = rng.standard_normal(g.shape)
    bc = rng.standard_normal(len(g.boundary_index))
    a = pc.solve_poisson_dirichlet(g, r, bc)
    b = pc.solve_poisson_dirichlet(g, r, bc, method="splu")
    assert np.max(np.abs(a - b)) < 1e-12


def test_solve_then_apply(grid9, rng):
    r = rng.standard_normal(grid9.shape)
    v = pc.solve_poisson_dirichlet(grid9, r, None)
    lap = pc.laplacian(grid9, v).reshape(-1)[grid9.interior_index]
    assert np.max(np.abs(lap - r.reshape(-1)[grid9.interior_index])) < 1e-10
    assert np.all(pc.trace(grid9, v) == 0)


def test_complex_poisson(grid9, rng):
    r = rng.standard_normal(grid9.shape) + 1j * rng.standard_normal(grid9.shape)
    v = pc.solve_poisson_dirichlet(grid9, r, None)
    assert np.allclose(v.real, pc.solve_poisson_dirichlet(grid9, r.real, None), atol=1e-13)
    assert np.allclose(v.imag, pc.solve_poisson_dirichlet(grid9, r.imag, None), atol=1e-13)


def test_laplacian_symmetric(grid9, rng):
    u = pc.with_boundary(grid9, np.zeros(len(grid9.boundary_index)), rng.standard_normal(grid9.shape))
    v = pc.with_boundary(grid9, np.zeros(len(grid9.boundary_index)), rng.standard_normal(grid9.shape))
    a = np.sum(pc.laplacian(grid9, u) * v)
    b = np.sum(u * pc.laplacian(grid9, v))
    assert abs(a - b) < 1e-9 * abs(a)


def test_nan_raises_solver_error(grid9):
    r = np.full(grid9.shape, np.nan)
    with pytest.raises(pc.SolverError):
        pc.solve_poisson_dirichlet(grid9, r, None)


def test_gradient_divergence_exact(grid9):
    X = grid9.mesh()
    g = pc.gradient(grid9, X[1])
    assert np.allclose(g[1], 1) and np.allclose(g[0], 0) and np.allclose(g[2], 0)
    assert np.allclose(pc.divergence(grid9, X), 3)


def test_summation_by_parts_second_order():
    gaps, hs = [], []
    for n in (9, 17, 33):
        g = pc.build_grid(3, n)
        X = g.mesh()
        u = np.sin(X[0] + 2 * X[1]) * np.cos(X[2])
        V = np.array([np.cos(X[1]) * X[2], X[0] * X[0], np.sin(X[0] * X[2])])
        lhs = pc.integrate(g, np.sum(pc.gradient(g, u) * V, axis=0)) + pc.integrate(g, u * pc.divergence(g, V))
        flux = 0.0
        for a, side, nodes, w, sgn in pc.boundary_faces(g):
            flux += sgn * np.sum(w * u.reshape(-1)[nodes] * V[a].reshape(-1)[nodes])
        gaps.append(abs(lhs - flux))
        hs.append(g.h)
    assert np.polyfit(np.log(hs), np.log(gaps), 1)[0] > 1.8


def test_edge_operators_compose_to_laplacian(grid9, rng):
    u = rng.standard_normal(grid9.shape)
    lhs = pc.edge_divergence(grid9, pc.edge_gradient(grid9, u))
    assert np.max(np.abs(lhs - pc.laplacian(grid9, u))) < 1e-10


def test_integrals(grid9):
    X = grid9.mesh()
    assert pc.integrate(grid9, np.ones(grid9.shape)) == pytest.approx(1.0, abs=1e-14)
    assert pc.integrate(grid9, X[0]) == pytest.approx(0.5, abs=1e-14)


def test_integral_sin_product_second_order():
    errs, hs = [], []
    exact = (1 - np.cos(1.0)) ** 2 * np.sin(1.0)  # int sin x sin y cos z over the unit cube
    for n in (9, 17, 33):
        g = pc.build_grid(3, n)
        X = g.mesh()
        errs.append(abs(pc.integrate(g, np.sin(X[0]) * np.sin(X[1]) * np.cos(X[2])) - exact))
        hs.append(g.h)
    assert abs(np.polyfit(np.log(hs), np.log(errs), 1)[0] - 2) < 0.2


def test_boundary_pairing_area(grid9):
    one = np.ones(len(grid9.boundary_index))
    assert pc.boundary_pairing(grid9, one, one) == pytest.approx(6.0)


def test_field_round_trip(tmp_path, rng):
    g = pc.build_grid(3, [5, 6, 7], [(0, 1), (0.5, 2), (-1, 0)])
    u = rng.standard_normal(g.shape)
    z = u + 1j * rng.standard_normal(g.shape)
    for f in (u, z):
        p = tmp_path / "f.json"
        pc.save_field(p, g, f)
        g2, f2 = pc.load_field(p)
        assert g2 == g
        assert np.array_equal(f2, f)
    assert json.loads(p.read_text())["grid"]["resolution"] == [5, 6, 7]


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(5, 8), min_size=3, max_size=3),
       st.lists(st.floats(-3, 3, allow_nan=False), min_size=4, max_size=4))
def test_harmonic_quadratic_exact_property(res, c):
    g = pc.build_grid(3, res)
    X = g.mesh()
    u = c[0] + c[1] * X[0] + c[2] * (X[1] ** 2 - X[2] ** 2) + c[3] * X[0] * X[1]
    v = pc.harmonic_extension(g, pc.trace(g, u))
    assert np.max(np.abs(v - u)) < 1e-11
