import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qlinv import pde_core as pc
from qlinv.nonlinearity import (NonlinearitySpec, TensorCoefficients, Tensor3Field, canonical_tuples, contract3,
                                edge_vectors, eval_flux, full_symmetrization, identity_map, linear_spec,
                                multiplicity, pushforward, radial_bump, random_admissible, symmetrize)


def _random_tensor(grid, k, rng, margin=1):
    T = len(canonical_tuples(grid.dim, k))
    return TensorCoefficients(grid, k, rng.standard_normal((T, grid.dim) + grid.shape), margin=margin)


def test_multiplicities():
    assert multiplicity((0, 0)) == 1
    assert multiplicity((0, 1)) == 2
    assert multiplicity((0, 1, 1)) == 3
    assert multiplicity((0, 1, 2)) == 6


def test_linear_medium_returns_p(grid9, rng):
    p = rng.standard_normal((3,) + grid9.shape)
    assert np.array_equal(eval_flux(linear_spec(grid9), np.zeros(grid9.shape), p), p)


def test_single_component_contraction(grid9):
    X = grid9.mesh()
    g = np.exp(-((X[0] - 0.5) ** 2))
    z = np.zeros_like(g)
    J = TensorCoefficients.from_components(grid9, 2, {(0, 0): [z, z, g]}, margin=0)
    p = np.zeros((3,) + grid9.shape)
    p[0] = 1.0
    out = eval_flux(NonlinearitySpec(grid9, {2: J}), z, p)
    assert np.allclose(out[0], 1) and np.allclose(out[1], 0) and np.allclose(out[2], g)


@pytest.mark.parametrize("k", [2, 3])
def test_contraction_matches_full_index_loop(grid9, rng, k):
    J = _random_tensor(grid9, k, rng)
    p = rng.standard_normal((3,) + grid9.shape)
    ref = np.zeros_like(p)
    for full in itertools.product(range(3), repeat=k):
        w = np.prod([p[i] for i in full], axis=0)
        ref += J[full] * w
    assert np.allclose(J.contract_nodes(p), ref, atol=1e-12)
    assert np.allclose(J.multilinear([p] * k), ref, atol=1e-12)


def test_storage_symmetry_and_margin(grid9, rng):
    J = _random_tensor(grid9, 3, rng, margin=2)
    for t in itertools.permutations((0, 1, 2)):
        assert J[t] is not None and np.array_equal(J[t], J[(0, 1, 2)])
    assert np.all(J.data[..., :2, :, :] == 0) and np.all(J.data[..., -2:] == 0)


def test_from_components_rejects_disagreeing_permutations(grid9):
    one, z = np.ones(grid9.shape), np.zeros(grid9.shape)
    with pytest.raises(ValueError):
        TensorCoefficients.from_components(grid9, 2, {(0, 1): [one, z, z], (1, 0): [z, one, z]})


def test_bound_checked(grid9):
    data = np.ones((6, 3) + grid9.shape)
    with pytest.raises(ValueError):
        TensorCoefficients(grid9, 2, 5 * data, bound=1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(-4, 4, allow_nan=False), st.integers(2, 3))
def test_homogeneity(t, k):
    grid = pc.build_grid(3, 5)
    rng = np.random.default_rng(7)
    J = _random_tensor(grid, k, rng, margin=0)
    p = rng.standard_normal((3,) + grid.shape)
    assert np.allclose(J.contract_nodes(t * p), t**k * J.contract_nodes(p), rtol=1e-12, atol=1e-10)


def test_edge_contraction_matches_nodes_for_constant_coefficients(grid9, rng):
    data = np.broadcast_to(rng.standard_normal((6, 3, 1, 1, 1)), (6, 3) + grid9.shape)
    J = TensorCoefficients(grid9, 2, data, margin=0)
    p = rng.standard_normal((7, 3))
    ref = np.einsum("ijl,mi,mj->ml", np.array([[J[(i, j)][:, 0, 0, 0] for j in range(3)] for i in range(3)]), p, p)
    for a in range(3):
        assert np.allclose(J.contract_edges(a, p), ref[:, a])


def test_edge_vectors_of_linear_function(grid9):
    X = grid9.mesh()
    u = 2 * X[0] - X[1] + 0.5 * X[2]
    for a in range(3):
        e = edge_vectors(grid9, u, a)
        assert np.allclose(e[0], 2) and np.allclose(e[1], -1) and np.allclose(e[2], 0.5)


# --- pushforward -----------------------------------------------------------


def test_identity_pushforward_matches_flux(grid9, rng):
    spec = NonlinearitySpec(grid9, {2: _random_tensor(grid9, 2, rng, margin=2)})
    pf = pushforward(spec, identity_map())
    p = rng.standard_normal((grid9.n_nodes // 2, 3))
    for a in range(3):
        n = np.prod([m - (b == a) for b, m in enumerate(grid9.shape)])
        p_e = rng.standard_normal((n, 3))
        assert np.allclose(pf.excess_edge(a, None, None, p_e), spec.excess_edge(a, None, None, p_e), atol=1e-12)


def test_bump_leading_matrix_spd(grid13):
    pf = pushforward(linear_spec(grid13), radial_bump((0.5, 0.5, 0.5), 0.35, 0.1))
    y = grid13.points()
    M = pf.leading_matrix(y)
    assert np.allclose(M, np.swapaxes(M, 1, 2), atol=1e-14)
    assert np.linalg.eigvalsh(M).min() > 0
    moved = np.linalg.norm(pf.phi.displacement(y), axis=1).max()
    assert moved > 0.01


def test_bump_jacobian_matches_finite_differences(rng):
    phi = radial_bump((0.5, 0.5, 0.5), 0.35, 0.1)
    x = 0.5 + 0.2 * rng.uniform(-1, 1, (20, 3))
    J = phi.jacobian(x)
    h = 1e-6
    for j in range(3):
        dx = np.zeros(3)
        dx[j] = h
        fd = (phi(x + dx) - phi(x - dx)) / (2 * h)
        assert np.allclose(J[:, :, j], fd, atol=1e-8)
    assert np.allclose(phi(phi.inverse(x)), x, atol=1e-13)


def test_pushforward_rejects_bad_maps(grid9):
    spec = linear_spec(grid9)
    with pytest.raises(ValueError, match="boundary"):
        pushforward(spec, radial_bump((0.5, 0.5, 0.5), 0.9, 0.05))
    with pytest.raises(ValueError, match="identity"):
        pushforward(spec, radial_bump((0.5, 0.5, 0.5), 0.35, 0.5))


# --- order-3 tensors ------------------------------------------------------


def test_symmetrize_single_component():
    C = np.zeros((3, 3, 3))
    C[0, 0, 1] = 1
    dec = symmetrize(Tensor3Field(C))
    for t in [(0, 0, 1), (0, 1, 0), (1, 0, 0)]:
        assert dec.S.C[t] == pytest.approx(1 / 3)
    assert dec.D.C[0, 0, 1] == pytest.approx(2 / 3)


def test_symmetrize_properties(rng):
    C = random_admissible(rng, 3, (4,))
    dec = symmetrize(Tensor3Field(C))
    for p in itertools.permutations(range(3)):
        assert np.allclose(np.transpose(dec.S.C, p + (3,)), dec.S.C)
    assert np.allclose(full_symmetrization(dec.D.C), 0, atol=1e-14)
    assert np.allclose(dec.S.C + dec.D.C, C)
    again = symmetrize(dec.S)
    assert np.allclose(again.S.C, dec.S.C) and np.allclose(again.D.C, 0)


def test_fully_symmetric_input_has_zero_remainder(rng):
    S = full_symmetrization(rng.standard_normal((3, 3, 3)))
    assert np.allclose(symmetrize(Tensor3Field(S)).D.C, 0, atol=1e-15)


def test_contract3(rng):
    C = np.zeros((3, 3, 3))
    C[0, 0, 1] = 1
    T = Tensor3Field(C)
    e = np.eye(3)
    assert contract3(T, e[0], e[0], e[1]) == 1
    assert contract3(T, e[1], e[0], e[1]) == 0
    R = Tensor3Field(random_admissible(rng, 3))
    a, b, c = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    loop = sum(R.C[j, k, l] * a[j] * b[k] * c[l] for j in range(3) for k in range(3) for l in range(3))
    assert contract3(R, a, b, c) == pytest.approx(loop)
    assert contract3(R, a, b, c) == pytest.approx(contract3(R, b, a, c))


def test_tensor3_requires_pair_symmetry(rng):
    with pytest.raises(ValueError):
        Tensor3Field(rng.standard_normal((3, 3, 3)))
