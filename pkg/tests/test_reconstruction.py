import itertools
import warnings

import numpy as np
import pytest

from qlinv.harmonics import default_dictionary, harmonic_polynomials
from qlinv.nonlinearity import free_components
from qlinv.reconstruction import (CoordinateProbe, PolarizationWarning, VoxelSupport, all_triples, assemble,
                                  assemble_exact, constraint_matrix, exact_rank, frame_probe_checks,
                                  params_to_tensor, polarize, recover, s_structure_tensor, tensor_to_params)


def test_eighteen_free_components():
    assert len(free_components(3)) == 18


def test_param_round_trip(rng):
    x = rng.standard_normal(18 * 4)
    C = params_to_tensor(x, 3)
    assert C.shape == (3, 3, 3, 4)
    assert np.array_equal(C, C.transpose(1, 0, 2, 3))
    assert np.array_equal(tensor_to_params(C), x)


def test_coordinate_rows_are_volume_indicators():
    sup = VoxelSupport((0.25, 0.25, 0.25), (0.75, 0.75, 0.75), n=2, quad=2)
    probes = [CoordinateProbe(m, 3) for m in range(3)]
    triples = list(itertools.product(range(3), repeat=3))
    A = assemble(sup, probes, triples).A
    vol = 0.25**3
    comps = free_components(3)
    for r, (a, b, c) in enumerate(triples):
        expect = np.zeros(18)
        for n, (j, k, l) in enumerate(comps):
            if l == c and {j, k} == {a, b}:
                expect[n] = vol
        assert np.allclose(A[r].reshape(8, 18), expect)


def test_exact_rows_match_quadrature():
    sup = VoxelSupport((0.3, 0.3, 0.3), (0.7, 0.7, 0.7), n=2, quad=8)
    probes = harmonic_polynomials(3, 1, min_degree=1) + default_dictionary(3, seed=2, poly_degree=0, n_cgo=6)[1:]
    triples = all_triples(len(probes))
    A1 = assemble(sup, probes, triples).A
    A2 = assemble_exact(sup, probes, triples).A
    assert np.max(np.abs(A1 - A2)) < 1e-12 * np.max(np.abs(A1))


def test_exact_rows_reject_higher_polynomials():
    sup = VoxelSupport((0.3,) * 3, (0.7,) * 3, n=1)
    with pytest.raises(ValueError):
        assemble_exact(sup, harmonic_polynomials(3, 2, min_degree=2), [(0, 0, 0)])


@pytest.fixture(scope="module")
def system():
    sup = VoxelSupport((0.3,) * 3, (0.7,) * 3, n=2)
    probes = harmonic_polynomials(3, 1, min_degree=1) + default_dictionary(3, seed=0, poly_degree=0, n_cgo=20)[1:]
    return assemble_exact(sup, probes, all_triples(len(probes)))


def test_recover_exact_data(system, rng):
    x = rng.standard_normal(system.A.shape[1])
    rep = recover(system, system.A @ x, truth=params_to_tensor(x, 3))
    assert rep.full_rank and rep.rank == 144
    assert rep.relative_error < 1e-9 and rep.residual < 1e-10


def test_recover_zero_and_scaling(system, rng):
    assert np.all(recover(system, np.zeros(system.A.shape[0])).C == 0)
    b = system.A @ rng.standard_normal(system.A.shape[1])
    assert np.allclose(recover(system, 3.5 * b).C, 3.5 * recover(system, b).C, atol=1e-10)
    both = recover(system, np.stack([b, 2 * b], axis=1)).C
    assert np.allclose(both[..., 1], 2 * both[..., 0], atol=1e-10)


def test_recover_flags_rank_deficiency():
    sup = VoxelSupport((0.3,) * 3, (0.7,) * 3, n=1)
    sys_ = assemble(sup, [CoordinateProbe(0, 3)], [(0, 0, 0)])
    with pytest.warns(UserWarning, match="rank deficient"):
        rep = recover(sys_, np.ones(1))
    assert rep.null_dim == 17 and rep.log


def test_polarize_scalar_and_quadratic(rng):
    a, b, c = rng.standard_normal(3)
    assert polarize(lambda x: x**3, [a, b, c]) == pytest.approx(a * b * c)
    M = rng.standard_normal((4, 4))
    M = M + M.T
    u, v = rng.standard_normal((2, 4))
    assert polarize(lambda x: x @ M @ x, [u, v]) == pytest.approx(u @ M @ v)
    assert polarize(lambda x: x**2, [a]) == pytest.approx(a**2)


def test_polarize_warns_on_cancellation():
    with pytest.warns(PolarizationWarning):
        assert polarize(lambda x: x**2, [1e4, 1e-4]) == pytest.approx(1.0, rel=1e-6)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        polarize(lambda x: x**2, [1.0, 2.0])


def test_frame_family_determines_tensor(rng):
    rep = frame_probe_checks(np.zeros((3, 3, 3)))
    assert rep.exact_rank == 18 and rep.numeric_rank_random == 18 and rep.forces_zero
    assert rep.s_structure_error < 1e-12
    assert rep.null_vector_rank == 10 - 3
    assert all(v == 0 for v in rep.family_values.values())
    C = params_to_tensor(rng.standard_normal(18), 3)[..., 0]
    assert max(frame_probe_checks(C).family_values.values()) > 0


def test_constraint_matrix_without_symmetric_rows_is_deficient():
    assert exact_rank(constraint_matrix(3, include_S=False)) < 18


def test_s_structure_is_fully_symmetric(rng):
    S = s_structure_tensor(rng.standard_normal(3))
    for p in itertools.permutations(range(3)):
        assert np.allclose(S, S.transpose(p))
