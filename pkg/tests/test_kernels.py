import itertools
import os
import subprocess
import sys

import numpy as np
import pytest

from qlinv import _accel, kernels
from qlinv import pde_core as pc


def _stencil_oracle(u, shape, h):
    U = u.reshape(shape)
    out = np.zeros(shape)
    core = tuple(slice(1, -1) for _ in shape)
    for a in range(len(shape)):
        up = tuple(slice(2, None) if b == a else slice(1, -1) for b in range(len(shape)))
        dn = tuple(slice(None, -2) if b == a else slice(1, -1) for b in range(len(shape)))
        out[core] += (U[up] - 2 * U[core] + U[dn]) / h[a] ** 2
    return out[core].reshape(-1)


@pytest.mark.parametrize("shape", [(5, 6, 7), (5, 6, 5, 7)])
def test_stencil_backends_agree(shape, rng):
    g = pc.build_grid(len(shape), list(shape))
    u = rng.standard_normal(g.shape).reshape(-1)
    strides = np.array([int(np.prod(g.shape[a + 1:])) for a in range(g.dim)], dtype=np.int64)
    inv_h2 = np.asarray(g.spacing, float) ** -2
    want = _stencil_oracle(u, g.shape, g.spacing)
    a = kernels.laplacian_interior(u, g.interior_index, strides, inv_h2)
    b = kernels.stencil_numpy(u, g.interior_index, strides, inv_h2, np.empty(len(g.interior_index)))
    assert np.allclose(a, want, rtol=1e-13) and np.allclose(b, want, rtol=1e-13)


@pytest.mark.parametrize("k", [2, 3])
def test_contraction_backends_agree(k, rng):
    d, n = 3, 50
    tuples = list(itertools.combinations_with_replacement(range(d), k))
    idx = np.array(tuples, dtype=np.int64)
    mult = np.array([len(set(itertools.permutations(t))) for t in tuples], float)
    coef = rng.standard_normal((len(tuples), n))
    p = rng.standard_normal((n, d))
    full = np.zeros((d,) * k + (n,))
    for t, c in zip(tuples, coef):
        for perm in set(itertools.permutations(t)):
            full[perm] = c
    want = full
    for _ in range(k):
        want = np.einsum("i...n,ni->...n", want, p)
    got = kernels.contract_symmetric(coef, idx, mult, p)
    ref = kernels.sym_contract_numpy(coef, idx, mult, p, np.empty(n))
    assert np.allclose(got, want, rtol=1e-12) and np.allclose(ref, want, rtol=1e-12)
    assert np.all(kernels.contract_symmetric(coef[:0], idx[:0], mult[:0], p) == 0)


def test_backend_name():
    assert _accel.backend() in {"numba", "numpy"}


def test_env_flag_selects_numpy():
    env = dict(os.environ, QLINV_NO_NUMBA="1")
    code = ("from qlinv import _accel, kernels, pde_core as pc;"
            "g = pc.build_grid(3, 9); X = g.mesh();"
            "print(_accel.backend(), abs(pc.laplacian(g, X[0]**2)[g.interior_mask] - 2).max() < 1e-9)")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "True"]
