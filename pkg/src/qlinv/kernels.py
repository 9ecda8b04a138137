"""Hot loops: the compact Laplacian stencil and symmetric tensor contraction.

Every kernel has a loop form (compiled by numba) and a vectorized numpy form;
``_accel.pick`` chooses one at import time.
"""
from __future__ import annotations

import numpy as np

from ._accel import pick


def _stencil_loop(u, interior, strides, inv_h2, out):
    nd = strides.shape[0]
    for n in range(interior.shape[0]):
        i = interior[n]
        acc = 0.0
        for a in range(nd):
            s = strides[a]
            acc += (u[i + s] - 2.0 * u[i] + u[i - s]) * inv_h2[a]
        out[n] = acc
    return out


def _stencil_numpy(u, interior, strides, inv_h2, out):
    out[:] = 0.0
    for a in range(strides.shape[0]):
        s = strides[a]
        out += (u[interior + s] - 2.0 * u[interior] + u[interior - s]) * inv_h2[a]
    return out


def _sym_contract_loop(coef, idx, mult, p, out):
    T, k = idx.shape
    M = p.shape[0]
    for m in range(M):
        acc = 0.0
        for t in range(T):
            c = coef[t, m]
            if c == 0.0:
                continue
            prod = mult[t] * c
            for r in range(k):
                prod *= p[m, idx[t, r]]
            acc += prod
        out[m] = acc
    return out


def _sym_contract_numpy(coef, idx, mult, p, out):
    out[:] = 0.0
    for t in range(idx.shape[0]):
        term = mult[t] * coef[t]
        for r in range(idx.shape[1]):
            term = term * p[:, idx[t, r]]
        out += term
    return out


stencil_apply = pick(_stencil_loop, _stencil_numpy)
sym_contract = pick(_sym_contract_loop, _sym_contract_numpy)

# reference implementations kept importable for benchmarks and tests
stencil_numpy = _stencil_numpy
sym_contract_numpy = _sym_contract_numpy


def laplacian_interior(u_flat: np.ndarray, interior: np.ndarray, strides: np.ndarray,
                       inv_h2: np.ndarray) -> np.ndarray:
    """Compact (2d+1)-point Laplacian at the listed interior nodes."""
    if np.iscomplexobj(u_flat):
        return (laplacian_interior(np.ascontiguousarray(u_flat.real), interior, strides, inv_h2)
                + 1j * laplacian_interior(np.ascontiguousarray(u_flat.imag), interior, strides, inv_h2))
    out = np.empty(interior.shape[0])
    return stencil_apply(np.ascontiguousarray(u_flat, dtype=float), interior, strides, inv_h2, out)


def contract_symmetric(coef: np.ndarray, idx: np.ndarray, mult: np.ndarray, p: np.ndarray) -> np.ndarray:
    """sum_t mult_t coef_t prod_r p[:, idx[t, r]] for canonical index tuples."""
    out = np.empty(p.shape[0])
    if idx.shape[0] == 0:
        out[:] = 0.0
        return out
    return sym_contract(np.ascontiguousarray(coef, dtype=float), np.ascontiguousarray(idx, dtype=np.int64),
                        np.ascontiguousarray(mult, dtype=float), np.ascontiguousarray(p, dtype=float), out)
