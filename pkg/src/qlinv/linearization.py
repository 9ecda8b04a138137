"""Higher-order linearization: the epsilon cascade u_1..u_N, its multinomial
sources, and extraction of the homogeneous parts of the DtN pairing."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import pde_core as pc
from .forward import DtNOracle, dtn_pair_many
from .nonlinearity import NonlinearitySpec, edge_vectors


class ConditioningError(RuntimeError):
    pass


def compositions(k: int) -> list:
    """All (l, alpha, coefficient) with sum_j alpha_j = l >= 2, sum_j j alpha_j = k,
    l < k, coefficient l! / prod alpha_j!.  ``alpha`` maps j -> alpha_j > 0.
    The l = k term J_k : (grad u_1)^k is kept separate, so N_2 is empty."""
    out = []

    def rec(j, remaining, alpha):
        if remaining == 0:
            l = sum(alpha.values())
            if 2 <= l < k:
                coeff = math.factorial(l)
                for a in alpha.values():
                    coeff //= math.factorial(a)
                out.append((l, dict(alpha), coeff))
            return
        if j == 0:
            return
        for a in range(remaining // j, -1, -1):
            if a:
                alpha[j] = a
            rec(j - 1, remaining - a * j, alpha)
            alpha.pop(j, None)

    if k >= 2:
        rec(k - 1, k, {})
    return sorted(out, key=lambda c: (c[0], sorted(c[1].items())))


def multinomial_sources(tensors: dict, vectors: dict, k: int, axis: int | None = None) -> np.ndarray:
    """N_k = sum over compositions of coeff * J_l : (x)_j (grad u_j)^{alpha_j}.

    ``vectors[j]`` is grad u_j sampled like the output (nodes, or edges of
    ``axis`` when given, with coefficients averaged onto those edges).
    """
    sample = next(iter(vectors.values()))
    out = np.zeros(sample.shape)
    for l, alpha, coeff in compositions(k):
        J = tensors.get(l)
        if J is None or not np.any(J.data):
            continue
        args = [vectors[j] for j in sorted(alpha) for _ in range(alpha[j])]
        data = J.data if axis is None else J.edge_data(axis)
        out = out + coeff * J.multilinear(args, coeff=data)
    return out


@dataclass
class CascadeSolution:
    u: list
    sources: dict = field(default_factory=dict)

    def partial_sum(self, eps: float, upto: int | None = None) -> np.ndarray:
        upto = len(self.u) if upto is None else upto
        return sum(eps ** (k + 1) * self.u[k] for k in range(upto))


def cascade_solve(spec: NonlinearitySpec, f, N: int | None = None) -> CascadeSolution:
    """u_1 = harmonic extension of f; u_k = -G0(div(J_k : (grad u_1)^k + N_k)) for k >= 2,
    discretized with the same edge fluxes as the Picard solver."""
    grid = spec.grid
    N = spec.N if N is None else N
    u = [pc.harmonic_extension(grid, f)]
    sources = {}
    edge_grads = [{} for _ in range(grid.dim)]
    for k in range(2, N + 1):
        for a in range(grid.dim):
            edge_grads[a][k - 1] = edge_vectors(grid, u[k - 2], a)
        F = []
        for a in range(grid.dim):
            Nk = multinomial_sources(spec.tensors, edge_grads[a], k, axis=a)
            if k >= 3:
                sources.setdefault(k, []).append(Nk)
            Jk = spec.tensors.get(k)
            lead = Jk.multilinear([edge_grads[a][1]] * k, coeff=Jk.edge_data(a)) if Jk is not None else 0.0
            F.append((lead + Nk)[a])
        u.append(-pc.solve_poisson_dirichlet(grid, pc.edge_divergence(grid, F), None))
    return CascadeSolution(u, sources)


@dataclass
class LambdaFit:
    coefficients: np.ndarray  # (n_w, M): column m-1 holds c_m
    eps: np.ndarray
    condition: float

    def c(self, k: int) -> np.ndarray:
        return self.coefficients[:, k - 1]


def default_eps_set(oracle: DtNOracle, f, N: int, count: int | None = None) -> np.ndarray:
    count = 2 * (N + 1) if count is None else count
    if not np.isfinite(oracle.kappa):
        raise ValueError("oracle radius not calibrated; pass eps_set explicitly")
    nf = pc.h2_norm(oracle.grid, pc.harmonic_extension(oracle.grid, f))
    return np.geomspace(oracle.kappa / 100, oracle.kappa / 4, count) / nf


def fit_lambda(oracle: DtNOracle, ws: list, f, eps_set, degree: int | None = None) -> LambdaFit:
    """Fit <w, Lambda(eps f)> = sum_{m=1..M} c_m eps^m from measurements at eps_set."""
    eps = np.asarray(eps_set, dtype=float)
    if len(np.unique(eps)) != len(eps) or np.any(eps <= 0):
        raise ValueError("eps_set must hold distinct positive values")
    M = len(eps) if degree is None else degree
    scale = eps.max()
    V = (eps[:, None] / scale) ** np.arange(1, M + 1)[None, :]
    cond = float(np.linalg.cond(V))
    if cond > 1e12:
        raise ConditioningError(f"eps Vandermonde condition number {cond:.3e} exceeds 1e12")
    base = pc.harmonic_extension(oracle.grid, f)
    fb = pc.trace(oracle.grid, base)
    Y = np.array([dtn_pair_many(oracle, ws, e * fb, base=e * base) for e in eps])  # (n_eps, n_w)
    sol = np.linalg.lstsq(V, Y, rcond=None)[0]  # (M, n_w)
    coeffs = sol.T / scale ** np.arange(1, M + 1)[None, :]
    return LambdaFit(coeffs, eps, cond)


def extract_lambda_k(oracle: DtNOracle, w, f, k: int, eps_set=None, N: int | None = None) -> float:
    """c_k of the eps-expansion of <w, Lambda(eps f)>, from boundary measurements only."""
    N = getattr(oracle.flux, "N", k) if N is None else N
    if k > max(N, 1):
        raise ValueError("k exceeds the degree of the nonlinearity")
    if eps_set is None:
        eps_set = default_eps_set(oracle, f, N)
    if len(eps_set) < N + 1:
        raise ValueError("need at least N + 1 values of eps")
    return float(fit_lambda(oracle, [w], f, eps_set).c(k)[0])
