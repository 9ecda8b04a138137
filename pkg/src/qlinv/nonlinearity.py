"""Polynomial fluxes J(x, s, p) = p + sum_k J_k(x) : p^k + R(x, s, p), their
boundary-fixing pushforwards, and order-3 tensor fields with symmetrization."""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .kernels import contract_symmetric
from .pde_core import Grid, edge_average


def canonical_tuples(d: int, k: int) -> list:
    return list(itertools.combinations_with_replacement(range(d), k))


def multiplicity(t) -> int:
    """Number of distinct orderings of the index tuple ``t``."""
    out = math.factorial(len(t))
    for c in Counter(t).values():
        out //= math.factorial(c)
    return out


def _margin_mask(grid: Grid, margin: int) -> np.ndarray:
    m = np.zeros(grid.shape, dtype=bool)
    m[tuple(slice(margin, n - margin) for n in grid.shape)] = True
    return m


class TensorCoefficients:
    """Symmetric order-k tensor of vector fields, stored on sorted index tuples.

    ``data`` has shape (T, d, *grid.shape), row t belonging to ``tuples[t]``.
    Values within ``margin`` cells of the boundary are zeroed.
    """

    def __init__(self, grid: Grid, k: int, data: np.ndarray, bound: float | None = None, margin: int = 2):
        if k < 2:
            raise ValueError("tensor order must be at least 2")
        self.grid, self.k = grid, k
        self.tuples = canonical_tuples(grid.dim, k)
        data = np.array(data, dtype=float)
        if data.shape != (len(self.tuples), grid.dim) + grid.shape:
            raise ValueError(f"expected data of shape {(len(self.tuples), grid.dim) + grid.shape}")
        self.margin = margin
        data *= _margin_mask(grid, margin)
        self.data = data
        sup = float(np.abs(data).max()) if data.size else 0.0
        if bound is not None and sup > bound * (1 + 1e-12):
            raise ValueError(f"coefficients exceed declared bound {bound} (sup {sup})")
        self.bound = bound if bound is not None else sup
        self.idx = np.array(self.tuples, dtype=np.int64).reshape(len(self.tuples), k)
        self.mult = np.array([multiplicity(t) for t in self.tuples], dtype=float)
        self._pos = {t: n for n, t in enumerate(self.tuples)}

    @classmethod
    def zeros(cls, grid: Grid, k: int, margin: int = 2):
        return cls(grid, k, np.zeros((len(canonical_tuples(grid.dim, k)), grid.dim) + grid.shape), margin=margin)

    @classmethod
    def from_components(cls, grid: Grid, k: int, comps: dict, bound=None, margin: int = 2):
        """Build from ``{index tuple: vector field (d, *shape)}``; permuted duplicates must agree."""
        out = np.zeros((len(canonical_tuples(grid.dim, k)), grid.dim) + grid.shape)
        seen = {}
        for t, v in comps.items():
            if len(t) != k:
                raise ValueError(f"index tuple {t} has wrong length")
            c = tuple(sorted(t))
            v = np.broadcast_to(np.asarray(v, dtype=float), (grid.dim,) + grid.shape)
            if c in seen and not np.allclose(seen[c], v):
                raise ValueError(f"components for permutations of {c} disagree")
            seen[c] = v
        tuples = canonical_tuples(grid.dim, k)
        for c, v in seen.items():
            out[tuples.index(c)] = v
        return cls(grid, k, out, bound=bound, margin=margin)

    def __getitem__(self, t) -> np.ndarray:
        return self.data[self._pos[tuple(sorted(t))]]

    def scaled(self, t: float) -> "TensorCoefficients":
        return TensorCoefficients(self.grid, self.k, t * self.data, margin=self.margin)

    def __sub__(self, other):
        return TensorCoefficients(self.grid, self.k, self.data - other.data, margin=self.margin)

    def __add__(self, other):
        return TensorCoefficients(self.grid, self.k, self.data + other.data, margin=self.margin)

    @cached_property
    def _edge_coeffs(self) -> list:
        """Per axis: (T, n_edges) coefficient of that flux component at edge midpoints."""
        out = []
        for a in range(self.grid.dim):
            e = edge_average(self.grid, self.data[:, a], a)
            out.append(np.ascontiguousarray(e.reshape(len(self.tuples), -1)))
        return out

    def contract_edges(self, axis: int, p_e: np.ndarray) -> np.ndarray:
        """Axis component of J_k : p^k at the edges of ``axis``; p_e has shape (M, d)."""
        return contract_symmetric(self._edge_coeffs[axis], self.idx, self.mult, p_e)

    def contract_nodes(self, p: np.ndarray) -> np.ndarray:
        """J_k : p^k at nodes, p of shape (d, *shape); returns (d, *shape)."""
        pf = p.reshape(self.grid.dim, -1).T
        out = np.empty((self.grid.dim, pf.shape[0]))
        for a in range(self.grid.dim):
            out[a] = contract_symmetric(self.data[:, a].reshape(len(self.tuples), -1), self.idx, self.mult, pf)
        return out.reshape(p.shape)

    def multilinear(self, vectors: list, coeff: np.ndarray | None = None) -> np.ndarray:
        """J_k : v_1 (x) ... (x) v_k for vector fields v_r of shape (d, ...).

        ``coeff`` overrides the stored data (same layout with matching trailing shape).
        """
        if len(vectors) != self.k:
            raise ValueError("need exactly k vectors")
        data = self.data if coeff is None else coeff
        out = np.zeros((self.grid.dim,) + vectors[0].shape[1:])
        for full in itertools.product(range(self.grid.dim), repeat=self.k):
            c = data[self._pos[tuple(sorted(full))]]
            w = vectors[0][full[0]]
            for r in range(1, self.k):
                w = w * vectors[r][full[r]]
            out = out + c * w
        return out

    def edge_data(self, axis: int) -> np.ndarray:
        """Coefficients averaged onto edges of ``axis``: shape (T, d, *edge_shape)."""
        return edge_average(self.grid, self.data, axis)


def edge_vectors(grid: Grid, u: np.ndarray, axis: int) -> np.ndarray:
    """Full gradient at the edges of ``axis``: forward difference along the axis,
    averaged central differences across it.  Shape (d, *edge_shape)."""
    g = np.gradient(u, *grid.coords, edge_order=2)
    out = []
    for b in range(grid.dim):
        if b == axis:
            out.append(np.diff(u, axis=axis) / grid.spacing[axis])
        else:
            out.append(edge_average(grid, g[b], axis))
    return np.array(out)


def edge_midpoints(grid: Grid, axis: int) -> np.ndarray:
    """Coordinates of the edge midpoints of ``axis``, shape (M, d)."""
    coords = [c if b != axis else 0.5 * (c[1:] + c[:-1]) for b, c in enumerate(grid.coords)]
    return np.array(np.meshgrid(*coords, indexing="ij")).reshape(grid.dim, -1).T


class FluxModel:
    """Interface used by the solvers: the deviation J - p evaluated on edges."""

    grid: Grid

    def excess_edge(self, axis: int, x_e: np.ndarray, s_e: np.ndarray, p_e: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def is_linear(self) -> bool:
        return False


@dataclass
class NonlinearitySpec(FluxModel):
    grid: Grid
    tensors: dict = field(default_factory=dict)
    remainder: Callable | None = None
    growth: float | None = None

    def __post_init__(self):
        for k, J in self.tensors.items():
            if J.k != k or J.grid != self.grid:
                raise ValueError(f"tensor for k={k} does not match its order or the grid")

    @property
    def N(self) -> int:
        return max(self.tensors, default=2)

    def is_linear(self) -> bool:
        return self.remainder is None and all(not np.any(J.data) for J in self.tensors.values())

    def excess_edge(self, axis, x_e, s_e, p_e):
        out = np.zeros(p_e.shape[0])
        for J in self.tensors.values():
            out += J.contract_edges(axis, p_e)
        if self.remainder is not None:
            out += np.asarray(self.remainder(x_e, s_e, p_e))[:, axis]
        return out

    def with_tensors(self, tensors: dict) -> "NonlinearitySpec":
        return NonlinearitySpec(self.grid, tensors, self.remainder, self.growth)


def linear_spec(grid: Grid) -> NonlinearitySpec:
    return NonlinearitySpec(grid, {})


def eval_flux(spec: NonlinearitySpec, s: np.ndarray, p: np.ndarray) -> np.ndarray:
    """p + sum_k J_k : p^k + R at every node."""
    out = np.array(p, dtype=float, copy=True)
    for J in spec.tensors.values():
        out += J.contract_nodes(p)
    if spec.remainder is not None:
        pts = spec.grid.points()
        r = np.asarray(spec.remainder(pts, np.asarray(s).reshape(-1), p.reshape(spec.grid.dim, -1).T))
        out += r.T.reshape(p.shape)
    return out


# ---------------------------------------------------------------------------
# diffeomorphisms and pushforward
# ---------------------------------------------------------------------------


def _bump(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = np.abs(t) < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - t[m] ** 2))
    return out


def _bump_d(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = np.abs(t) < 1
    tm = t[m]
    out[m] = np.exp(1.0 - 1.0 / (1.0 - tm**2)) * (-2 * tm / (1.0 - tm**2) ** 2)
    return out


@dataclass(frozen=True)
class Diffeomorphism:
    """x -> x + displacement(x), given with its exact Jacobian."""

    kind: str
    center: tuple = ()
    radius: float = 0.0
    amplitude: float = 0.0

    def displacement(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "identity":
            return np.zeros_like(x)
        r = x - np.asarray(self.center)
        t = np.linalg.norm(r, axis=1) / self.radius
        return self.amplitude * _bump(t)[:, None] * r

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        d = x.shape[1]
        eye = np.broadcast_to(np.eye(d), (x.shape[0], d, d)).copy()
        if self.kind == "identity":
            return eye
        r = x - np.asarray(self.center)
        rho = np.linalg.norm(r, axis=1)
        t = rho / self.radius
        b, db = _bump(t), _bump_d(t)
        safe = np.where(rho > 0, rho, 1.0)
        outer = np.einsum("mi,mj->mij", r, r) / safe[:, None, None]
        return eye + self.amplitude * (b[:, None, None] * np.eye(d) + (db / self.radius)[:, None, None] * outer)

    def __call__(self, x):
        return x + self.displacement(x)

    def inverse(self, y: np.ndarray, tol=1e-14, max_iter=200) -> np.ndarray:
        x = y.copy()
        for _ in range(max_iter):
            nx = y - self.displacement(x)
            if np.max(np.abs(nx - x)) < tol:
                return nx
            x = nx
        raise RuntimeError("inverse map iteration did not converge")


def identity_map() -> Diffeomorphism:
    return Diffeomorphism("identity")


def radial_bump(center, radius: float, amplitude: float) -> Diffeomorphism:
    return Diffeomorphism("radial_bump", tuple(map(float, center)), float(radius), float(amplitude))


DIFFEO_CATALOG = {"identity": identity_map, "radial_bump": radial_bump}


class PushforwardFlux(FluxModel):
    """Flux of the transformed medium: y -> [det(D)^-1 D J(x, s, D^T p)] at x = Phi^-1(y),
    with D the Jacobian matrix dPhi_i/dx_j."""

    def __init__(self, spec: NonlinearitySpec, phi: Diffeomorphism):
        self.spec, self.phi, self.grid = spec, phi, spec.grid
        grid = spec.grid
        pts = grid.points()
        disp = phi.displacement(pts[grid.boundary_index])
        if np.max(np.abs(disp), initial=0.0) > 1e-13:
            raise ValueError("diffeomorphism moves boundary nodes")
        Dn = phi.jacobian(pts)
        det = np.linalg.det(Dn)
        if det.min() <= 0:
            raise ValueError("diffeomorphism has a singular or orientation-reversing Jacobian")
        if np.max(np.abs(Dn - np.eye(grid.dim))) >= 0.2:
            raise ValueError("diffeomorphism is too far from the identity (|D - I| >= 0.2)")
        self._cache = {}

    def _geometry(self, axis: int):
        if axis not in self._cache:
            grid = self.grid
            y = edge_midpoints(grid, axis)
            x = self.phi.inverse(y)
            D = self.phi.jacobian(x)
            det = np.linalg.det(D)
            if det.min() <= 0:
                raise ValueError("singular Jacobian at an edge point")
            coeffs = []
            for k, J in self.spec.tensors.items():
                interp = RegularGridInterpolator(grid.coords, np.moveaxis(J.data.reshape(-1, *grid.shape), 0, -1))
                c = interp(x).T.reshape(J.data.shape[0], grid.dim, -1)
                coeffs.append((J, c))
            self._cache[axis] = (x, D, det, coeffs)
        return self._cache[axis]

    def excess_edge(self, axis, x_e, s_e, p_e):
        x, D, det, coeffs = self._geometry(axis)
        q = np.einsum("mji,mj->mi", D, p_e)  # D^T p
        Jx = q.copy()
        for J, c in coeffs:
            for a in range(self.grid.dim):
                Jx[:, a] += contract_symmetric(c[:, a], J.idx, J.mult, q)
        if self.spec.remainder is not None:
            Jx += np.asarray(self.spec.remainder(x, s_e, q))
        out = np.einsum("mj,mj->m", D[:, axis, :], Jx) / det
        return out - p_e[:, axis]

    def leading_matrix(self, y: np.ndarray) -> np.ndarray:
        """det(D)^-1 D D^T at Phi^-1(y): the linear part of the transformed flux."""
        x = self.phi.inverse(y)
        D = self.phi.jacobian(x)
        return np.einsum("mij,mkj->mik", D, D) / np.linalg.det(D)[:, None, None]


def pushforward(spec: NonlinearitySpec, phi: Diffeomorphism) -> PushforwardFlux:
    return PushforwardFlux(spec, phi)


# ---------------------------------------------------------------------------
# order-3 tensor fields
# ---------------------------------------------------------------------------


@dataclass
class Tensor3Field:
    """C[j, k, l, ...] with C symmetric in (j, k); trailing axes index nodes or voxels."""

    C: np.ndarray
    grid: Grid | None = None
    check: bool = True

    def __post_init__(self):
        self.C = np.asarray(self.C)
        d = self.C.shape[0]
        if self.C.shape[:3] != (d, d, d):
            raise ValueError("components must have shape (d, d, d, ...)")
        if self.check and not np.allclose(self.C, np.swapaxes(self.C, 0, 1), atol=1e-12, rtol=0):
            raise ValueError("C must be symmetric in its first two indices")

    @property
    def dim(self) -> int:
        return self.C.shape[0]


@dataclass
class SymDecomp:
    S: Tensor3Field
    D: Tensor3Field


def full_symmetrization(C: np.ndarray) -> np.ndarray:
    perms = itertools.permutations(range(3))
    return sum(np.transpose(C, p + tuple(range(3, C.ndim))) for p in perms) / 6


def symmetrize(T: Tensor3Field) -> SymDecomp:
    """S_jkl = (C_jkl + C_klj + C_ljk) / 3 and D = C - S."""
    C = T.C
    rest = tuple(range(3, C.ndim))
    S = (C + np.transpose(C, (1, 2, 0) + rest) + np.transpose(C, (2, 0, 1) + rest)) / 3
    return SymDecomp(Tensor3Field(S, T.grid), Tensor3Field(C - S, T.grid))


def contract3(T: Tensor3Field, a, b, c) -> np.ndarray:
    """sum_jkl C_jkl a_j b_k c_l at every node."""
    return np.einsum("jkl...,j,k,l->...", T.C, np.asarray(a), np.asarray(b), np.asarray(c))


def random_admissible(rng: np.random.Generator, d: int = 3, extra_shape=(), symmetric_part=True,
                      complex_values=False) -> np.ndarray:
    """Random C with C_jkl = C_kjl (optionally with vanishing full symmetrization)."""
    shape = (d, d, d) + tuple(extra_shape)
    C = rng.standard_normal(shape)
    if complex_values:
        C = C + 1j * rng.standard_normal(shape)
    C = 0.5 * (C + np.swapaxes(C, 0, 1))
    if not symmetric_part:
        C = C - full_symmetrization(C)
    return C


def free_components(d: int) -> list:
    """(j, k, l) with j <= k: the free coordinates of a first-pair-symmetric tensor."""
    return [(j, k, l) for j, k in itertools.combinations_with_replacement(range(d), 2) for l in range(d)]
