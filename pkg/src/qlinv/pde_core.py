"""Box grids, finite-difference calculus, Dirichlet Poisson solves and quadrature.

Fields are plain numpy arrays of shape ``grid.shape``; boundary data are 1-D
arrays ordered like ``grid.boundary_index``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np
import scipy.fft as sfft
import scipy.sparse as sps
from scipy.sparse.linalg import splu

from .kernels import laplacian_interior


class DimensionError(ValueError):
    pass


class ResolutionError(ValueError):
    pass


class SolverError(RuntimeError):
    def __init__(self, msg, residual=None):
        super().__init__(msg if residual is None else f"{msg} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True, eq=True)
class Grid:
    dim: int
    box: tuple
    resolution: tuple
    shift: tuple = field(default=None)

    @property
    def shape(self) -> tuple:
        return tuple(self.resolution)

    @property
    def spacing(self) -> tuple:
        return tuple((hi - lo) / (n - 1) for (lo, hi), n in zip(self.box, self.resolution))

    @property
    def h(self) -> float:
        return max(self.spacing)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    @cached_property
    def strides(self) -> np.ndarray:
        st = np.ones(self.dim, dtype=np.int64)
        for a in range(self.dim - 2, -1, -1):
            st[a] = st[a + 1] * self.shape[a + 1]
        return st

    @cached_property
    def coords(self) -> list:
        return [np.linspace(lo, hi, n) for (lo, hi), n in zip(self.box, self.resolution)]

    def mesh(self) -> np.ndarray:
        return np.array(np.meshgrid(*self.coords, indexing="ij"))

    def points(self) -> np.ndarray:
        return self.mesh().reshape(self.dim, -1).T

    @cached_property
    def interior_mask(self) -> np.ndarray:
        m = np.ones(self.shape, dtype=bool)
        for a in range(self.dim):
            sl = [slice(None)] * self.dim
            sl[a] = 0
            m[tuple(sl)] = False
            sl[a] = -1
            m[tuple(sl)] = False
        return m

    @cached_property
    def interior_index(self) -> np.ndarray:
        return np.flatnonzero(self.interior_mask.ravel())

    @cached_property
    def boundary_index(self) -> np.ndarray:
        return np.flatnonzero(~self.interior_mask.ravel())

    @cached_property
    def trapezoid_weights(self) -> np.ndarray:
        w = np.ones(self.shape)
        for a, h in enumerate(self.spacing):
            wa = np.full(self.shape[a], h)
            wa[0] = wa[-1] = h / 2
            w = w * wa.reshape([-1 if b == a else 1 for b in range(self.dim)])
        return w

    def zeros(self, dtype=float) -> np.ndarray:
        return np.zeros(self.shape, dtype=dtype)

    def sample(self, func) -> np.ndarray:
        """Evaluate ``func(X)`` with X of shape (d, *grid.shape)."""
        return np.asarray(func(self.mesh()))


def build_grid(d: int, resolution, box: Sequence | None = None) -> Grid:
    """Uniform lattice on a box; the x1 interval is shifted to start at >= 0 if needed."""
    if d < 3:
        raise DimensionError(f"dimension must be at least 3, got {d}")
    res = (int(resolution),) * d if np.isscalar(resolution) else tuple(int(r) for r in resolution)
    if len(res) != d:
        raise ResolutionError("one resolution per axis required")
    if min(res) < 5:
        raise ResolutionError(f"resolution {min(res)} too small, need at least 5 per axis")
    box = [(0.0, 1.0)] * d if box is None else [tuple(map(float, b)) for b in box]
    if len(box) != d or any(hi <= lo for lo, hi in box):
        raise ValueError("box needs one increasing interval per axis")
    shift = [0.0] * d
    if box[1][0] < 0:
        shift[1] = -box[1][0]
        box[1] = (0.0, box[1][1] + shift[1])
    return Grid(d, tuple(box), res, tuple(shift))


def trace(grid: Grid, u: np.ndarray) -> np.ndarray:
    return np.asarray(u).reshape(-1)[grid.boundary_index].copy()


def with_boundary(grid: Grid, bc: np.ndarray, interior=None, dtype=None) -> np.ndarray:
    dtype = dtype or np.result_type(bc, float)
    u = np.zeros(grid.n_nodes, dtype=dtype)
    if interior is not None:
        u[grid.interior_index] = np.asarray(interior).reshape(-1)[grid.interior_index]
    u[grid.boundary_index] = bc
    return u.reshape(grid.shape)


def laplacian(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Compact stencil at interior nodes (zero on the boundary)."""
    out = np.zeros(grid.n_nodes, dtype=np.result_type(u, float))
    inv_h2 = np.array([1.0 / h**2 for h in grid.spacing])
    out[grid.interior_index] = laplacian_interior(np.asarray(u).reshape(-1), grid.interior_index,
                                                  grid.strides, inv_h2)
    return out.reshape(grid.shape)


@lru_cache(maxsize=8)
def _interior_matrix(grid: Grid):
    blocks = []
    for a, (n, h) in enumerate(zip(grid.shape, grid.spacing)):
        m = n - 2
        T = sps.diags([np.ones(m - 1), -2 * np.ones(m), np.ones(m - 1)], [-1, 0, 1]) / h**2
        mats = [sps.identity(k - 2, format="csr") for k in grid.shape]
        mats[a] = T
        K = mats[0]
        for M in mats[1:]:
            K = sps.kron(K, M, format="csr")
        blocks.append(K)
    return sum(blocks).tocsc()


@lru_cache(maxsize=8)
def _factorized(grid: Grid):
    A = _interior_matrix(grid)
    # symmetric ordering keeps fill-in low for the 3-D stencil
    return splu(A, permc_spec="MMD_AT_PLUS_A", options={"SymmetricMode": True}), A


@lru_cache(maxsize=8)
def _dst_symbol(grid: Grid) -> np.ndarray:
    """Eigenvalues of the interior stencil on the type-I sine basis."""
    lam = np.zeros(tuple(n - 2 for n in grid.shape))
    for a, (n, h) in enumerate(zip(grid.shape, grid.spacing)):
        ev = (2 * np.cos(np.pi * np.arange(1, n - 1) / (n - 1)) - 2) / h**2
        shape = [1] * grid.dim
        shape[a] = n - 2
        lam = lam + ev.reshape(shape)
    return lam


def interior_operator(grid: Grid):
    """Sparse interior Laplacian (C-ordered interior unknowns)."""
    return _interior_matrix(grid)


def _solve_interior(grid: Grid, b: np.ndarray, method: str) -> np.ndarray:
    if method == "dst":
        inner = tuple(n - 2 for n in grid.shape)
        x = sfft.idstn(sfft.dstn(b.reshape(inner), type=1) / _dst_symbol(grid), type=1)
        return x.reshape(-1)
    if method == "splu":
        lu = _factorized(grid)[0]
        if np.iscomplexobj(b):
            return lu.solve(np.ascontiguousarray(b.real)) + 1j * lu.solve(np.ascontiguousarray(b.imag))
        return lu.solve(b)
    raise ValueError(f"unknown Poisson method {method!r}")


def solve_poisson_dirichlet(grid: Grid, rhs, bc, tol: float = 1e-10, method: str = "dst") -> np.ndarray:
    """v with discrete Laplacian ``rhs`` at interior nodes and ``v = bc`` on the boundary.

    ``rhs`` may be a full field (boundary entries ignored) or None; ``bc`` a
    boundary vector, a full field, or None for zero data. ``method`` selects the
    interior solver: "dst" (type-I sine transform, exact for the box stencil)
    or "splu" (sparse LU).
    """
    A = _interior_matrix(grid)
    bvec = np.zeros(len(grid.boundary_index)) if bc is None else np.asarray(bc)
    if bvec.shape == grid.shape:
        bvec = trace(grid, bvec)
    f = np.zeros(grid.shape) if rhs is None else np.asarray(rhs)
    dtype = np.result_type(bvec, f, float)
    v = with_boundary(grid, bvec, dtype=dtype)
    b = f.reshape(-1)[grid.interior_index] - laplacian(grid, v).reshape(-1)[grid.interior_index]
    x = _solve_interior(grid, b, method)
    res = np.linalg.norm(A @ x - b) / max(np.linalg.norm(b), 1.0)
    if not np.isfinite(res) or res > tol:
        raise SolverError("Poisson solve did not reach tolerance", res)
    flat = v.reshape(-1)
    flat[grid.interior_index] = x
    return v


def harmonic_extension(grid: Grid, bc) -> np.ndarray:
    return solve_poisson_dirichlet(grid, None, bc)


def gradient(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Central differences inside, second-order one-sided at the boundary."""
    g = np.gradient(u, *grid.coords, edge_order=2)
    return np.array(g)


def divergence(grid: Grid, V) -> np.ndarray:
    return sum(np.gradient(V[a], grid.coords[a], axis=a, edge_order=2) for a in range(grid.dim))


def edge_gradient(grid: Grid, u: np.ndarray) -> list:
    """Forward differences on the edges of each axis (axis length n-1)."""
    return [np.diff(u, axis=a) / h for a, h in enumerate(grid.spacing)]


def edge_divergence(grid: Grid, F: list) -> np.ndarray:
    """Backward difference of edge fluxes at interior nodes (boundary set to 0).

    ``edge_divergence(edge_gradient(u))`` equals :func:`laplacian` exactly.
    """
    out = np.zeros(grid.shape, dtype=np.result_type(*F))
    inner = tuple(slice(1, -1) for _ in range(grid.dim))
    for a, h in enumerate(grid.spacing):
        Fa = F[a]
        hi = [slice(1, -1)] * grid.dim
        lo = [slice(1, -1)] * grid.dim
        hi[a] = slice(1, None)
        lo[a] = slice(0, -1)
        out[inner] += (Fa[tuple(hi)] - Fa[tuple(lo)]) / h
    return out


def edge_weights(grid: Grid, axis: int) -> np.ndarray:
    """Quadrature weights for edge-centred values: midpoint along ``axis``, trapezoid across."""
    shape = list(grid.shape)
    shape[axis] -= 1
    w = np.ones(shape)
    for b, h in enumerate(grid.spacing):
        wb = np.full(shape[b], h)
        if b != axis:
            wb[0] = wb[-1] = h / 2
        w = w * wb.reshape([-1 if c == b else 1 for c in range(grid.dim)])
    return w


def edge_average(grid: Grid, u: np.ndarray, axis: int) -> np.ndarray:
    sl_hi = [slice(None)] * u.ndim
    sl_lo = [slice(None)] * u.ndim
    ax = axis + (u.ndim - grid.dim)
    sl_hi[ax] = slice(1, None)
    sl_lo[ax] = slice(0, -1)
    return 0.5 * (u[tuple(sl_hi)] + u[tuple(sl_lo)])


def integrate(grid: Grid, u: np.ndarray):
    return np.sum(grid.trapezoid_weights * u)


def boundary_faces(grid: Grid):
    """Yield (axis, side, flat node indices, surface weights, outward normal sign)."""
    idx = np.arange(grid.n_nodes).reshape(grid.shape)
    for a in range(grid.dim):
        for side, pos in ((-1, 0), (1, -1)):
            sl = [slice(None)] * grid.dim
            sl[a] = pos
            w = np.ones([n for b, n in enumerate(grid.shape) if b != a])
            for j, b in enumerate(c for c in range(grid.dim) if c != a):
                h = grid.spacing[b]
                wb = np.full(grid.shape[b], h)
                wb[0] = wb[-1] = h / 2
                w = w * wb.reshape([-1 if k == j else 1 for k in range(grid.dim - 1)])
            yield a, side, idx[tuple(sl)].ravel(), w.ravel(), float(side)


@lru_cache(maxsize=8)
def _boundary_weights(grid: Grid) -> np.ndarray:
    w = np.zeros(grid.n_nodes)
    for _, _, nodes, wf, _ in boundary_faces(grid):
        w[nodes] += wf
    return w[grid.boundary_index]


def boundary_pairing(grid: Grid, w, g):
    """Surface trapezoid rule for int_{boundary} w g (face by face)."""
    return np.sum(_boundary_weights(grid) * np.asarray(w) * np.asarray(g))


def l2_norm(grid: Grid, u) -> float:
    return float(np.sqrt(integrate(grid, np.abs(u) ** 2)))


def h1_norm(grid: Grid, u) -> float:
    s = integrate(grid, np.abs(u) ** 2)
    for a, g in enumerate(edge_gradient(grid, u)):
        s += np.sum(edge_weights(grid, a) * np.abs(g) ** 2)
    return float(np.sqrt(s))


def h2_norm(grid: Grid, u) -> float:
    """Scaled l2 of u, its gradient and all second differences."""
    s = h1_norm(grid, u) ** 2
    g = gradient(grid, u)
    for a in range(grid.dim):
        for b in range(grid.dim):
            s += integrate(grid, np.abs(np.gradient(g[a], grid.coords[b], axis=b, edge_order=2)) ** 2)
    return float(np.sqrt(s))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def grid_to_dict(grid: Grid) -> dict:
    return {"dim": grid.dim, "box": [list(b) for b in grid.box], "resolution": list(grid.resolution),
            "shift": list(grid.shift or [0.0] * grid.dim)}


def grid_from_dict(d: dict) -> Grid:
    return Grid(int(d["dim"]), tuple(tuple(map(float, b)) for b in d["box"]),
                tuple(int(r) for r in d["resolution"]), tuple(map(float, d.get("shift", [0.0] * d["dim"]))))


def field_to_dict(grid: Grid, u: np.ndarray) -> dict:
    u = np.asarray(u)
    if u.shape != grid.shape:
        raise ValueError("field shape does not match grid")
    out = {"kind": "grid_field", "grid": grid_to_dict(grid), "dtype": "complex" if np.iscomplexobj(u) else "real"}
    flat = u.ravel()
    if np.iscomplexobj(u):
        out["values"] = [[float(z.real), float(z.imag)] for z in flat]
    else:
        out["values"] = [float(x) for x in flat]
    return out


def field_from_dict(d: dict):
    grid = grid_from_dict(d["grid"])
    vals = d["values"]
    if d.get("dtype") == "complex":
        arr = np.array([complex(a, b) for a, b in vals])
    else:
        arr = np.array(vals, dtype=float)
    if arr.size != grid.n_nodes:
        raise ValueError("value count does not match node count")
    return grid, arr.reshape(grid.shape)


def save_field(path, grid: Grid, u: np.ndarray) -> None:
    with open(path, "w") as fh:
        json.dump(field_to_dict(grid, u), fh)


def load_field(path):
    with open(path) as fh:
        return field_from_dict(json.load(fh))
