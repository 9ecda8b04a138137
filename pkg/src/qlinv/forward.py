"""Picard solver for div J(x, u, grad u) = 0 with Dirichlet data, and the DtN oracle."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import pde_core as pc
from .nonlinearity import FluxModel, edge_midpoints, edge_vectors


class Diverged(RuntimeError):
    pass


class MaxIter(RuntimeError):
    pass


class RadiusError(ValueError):
    pass


@dataclass
class SolverReport:
    iterations: int = 0
    update_norms: list = field(default_factory=list)
    contraction: float = 0.0
    K: float = 0.0
    converged: bool = False
    residual: float = 0.0

    def as_dict(self) -> dict:
        return {"iterations": self.iterations, "update_norms": list(map(float, self.update_norms)),
                "contraction": float(self.contraction), "K": float(self.K),
                "converged": bool(self.converged), "residual": float(self.residual)}


def boundary_norm(grid: pc.Grid, f) -> float:
    """Size of Dirichlet data: H2-surrogate norm of its harmonic extension."""
    return pc.h2_norm(grid, pc.harmonic_extension(grid, f))


def edge_fluxes(flux: FluxModel, grid: pc.Grid, v: np.ndarray, linear=True) -> list:
    """Per axis, the axis component of J(x, v, grad v) (or of J - p) on edges."""
    out = []
    for a in range(grid.dim):
        pe = edge_vectors(grid, v, a)
        eshape = pe.shape[1:]
        pf = pe.reshape(grid.dim, -1).T
        se = pc.edge_average(grid, v, a).reshape(-1)
        xe = edge_midpoints(grid, a) if getattr(flux, "remainder", None) is not None else None
        ex = flux.excess_edge(a, xe, se, pf).reshape(eshape)
        out.append(ex + pe[a] if linear else ex)
    return out


def _fit_contraction(norms) -> float:
    vals = [n for n in norms if n > 0]
    if len(vals) < 2:
        return 0.0
    tail = vals[1:] if len(vals) >= 3 else vals
    if len(tail) < 2:
        return float(tail[-1] / vals[0])
    slope = np.polyfit(np.arange(len(tail)), np.log(tail), 1)[0]
    return float(np.exp(slope))


def picard_solve(flux: FluxModel, f, tol: float = 1e-10, max_iter: int = 100, v0=None,
                 base=None) -> tuple[np.ndarray, SolverReport]:
    """Fixed point of v -> u_f - G0(div(J(grad v) - grad v)).

    ``base`` may pass a precomputed harmonic extension of ``f``.
    """
    grid = flux.grid
    uf = pc.harmonic_extension(grid, f) if base is None else base
    rep = SolverReport()
    v = uf.copy() if v0 is None else np.array(v0, dtype=float)
    if flux.is_linear():
        rep.update_norms.append(pc.h1_norm(grid, v - uf))
        rep.iterations, rep.converged = 1, True
        rep.K = _stability(grid, uf, uf)
        return uf, rep
    growth = 0
    for it in range(1, max_iter + 1):
        div = pc.edge_divergence(grid, edge_fluxes(flux, grid, v, linear=False))
        nv = uf - pc.solve_poisson_dirichlet(grid, div, None)
        upd = pc.h1_norm(grid, nv - v)
        if not np.isfinite(upd):
            raise Diverged(f"non-finite update at iteration {it}")
        if rep.update_norms and upd > rep.update_norms[-1]:
            growth += 1
        else:
            growth = 0
        rep.update_norms.append(upd)
        v = nv
        if growth >= 3:
            raise Diverged(f"update norms grew for 3 consecutive iterations (last {upd:.3e})")
        if upd <= tol:
            rep.iterations, rep.converged = it, True
            break
    else:
        rep.iterations = max_iter
        raise MaxIter(f"no convergence in {max_iter} iterations (last update {rep.update_norms[-1]:.3e})")
    rep.contraction = _fit_contraction(rep.update_norms)
    div = pc.edge_divergence(grid, edge_fluxes(flux, grid, v, linear=False))
    rep.residual = pc.h1_norm(grid, uf - pc.solve_poisson_dirichlet(grid, div, None) - v)
    rep.K = _stability(grid, v, uf)
    return v, rep


def _stability(grid, u, uf) -> float:
    nf = pc.h2_norm(grid, uf)
    return pc.h2_norm(grid, u) / nf if nf > 0 else 0.0


@dataclass
class DtNOracle:
    """Simulated boundary measurements for a flux model on its grid."""

    flux: FluxModel
    kappa: float = np.inf
    mode: str = "pairing"
    tol: float = 1e-11
    max_iter: int = 200

    @property
    def grid(self) -> pc.Grid:
        return self.flux.grid

    def check(self, f) -> float:
        n = boundary_norm(self.grid, f)
        if n >= self.kappa:
            raise RadiusError(f"data norm {n:.3e} exceeds smallness radius {self.kappa:.3e}")
        return n

    def solve(self, f, base=None):
        if self.kappa < np.inf:
            self.check(f)
        return picard_solve(self.flux, f, tol=self.tol, max_iter=self.max_iter, base=base)

    def calibrate(self, f, lo=1e-4, hi=1e3, steps=30, max_iter=60) -> float:
        """Bisection in log-scale for the largest multiple of ``f`` that still converges;
        sets and returns kappa as the norm at that multiple."""
        base = pc.harmonic_extension(self.grid, f)
        n0 = pc.h2_norm(self.grid, base)

        def ok(s):
            try:
                with np.errstate(all="ignore"):
                        picard_solve(self.flux, s * pc.trace(self.grid, base), tol=1e-9, max_iter=max_iter,
                                 base=s * base)
                return True
            except (Diverged, MaxIter, FloatingPointError, pc.SolverError):
                return False

        if not ok(lo):
            raise RadiusError("even the smallest trial amplitude fails to converge")
        if ok(hi):
            self.kappa = hi * n0
            return self.kappa
        for _ in range(steps):
            mid = np.sqrt(lo * hi)
            lo, hi = (mid, hi) if ok(mid) else (lo, mid)
        self.kappa = lo * n0
        return self.kappa


def weak_pairing(grid: pc.Grid, flux: FluxModel, w: np.ndarray, u: np.ndarray) -> float:
    """sum over edges of (edge weight) * D_a w * J_a(grad u): the volume form of <w, Lambda f>."""
    J = edge_fluxes(flux, grid, u, linear=True)
    total = 0.0
    for a, Dw in enumerate(pc.edge_gradient(grid, w)):
        total += np.sum(pc.edge_weights(grid, a) * Dw * J[a])
    return total


def dtn_pair(oracle: DtNOracle, w: np.ndarray, f) -> float:
    if not np.any(f):
        return 0.0
    u, _ = oracle.solve(f)
    return weak_pairing(oracle.grid, oracle.flux, w, u)


def dtn_pair_many(oracle: DtNOracle, ws: list, f, base=None) -> np.ndarray:
    """Pairings of several test functions against one solve."""
    grid = oracle.grid
    if not np.any(f):
        return np.zeros(len(ws))
    u, _ = oracle.solve(f, base=base)
    J = edge_fluxes(oracle.flux, grid, u, linear=True)
    WJ = [pc.edge_weights(grid, a) * J[a] for a in range(grid.dim)]
    out = np.empty(len(ws))
    for n, w in enumerate(ws):
        out[n] = sum(np.sum(Dw * WJ[a]) for a, Dw in enumerate(pc.edge_gradient(grid, w)))
    return out


def dtn_apply(oracle: DtNOracle, f) -> np.ndarray:
    """Normal flux at boundary nodes from one-sided differences plus the nonlinear normal flux.

    At nodes shared by several faces the face values are averaged with their
    surface weights, so ``boundary_pairing`` reproduces the face-by-face sum.
    """
    grid = oracle.grid
    if not np.any(f):
        return np.zeros(len(grid.boundary_index))
    u, _ = oracle.solve(f)
    J = edge_fluxes(oracle.flux, grid, u, linear=True)
    num = np.zeros(grid.n_nodes)
    den = np.zeros(grid.n_nodes)
    for a, side, nodes, wf, sign in pc.boundary_faces(grid):
        sl = [slice(None)] * grid.dim
        sl[a] = -1 if side > 0 else 0
        val = sign * J[a][tuple(sl)].ravel()
        num[nodes] += wf * val
        den[nodes] += wf
    return (num / np.where(den > 0, den, 1.0))[grid.boundary_index]
