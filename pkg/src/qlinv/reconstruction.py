"""Recovery of first-pair-symmetric 3-tensors from integral identities
int C : grad w_a (x) grad w_b (x) grad w_c = data, and the driver that feeds it
with polarized DtN measurements stage by stage."""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import pde_core as pc
from .forward import DtNOracle, edge_fluxes
from .harmonics import CGO, CoordinateProbe, HarmonicPolynomial, RealPart
from .linearization import cascade_solve, default_eps_set, fit_lambda, multinomial_sources
from .nonlinearity import (NonlinearitySpec, TensorCoefficients, canonical_tuples, edge_vectors,
                           free_components, full_symmetrization)


class PolarizationWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# voxel parameterization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VoxelSupport:
    lo: tuple
    hi: tuple
    n: int = 3
    quad: int = 6

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def n_voxels(self) -> int:
        return self.n ** self.dim

    @property
    def n_unknowns(self) -> int:
        return self.n_voxels * len(free_components(self.dim))

    def edges(self, a: int) -> np.ndarray:
        return np.linspace(self.lo[a], self.hi[a], self.n + 1)

    def voxel_boxes(self) -> list:
        """(lo, hi) per voxel, C-ordered like the voxel axis of fields."""
        out = []
        for idx in itertools.product(range(self.n), repeat=self.dim):
            lo = tuple(self.edges(a)[i] for a, i in enumerate(idx))
            hi = tuple(self.edges(a)[i + 1] for a, i in enumerate(idx))
            out.append((lo, hi))
        return out

    def quadrature(self):
        """Gauss-Legendre points (d, V, Q) and weights (V, Q)."""
        t, w = np.polynomial.legendre.leggauss(self.quad)
        pts, wts = [], []
        for lo, hi in self.voxel_boxes():
            axes = [0.5 * (h + l) + 0.5 * (h - l) * t for l, h in zip(lo, hi)]
            ws = [0.5 * (h - l) * w for l, h in zip(lo, hi)]
            P = np.array(np.meshgrid(*axes, indexing="ij")).reshape(self.dim, -1)
            W = np.prod(np.array(np.meshgrid(*ws, indexing="ij")).reshape(self.dim, -1), axis=0)
            pts.append(P)
            wts.append(W)
        return np.stack(pts, axis=1), np.array(wts)

    def manifest(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi), "n": self.n, "quad": self.quad}


def params_to_tensor(x: np.ndarray, d: int) -> np.ndarray:
    """Free parameters (V * n_free,) -> C of shape (d, d, d, V)."""
    comps = free_components(d)
    X = np.asarray(x).reshape(-1, len(comps))
    C = np.zeros((d, d, d, X.shape[0]), dtype=X.dtype)
    for n, (j, k, l) in enumerate(comps):
        C[j, k, l] = X[:, n]
        C[k, j, l] = X[:, n]
    return C


def tensor_to_params(C: np.ndarray) -> np.ndarray:
    d = C.shape[0]
    return np.stack([C[j, k, l] for j, k, l in free_components(d)], axis=-1).reshape(-1)


def voxel_to_grid(support: VoxelSupport, values: np.ndarray, grid: pc.Grid) -> np.ndarray:
    """Nodal samples of a voxelwise-constant field (..., V); nodes on voxel faces average
    the adjacent voxels, which matches trapezoid quadrature of the piecewise field."""
    lead = values.shape[:-1]
    V = values.reshape(-1, *([support.n] * support.dim))
    out = np.zeros((V.shape[0],) + grid.shape)
    membership = []
    for a in range(grid.dim):
        x = grid.coords[a]
        e = support.edges(a)
        tol = 1e-9 * (e[-1] - e[0])
        M = np.zeros((support.n, len(x)))
        for i in range(support.n):
            inside = (x > e[i] + tol) & (x < e[i + 1] - tol)
            face = (np.abs(x - e[i]) <= tol) | (np.abs(x - e[i + 1]) <= tol)
            M[i] = inside + 0.5 * face
        membership.append(M)
    letters = "abcdefgh"[: grid.dim]
    expr = "z" + letters + "," + ",".join(f"{c}{c.upper()}" for c in letters) + "->z" + "".join(c.upper() for c in letters)
    out = np.einsum(expr, V, *membership)
    return out.reshape(lead + grid.shape)


def tensor_coefficients_from_voxels(support: VoxelSupport, C: np.ndarray, grid: pc.Grid, order: int = 2,
                                    slot: int | None = None, margin: int = 2) -> TensorCoefficients:
    """J_2 with J_{2;jk}^l = C_jkl, or for ``order`` 3 the J_3 assembled from per-slot
    fields C^(m) (dict m -> C) with J_{3;jkm}^l = C^(m)_jkl, averaging duplicates."""
    d = grid.dim
    if order == 2:
        data = np.zeros((len(canonical_tuples(d, 2)), d) + grid.shape)
        for t, (j, k) in enumerate(canonical_tuples(d, 2)):
            data[t] = voxel_to_grid(support, C[j, k], grid)
        return TensorCoefficients(grid, 2, data, margin=margin)
    if order == 3:
        data = np.zeros((len(canonical_tuples(d, 3)), d) + grid.shape)
        for t, tup in enumerate(canonical_tuples(d, 3)):
            acc, cnt = 0.0, 0
            for m in set(tup):
                rest = list(tup)
                rest.remove(m)
                if m in C:
                    acc = acc + C[m][rest[0], rest[1]]
                    cnt += 1
            if cnt:
                data[t] = voxel_to_grid(support, acc / cnt, grid)
        return TensorCoefficients(grid, 3, data, margin=margin)
    raise ValueError("order must be 2 or 3")


# ---------------------------------------------------------------------------
# assembly and inversion
# ---------------------------------------------------------------------------


@dataclass
class ConstraintSystem:
    A: np.ndarray
    triples: list
    support: VoxelSupport
    rhs: np.ndarray | None = None
    rcond: float = 1e-10

    @property
    def shape(self):
        return self.A.shape


def _pair_products(ga, gb, d):
    """(n_free_pairs, V, Q) of grad w_a (x) grad w_b symmetrized onto j <= k."""
    out = []
    for j, k in itertools.combinations_with_replacement(range(d), 2):
        out.append(ga[j] * gb[k] + ga[k] * gb[j] if j != k else ga[j] * gb[j])
    return np.array(out)


def assemble(support: VoxelSupport, probes: list, triples: list) -> ConstraintSystem:
    """One row per (a, b, c): the voxel integrals of grad w_a (x) grad w_b (x) grad w_c
    against each free component of C (Gauss-Legendre per voxel)."""
    d = support.dim
    pts, wts = support.quadrature()
    cache = {}

    def grad(i):
        if i not in cache:
            cache[i] = np.asarray(probes[i].gradient(pts))
        return cache[i]

    rows = np.empty((len(triples), support.n_unknowns), dtype=complex)
    order = sorted(range(len(triples)), key=lambda r: (triples[r][0], triples[r][1]))
    by_pair = {}
    for r in order:
        by_pair.setdefault(tuple(triples[r][:2]), []).append(r)
    for (a, b), rs in by_pair.items():
        P = _pair_products(grad(a), grad(b), d)  # (p, V, Q)
        G = np.array([grad(triples[r][2]) for r in rs])  # (R, d, V, Q)
        block = np.einsum("vpq,vqx->vpx", np.moveaxis(P * wts, 1, 0),
                          np.moveaxis(G, 2, 0).reshape(G.shape[2], len(rs) * d, -1).transpose(0, 2, 1))
        block = block.reshape(G.shape[2], P.shape[0], len(rs), d).transpose(2, 0, 1, 3)
        rows[rs] = block.reshape(len(rs), -1)
    if not np.any(rows.imag):
        rows = rows.real
    return ConstraintSystem(rows, list(triples), support)


def _exponential_terms(probe, d: int) -> list:
    """grad w as a list of (vector, wavevector) with grad w = sum v exp(i k . x), for probes
    whose gradients are constant or exponential; None otherwise."""
    if isinstance(probe, CoordinateProbe):
        v = np.zeros(d, complex)
        v[probe.m] = 1.0
        return [(v, np.zeros(d, complex))]
    if isinstance(probe, HarmonicPolynomial):
        if probe.degree != 1:
            return None
        return [(probe.gradient(np.zeros((d, 1)))[:, 0].astype(complex), np.zeros(d, complex))]
    if isinstance(probe, CGO):
        return [(1j * probe.zeta, probe.zeta.astype(complex))]
    if isinstance(probe, RealPart):
        z = probe.base.zeta
        a, b = 1j * z / 2, np.conj(1j * z) / 2
        if probe.part == "im":
            a, b = a / 1j, -b / 1j
        return [(a, z.astype(complex)), (b, -np.conj(z))]
    return None


def assemble_exact(support: VoxelSupport, probes: list, triples: list, chunk: int = 4000) -> ConstraintSystem:
    """Same rows as :func:`assemble`, from closed-form box integrals of exponentials.

    Only probes with constant or exponential gradients are accepted."""
    d = support.dim
    P = len(probes)
    Vs = np.zeros((P, 2, d), complex)
    Ks = np.zeros((P, 2, d), complex)
    for i, p in enumerate(probes):
        t = _exponential_terms(p, d)
        if t is None:
            raise ValueError(f"probe {i} has no exponential form")
        for n, (v, k) in enumerate(t):
            Vs[i, n], Ks[i, n] = v, k
    boxes = support.voxel_boxes()
    lo = np.array([b[0] for b in boxes])  # (V, d)
    hi = np.array([b[1] for b in boxes])
    pairs = list(itertools.combinations_with_replacement(range(d), 2))
    J = np.array([j for j, _ in pairs])
    K = np.array([k for _, k in pairs])
    T = np.asarray(triples, dtype=int).reshape(-1, 3)
    out = np.zeros((len(T), support.n_voxels, len(pairs), d), complex)
    for s0 in range(0, len(T), chunk):
        a, b, c = T[s0:s0 + chunk].T
        acc = out[s0:s0 + chunk]
        for ta, tb, tc in itertools.product(range(2), repeat=3):
            va, vb, vc = Vs[a, ta], Vs[b, tb], Vs[c, tc]
            if not (np.any(va) and np.any(vb) and np.any(vc)):
                continue
            sym = va[:, J] * vb[:, K] + np.where(J != K, va[:, K] * vb[:, J], 0)
            vol = _box_integrals(Ks[a, ta] + Ks[b, tb] + Ks[c, tc], lo, hi)  # (R, V)
            acc += vol[:, :, None, None] * sym[:, None, :, None] * vc[:, None, None, :]
    rows = out.reshape(len(T), -1)
    if np.allclose(rows.imag, 0, atol=1e-13 * max(np.abs(rows).max(), 1e-300)):
        rows = rows.real
    return ConstraintSystem(rows, list(triples), support)


def _box_integrals(k: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Closed-form integrals of exp(i k_r . x) over boxes: (R, d) x (V, d) -> (R, V)."""
    k = k[:, None, :]
    small = np.abs(k) < 1e-12
    ks = np.where(small, 1.0, k)
    f = np.where(small, hi - lo, (np.exp(1j * ks * hi) - np.exp(1j * ks * lo)) / (1j * ks))
    return np.prod(f, axis=-1)


def all_triples(n_probes: int, pair_pool=None, tests=None) -> list:
    pool = range(n_probes) if pair_pool is None else pair_pool
    tests = range(n_probes) if tests is None else tests
    return [(a, b, c) for a, b in itertools.combinations_with_replacement(pool, 2) for c in tests]


@dataclass
class ReconstructionReport:
    C: np.ndarray
    rank: int
    null_dim: int
    singular_values: np.ndarray
    residual: float
    relative_error: float | None = None
    log: list = field(default_factory=list)

    @property
    def full_rank(self) -> bool:
        return self.null_dim == 0


def recover(system: ConstraintSystem, rhs=None, rcond: float | None = None, truth=None) -> ReconstructionReport:
    """Minimum-norm truncated-SVD solve; singular values below rcond * s_max are dropped."""
    rhs = system.rhs if rhs is None else np.asarray(rhs)
    rcond = system.rcond if rcond is None else rcond
    A = system.A
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    keep = s > rcond * s[0] if s.size else np.zeros(0, bool)
    rank = int(keep.sum())
    null_dim = A.shape[1] - rank
    log = []
    if null_dim:
        log.append(f"rank deficient: null space dimension {null_dim}")
        warnings.warn(f"constraint system rank deficient (null space dimension {null_dim})")
    R = np.asarray(rhs)
    multi = R.ndim == 2
    R2 = R if multi else R[:, None]
    coef = (U[:, keep].conj().T @ R2) / s[keep][:, None]
    x = Vt[keep].conj().T @ coef
    res = float(np.linalg.norm(A @ x - R2) / max(np.linalg.norm(R2), 1e-300))
    d = system.support.dim
    C = np.stack([params_to_tensor(x[:, i], d) for i in range(x.shape[1])], axis=-1)
    if not multi:
        C = C[..., 0]
    if np.isrealobj(A) and np.isrealobj(R):
        C = C.real
    err = None
    if truth is not None:
        err = float(np.linalg.norm(C - truth) / np.linalg.norm(truth)) if np.any(truth) else float(np.linalg.norm(C))
    return ReconstructionReport(C, rank, null_dim, s, res, err, log)


# ---------------------------------------------------------------------------
# polarization
# ---------------------------------------------------------------------------


def polarize(Q, args: list, combine=None, warn_ratio: float = 1e6):
    """Symmetric k-linear form from the degree-k form Q by signed subset sums:
    B(a_1..a_k) = (1/k!) sum_{T nonempty} (-1)^{k-|T|} Q(sum_{j in T} a_j)."""
    k = len(args)
    combine = (lambda items: sum(items)) if combine is None else combine
    total, mag = 0, 0
    for r in range(1, k + 1):
        for T in itertools.combinations(range(k), r):
            val = np.asarray(Q(combine([args[j] for j in T])))
            term = (-1) ** (k - r) * val
            total = total + term
            mag = mag + np.abs(val)
    out = total / math.factorial(k)
    scale = np.max(np.abs(out)) if np.size(out) else 0.0
    if np.max(mag) > warn_ratio * max(scale, 1e-300) * math.factorial(k) and np.max(mag) > 0:
        warnings.warn("polarization cancellation exceeds the warning ratio", PolarizationWarning)
    return out


# ---------------------------------------------------------------------------
# DtN data and the stagewise driver
# ---------------------------------------------------------------------------


class MeasurementData:
    """Fitted eps-expansion coefficients of <w_c, Lambda(eps f)> for f built from
    sums of probe traces; results cached by the multiset of probe ids."""

    def __init__(self, oracle: DtNOracle, probes: list, tests: list, eps_set=None, N: int = 2):
        self.oracle, self.probes, self.tests, self.N = oracle, probes, tests, N
        self.eps = None if eps_set is None else np.asarray(eps_set, dtype=float)
        grid = oracle.grid
        X = grid.mesh()
        self._vals = {}
        self._X = X
        self.W = [np.asarray(t.value(X)) for t in tests]
        self.cache = {}
        self.solves = 0

    def probe_values(self, i):
        if i not in self._vals:
            self._vals[i] = np.asarray(self.probes[i].value(self._X))
        return self._vals[i]

    def trace_of(self, key) -> np.ndarray:
        return pc.trace(self.oracle.grid, sum(self.probe_values(i) for i in key))

    def coefficients(self, key) -> np.ndarray:
        key = tuple(sorted(key))
        if key not in self.cache:
            f = self.trace_of(key)
            eps = default_eps_set(self.oracle, f, self.N) if self.eps is None else self.eps
            fit = fit_lambda(self.oracle, self.W, f, eps)
            self.solves += len(eps)
            self.cache[key] = fit.coefficients
        return self.cache[key]

    def correction(self, key, lower: dict, k: int) -> np.ndarray:
        """<w_c, N_k> for f = trace(key) built from the given lower-order tensors."""
        grid = self.oracle.grid
        if not lower or not any(np.any(J.data) for J in lower.values()):
            return np.zeros(len(self.W))
        spec = NonlinearitySpec(grid, dict(lower))
        cas = cascade_solve(spec, self.trace_of(key), N=k - 1)
        out = np.zeros(len(self.W))
        for a in range(grid.dim):
            vecs = {j + 1: edge_vectors(grid, cas.u[j], a) for j in range(k - 1)}
            Nk = multinomial_sources(spec.tensors, vecs, k, axis=a)[a] * pc.edge_weights(grid, a)
            for n, w in enumerate(self.W):
                out[n] += np.sum(np.diff(w, axis=a) / grid.spacing[a] * Nk)
        return out


@dataclass
class StageReport:
    k: int
    reports: list
    C_diff: object
    truth: object = None
    relative_error: float | None = None
    solves: int = 0


def _stage_rows(tests_offset, pool, n_tests):
    return [(a, b, tests_offset + c) for a, b in itertools.combinations_with_replacement(pool, 2)
               for c in range(n_tests)]


def stage_data(data: MeasurementData, k: int, pool: list, lower: dict, coord_ids: dict) -> np.ndarray:
    """Right-hand sides for the stage-k 3-tensor problems, shape (n_rows, n_sub).

    For k = 2 one subproblem; for k = 3 one per slot-filling coordinate m."""
    cache = {}

    def Q(key):
        key = tuple(sorted(key))
        if key not in cache:
            cache[key] = data.coefficients(key)[:, k - 1] - data.correction(key, lower, k)
        return cache[key]

    combine = lambda items: tuple(items)  # noqa: E731
    cols = []
    subs = [None] if k == 2 else sorted(coord_ids)
    for m in subs:
        rhs = []
        for a, b in itertools.combinations_with_replacement(pool, 2):
            args = [a, b] if k == 2 else [a, b, coord_ids[m]]
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", PolarizationWarning)
                rhs.append(polarize(Q, args, combine=combine))
        cols.append(np.concatenate(rhs))
    return np.stack(cols, axis=1)


def induction_driver(oracle1: DtNOracle, oracle2: DtNOracle, N: int, support: VoxelSupport, probes: list,
                     pool: list, tests: list, eps_set=None, truth: dict | None = None, margin: int = 2,
                     rcond: float = 1e-10) -> list:
    """Recover J_k^(1) - J_k^(2) for k = 2..N.

    Each oracle is inverted against the linear medium with the same constraint
    matrix; the stage-k data of each oracle are corrected by <w, N_k> built from
    that oracle's recovered lower-order tensors.
    """
    if oracle1.grid != oracle2.grid:
        raise ValueError("oracles must share a grid")
    grid = oracle1.grid
    d = grid.dim
    coord_ids = {}
    probes = list(probes)
    for m in range(d):
        coord_ids[m] = len(probes)
        probes.append(CoordinateProbe(m, d))
    n_pool = len(probes)
    all_probes = probes + list(tests)
    triples = _stage_rows(n_pool, pool, len(tests))
    system = assemble(support, all_probes, triples)
    system.rcond = rcond
    datas = [MeasurementData(o, probes, tests, eps_set, N) for o in (oracle1, oracle2)]
    lowers = [{}, {}]
    out = []
    for k in range(2, N + 1):
        rhs = [stage_data(D, k, pool, low, coord_ids) for D, low in zip(datas, lowers)]
        R = np.concatenate(rhs, axis=1)
        rep = recover(system, R)
        nsub = rhs[0].shape[1]
        Cs = [rep.C[..., :nsub], rep.C[..., nsub:]]
        diff = Cs[0] - Cs[1]
        if k == 2:
            diff = diff[..., 0]
        for i in range(2):
            if k == 2:
                lowers[i][2] = tensor_coefficients_from_voxels(support, Cs[i][..., 0], grid, 2, margin=margin)
            else:
                per_m = {m: Cs[i][..., n] for n, m in enumerate(sorted(coord_ids))}
                lowers[i][k] = tensor_coefficients_from_voxels(support, per_m, grid, k, margin=margin)
        t = None if truth is None else truth.get(k)
        err = None
        if t is not None:
            scale = np.linalg.norm(t)
            err = float(np.linalg.norm(diff - t) / scale) if scale > 0 else float(np.linalg.norm(diff))
        out.append(StageReport(k, [rep], diff, t, err, sum(D.solves for D in datas)))
    return out


# ---------------------------------------------------------------------------
# frame-probe identities
# ---------------------------------------------------------------------------


def _contract(C, a, b, c):
    return np.einsum("jkl...,j,k,l->...", C, a, b, c)


def _component_rows(d: int, vecs) -> np.ndarray:
    """Row of the linear functional C -> C : a (x) b (x) c in free coordinates."""
    a, b, c = vecs
    comps = free_components(d)
    row = np.zeros(len(comps), dtype=np.result_type(a, b, c, float))
    for n, (j, k, l) in enumerate(comps):
        row[n] = (a[j] * b[k] + a[k] * b[j]) * c[l] if j != k else a[j] * b[j] * c[l]
    return row


def identity_family(d: int = 3, frames=None) -> dict:
    """Linear functionals whose joint vanishing is claimed to force C = 0.

    Each entry maps a name to a list of (a, b, c) vector triples; ``frames``
    are orthonormal bases (rows) used for the frame-dependent identities.
    """
    I = np.eye(d)
    frames = [I[list(p)] for p in itertools.permutations(range(d))] if frames is None else frames
    fam = {"three-two": [], "im2": [], "re2": [], "re-im": []}
    for F in frames:
        e0, e1, e2 = F[0], F[1], F[2]
        al = e0 + 1j * e1
        fam["three-two"] += [(e2, al, al), (al, e2, al), (al, al, e2)]
        fam["im2"].append((e0, e1, e2))
        fam["re2"].append(((e0, e0, e1), (e2, e2, e1)))
        fam["re-im"].append((e2, e2, e0))
    return fam


def constraint_matrix(d: int = 3, frames=None, include_S=True) -> np.ndarray:
    """Real constraint matrix (rows x free components) of the identity family."""
    rows = []
    for name, items in identity_family(d, frames).items():
        for it in items:
            if name == "re2":
                r = _component_rows(d, it[0]) - _component_rows(d, it[1])
            else:
                r = _component_rows(d, it)
            rows += [r.real, r.imag] if np.iscomplexobj(r) else [r]
    if include_S:
        comps = free_components(d)
        for t in itertools.combinations_with_replacement(range(d), 3):
            r = np.zeros(len(comps))
            for p in set(itertools.permutations(t)):
                j, k, l = p
                key = (min(j, k), max(j, k), l)
                r[comps.index(key)] += 1.0
            rows.append(r)
    M = np.array(rows)
    return M[np.any(np.abs(M) > 1e-15, axis=1)]


def exact_rank(M: np.ndarray) -> int:
    """Rank over Q of a matrix with (near) rational entries, via sympy."""
    import sympy as sp
    R = sp.Matrix([[sp.nsimplify(float(x), rational=True, tolerance=1e-12) for x in row] for row in M])
    return R.rank()


def random_frames(rng: np.random.Generator, count: int, d: int = 3) -> list:
    out = []
    for _ in range(count):
        Q, R = np.linalg.qr(rng.standard_normal((d, d)))
        out.append((Q * np.sign(np.diag(R))).T)
    return out


@dataclass
class FrameReport:
    exact_rank: int
    n_free: int
    numeric_rank_random: int
    family_values: dict
    s_structure_error: float
    null_vector_rank: int

    @property
    def forces_zero(self) -> bool:
        return self.exact_rank == self.n_free and self.numeric_rank_random == self.n_free


def s_structure_tensor(c: np.ndarray) -> np.ndarray:
    """S_jkl = (c_j delta_kl + c_k delta_jl + c_l delta_jk) / 3."""
    d = len(c)
    I = np.eye(d)
    return (np.einsum("j,kl->jkl", c, I) + np.einsum("k,jl->jkl", c, I) + np.einsum("l,jk->jkl", c, I)) / 3


def null_vectors(rng: np.random.Generator, count: int, d: int = 3) -> np.ndarray:
    """Random beta in C^d with beta . beta = 0 (beta = u + i v, u ⟂ v, |u| = |v|)."""
    out = []
    for F in random_frames(rng, count, d):
        s = rng.uniform(0.5, 2.0)
        out.append(s * (F[0] + 1j * F[1]))
    return np.array(out)


def symmetric_null_rank(rng: np.random.Generator, d: int = 3, samples: int = 40) -> int:
    """Rank of S -> S : beta^3 over null beta on fully symmetric S; the kernel should be the
    d-dimensional family (c . beta)(beta . beta)."""
    tuples = list(itertools.combinations_with_replacement(range(d), 3))
    rows = []
    for beta in null_vectors(rng, samples, d):
        r = np.array([len(set(itertools.permutations(t))) * np.prod(beta[list(t)]) for t in tuples])
        rows += [r.real, r.imag]
    return int(np.linalg.matrix_rank(np.array(rows), tol=1e-9))


def frame_probe_checks(C: np.ndarray, seed: int = 0, n_frames: int = 12) -> FrameReport:
    """Evaluate the identity family on C and check that it determines C.

    The exact rank uses the coordinate frames (all axis relabelings); a numeric
    rank over random orthonormal frames is reported alongside.
    """
    C = np.asarray(C)
    d = C.shape[0]
    rng = np.random.default_rng(seed)
    M = constraint_matrix(d)
    Mr = constraint_matrix(d, random_frames(rng, n_frames, d))
    values = {}
    for name, items in identity_family(d).items():
        if name == "re2":
            vals = [_contract(C, *p) - _contract(C, *q) for p, q in items]
        else:
            vals = [_contract(C, *it) for it in items]
        values[name] = float(np.max(np.abs(vals)))
    values["S"] = float(np.max(np.abs(full_symmetrization(C))))
    c = rng.standard_normal(d)
    S = s_structure_tensor(c)
    betas = null_vectors(rng, 20, d) + rng.standard_normal((20, d))
    err = max(abs(_contract(S, b, b, b) - (c @ b) * (b @ b)) for b in betas)
    return FrameReport(exact_rank(M), len(free_components(d)), int(np.linalg.matrix_rank(Mr, tol=1e-9)),
                       values, float(err), symmetric_null_rank(rng, d))
