"""Configuration files and report writers.

Configs are JSON documents (grammar in docs/config.md). Parse and validation
problems raise :class:`ConfigError` carrying the line/column or field path.
"""
from __future__ import annotations

import csv
import io as _io
import json
import os
from dataclasses import dataclass

import numpy as np

from . import pde_core as pc
from .harmonics import default_dictionary, probe_from_manifest
from .nonlinearity import NonlinearitySpec, TensorCoefficients, canonical_tuples
from .reconstruction import VoxelSupport, voxel_to_grid


class ConfigError(ValueError):
    def __init__(self, msg, line=None, col=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}, column {col}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(msg + (f" ({'; '.join(where)})" if where else ""))
        self.line, self.col, self.field = line, col, field


def parse_config(text: str, source: str = "<config>") -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{source}: {e.msg}", e.lineno, e.colno) from None
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be an object", 1, 1)
    return data


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from None
    return parse_config(text, str(path))


def dump_config(cfg: dict) -> str:
    return json.dumps(cfg, indent=2, sort_keys=True) + "\n"


def _get(d: dict, key: str, path: str, kind=None, default=...):
    if key not in d:
        if default is ...:
            raise ConfigError("missing required field", field=f"{path}.{key}".lstrip("."))
        return default
    v = d[key]
    if kind is not None and not isinstance(v, kind):
        raise ConfigError(f"expected {getattr(kind, '__name__', kind)}", field=f"{path}.{key}".lstrip("."))
    return v


def grid_from_config(cfg: dict, path="grid") -> pc.Grid:
    d = _get(cfg, "dim", path, int, 3)
    res = _get(cfg, "resolution", path, (int, list))
    box = _get(cfg, "box", path, list, None)
    try:
        return pc.build_grid(d, res, box)
    except ValueError as e:
        raise ConfigError(str(e), field=path) from None


def _profile(grid: pc.Grid, prof: dict, path: str) -> np.ndarray:
    kind = _get(prof, "kind", path, str)
    X = grid.mesh()
    if kind == "gaussian":
        c = np.asarray(_get(prof, "center", path, list), float)
        w = float(_get(prof, "width", path, (int, float)))
        a = float(_get(prof, "amplitude", path, (int, float), 1.0))
        r2 = sum((X[i] - c[i]) ** 2 for i in range(grid.dim))
        return a * np.exp(-r2 / (2 * w * w))
    if kind == "constant":
        return float(_get(prof, "amplitude", path, (int, float))) * np.ones(grid.shape)
    raise ConfigError(f"unknown profile kind {kind!r}", field=f"{path}.kind")


def spec_from_config(cfg: dict) -> NonlinearitySpec:
    """``{"grid": {...}, "margin": 2, "tensors": [...], "voxel_tensors": [...]}``."""
    grid = grid_from_config(_get(cfg, "grid", "", dict))
    margin = _get(cfg, "margin", "", int, 2)
    data = {}
    for n, t in enumerate(_get(cfg, "tensors", "", list, [])):
        path = f"tensors[{n}]"
        k = _get(t, "k", path, int)
        idx = tuple(sorted(_get(t, "index", path, list)))
        comp = _get(t, "component", path, int)
        if len(idx) != k or not all(0 <= i < grid.dim for i in idx) or not 0 <= comp < grid.dim:
            raise ConfigError("index/component out of range", field=path)
        arr = data.setdefault(k, np.zeros((len(canonical_tuples(grid.dim, k)), grid.dim) + grid.shape))
        arr[canonical_tuples(grid.dim, k).index(idx), comp] += _profile(grid, _get(t, "profile", path, dict), path + ".profile")
    for n, t in enumerate(_get(cfg, "voxel_tensors", "", list, [])):
        path = f"voxel_tensors[{n}]"
        k = _get(t, "k", path, int)
        sup = support_from_config(_get(t, "support", path, dict), path + ".support")
        vals = np.asarray(_get(t, "values", path, list), float)
        shape = (len(canonical_tuples(grid.dim, k)), grid.dim, sup.n_voxels)
        if vals.shape != shape:
            raise ConfigError(f"values must have shape {shape}", field=path + ".values")
        arr = data.setdefault(k, np.zeros((shape[0], grid.dim) + grid.shape))
        arr += voxel_to_grid(sup, vals, grid)
    tensors = {k: TensorCoefficients(grid, k, a, margin=margin) for k, a in data.items()}
    return NonlinearitySpec(grid, tensors)


def support_from_config(cfg: dict, path="support") -> VoxelSupport:
    lo = tuple(map(float, _get(cfg, "lo", path, list)))
    hi = tuple(map(float, _get(cfg, "hi", path, list)))
    if len(lo) != len(hi) or any(h <= l for l, h in zip(lo, hi)):
        raise ConfigError("support bounds must be increasing per axis", field=path)
    return VoxelSupport(lo, hi, _get(cfg, "n", path, int, 3), _get(cfg, "quad", path, int, 6))


def boundary_from_config(grid: pc.Grid, cfg: dict, path="bc") -> np.ndarray:
    """Dirichlet data: ``{"kind": "polynomial", "terms": [[exponents, coeff], ...], "scale": s}``
    or ``{"kind": "probe", "probe": manifest, "scale": s}`` (real part for complex probes)."""
    kind = _get(cfg, "kind", path, str)
    scale = float(_get(cfg, "scale", path, (int, float), 1.0))
    X = grid.mesh()
    if kind == "zero":
        return np.zeros(len(grid.boundary_index))
    if kind == "polynomial":
        u = np.zeros(grid.shape)
        for n, term in enumerate(_get(cfg, "terms", path, list)):
            if not (isinstance(term, list) and len(term) == 2 and len(term[0]) == grid.dim):
                raise ConfigError("terms are [exponent list, coefficient]", field=f"{path}.terms[{n}]")
            e, c = term
            u = u + float(c) * np.prod([X[a] ** int(e[a]) for a in range(grid.dim)], axis=0)
    elif kind == "probe":
        try:
            p = probe_from_manifest(_get(cfg, "probe", path, dict))
        except (KeyError, ValueError) as e:
            raise ConfigError(f"bad probe manifest: {e}", field=f"{path}.probe") from None
        u = np.real(p.value(X))
    else:
        raise ConfigError(f"unknown boundary kind {kind!r}", field=f"{path}.kind")
    return scale * pc.trace(grid, u)


def dictionary_from_config(cfg: dict, d: int, path="dictionary") -> list:
    if "probes" in cfg:
        return [probe_from_manifest(m) for m in cfg["probes"]]
    return default_dictionary(d, seed=_get(cfg, "seed", path, int, 0), poly_degree=_get(cfg, "poly_degree", path, int, 3),
                              n_cgo=_get(cfg, "n_cgo", path, int, 40),
                              freqs=tuple(_get(cfg, "freqs", path, list, [1.0, 2.0, 3.0])))


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (complex, np.complexfloating)):
        return f"{float(v.real)!r}{float(v.imag):+.17g}j"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return str(v)


def csv_text(rows: list, columns: list | None = None) -> str:
    """Deterministic CSV: fixed column order, shortest round-trip float repr, LF endings."""
    if not rows:
        return ""
    columns = columns or list(rows[0].keys())
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in columns])
    return buf.getvalue()


def write_csv(path, rows: list, columns: list | None = None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(rows, columns))


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    return o


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def output_dir(cli_value: str | None, default: str = "qlinv_out") -> str:
    """--out wins; otherwise QLINV_OUT; otherwise ``default``."""
    out = cli_value or os.environ.get("QLINV_OUT") or default
    os.makedirs(out, exist_ok=True)
    return out


@dataclass
class ExperimentConfig:
    """Suite parameters: {suite name: {parameter: value}} plus seed and output directory."""

    suites: dict
    seed: int = 0
    out: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        suites = _get(d, "suites", "", dict, {})
        for name, params in suites.items():
            if not isinstance(params, dict):
                raise ConfigError("suite parameters must be an object", field=f"suites.{name}")
        return cls(suites, _get(d, "seed", "", int, 0), _get(d, "out", "", (str, type(None)), None))

    def to_dict(self) -> dict:
        return {"suites": self.suites, "seed": self.seed, "out": self.out}

    def text(self) -> str:
        return dump_config(self.to_dict())
