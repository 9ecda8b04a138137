"""Command-line entry point: ``qlinv <command> ...``.

Commands: forward, linearize, reconstruct, audit, run_suite. Configuration
errors exit with status 2; failed acceptance checks exit with status 1.
"""
from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import io as qio
from . import pde_core as pc
from .audit import run_audit
from .forward import DtNOracle, dtn_apply, picard_solve
from .linearization import default_eps_set, fit_lambda
from .reconstruction import induction_driver
from .suites import SUITES, run_suite


def cmd_forward(args) -> int:
    spec = qio.spec_from_config(qio.load_config(args.spec))
    f = qio.boundary_from_config(spec.grid, qio.load_config(args.bc), "bc")
    out = qio.output_dir(args.out)
    u, rep = picard_solve(spec, f, tol=args.tol, max_iter=args.max_iter)
    pc.save_field(os.path.join(out, "solution.json"), spec.grid, u)
    report = rep.as_dict()
    report["boundary_flux_l2"] = float(np.linalg.norm(dtn_apply(DtNOracle(spec, tol=args.tol), f)))
    qio.write_json(os.path.join(out, "forward_report.json"), report)
    print(f"converged in {rep.iterations} iterations; contraction {rep.contraction:.4g}; K {rep.K:.4g}")
    return 0


def cmd_linearize(args) -> int:
    spec = qio.spec_from_config(qio.load_config(args.spec))
    grid = spec.grid
    f = qio.boundary_from_config(grid, qio.load_config(args.f), "f")
    w = pc.harmonic_extension(grid, qio.boundary_from_config(grid, qio.load_config(args.w), "w") if args.w else f)
    oracle = DtNOracle(spec, tol=args.tol)
    kappa = oracle.calibrate(f)
    N = max(args.k, spec.N)
    eps = default_eps_set(oracle, f, N, count=args.eps_count)
    fit = fit_lambda(oracle, [w], f, eps)
    out = qio.output_dir(args.out)
    rows = [{"m": m + 1, "coefficient": float(c)} for m, c in enumerate(fit.coefficients[0])]
    qio.write_csv(os.path.join(out, "lambda_coefficients.csv"), rows)
    qio.write_json(os.path.join(out, "linearize_report.json"),
                   {"k": args.k, "c_k": float(fit.c(args.k)[0]), "condition": fit.condition, "kappa": kappa,
                    "eps": fit.eps})
    print(f"c_{args.k} = {fit.c(args.k)[0]!r}  (Vandermonde condition {fit.condition:.3e})")
    return 0


def cmd_reconstruct(args) -> int:
    # every referenced file is read before any solve starts
    cfg1, cfg2 = qio.load_config(args.oracle1), qio.load_config(args.oracle2)
    sup_cfg, dict_cfg = qio.load_config(args.support), qio.load_config(args.dict)
    s1, s2 = qio.spec_from_config(cfg1), qio.spec_from_config(cfg2)
    if s1.grid != s2.grid:
        raise qio.ConfigError("oracle specs must share a grid", field="grid")
    support = qio.support_from_config(sup_cfg)
    probes = qio.dictionary_from_config(dict_cfg, s1.grid.dim)
    pool = qio._get(dict_cfg, "pool", "dictionary", list, list(range(min(10, len(probes)))))
    if not all(isinstance(i, int) and 0 <= i < len(probes) for i in pool):
        raise qio.ConfigError("pool entries must index the dictionary", field="dictionary.pool")
    out = qio.output_dir(args.out)
    grid = s1.grid
    f_ref = pc.trace(grid, sum(grid.mesh()))
    oracles = []
    for s in (s1, s2):
        o = DtNOracle(s, tol=args.tol)
        o.calibrate(f_ref)
        oracles.append(o)
    reports = induction_driver(oracles[0], oracles[1], args.N, support, probes, pool, probes)
    rows = []
    for r in reports:
        rep = r.reports[0]
        rows.append({"stage": r.k, "rank": rep.rank, "null_dim": rep.null_dim, "residual": rep.residual,
                     "diff_norm": float(np.linalg.norm(r.C_diff)), "solves": r.solves})
        qio.write_csv(os.path.join(out, f"spectrum_stage{r.k}.csv"),
                      [{"index": i, "singular_value": float(s)} for i, s in enumerate(rep.singular_values)])
        qio.write_json(os.path.join(out, f"recovered_stage{r.k}.json"),
                       {"support": support.manifest(), "shape": list(r.C_diff.shape), "values": r.C_diff})
    qio.write_csv(os.path.join(out, "stages.csv"), rows)
    for row in rows:
        print(f"stage {row['stage']}: rank {row['rank']}, |dC| = {row['diff_norm']:.4e}")
    return 0


def cmd_audit(args) -> int:
    rep = run_audit(args.target)
    text = rep.text() + "\n"
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text)
    print(text.splitlines()[0])
    return 0 if rep.ok else 1


def emit_report(results: list, out: str, suite: str) -> None:
    """summary.csv and one table per criterion (deterministic); timings go to the text report only."""
    qio.write_csv(os.path.join(out, f"{suite}_summary.csv"),
                  [{"criterion": r.id, "name": r.name, "passed": r.passed,
                    "metrics": ";".join(f"{k}={qio._fmt(v)}" for k, v in sorted(r.metrics.items()))}
                   for r in results])
    lines = [f"suite: {suite}"]
    for r in results:
        slug = r.name.replace(" ", "_").replace("-", "_")
        if r.rows:
            cols = list(dict.fromkeys(k for row in r.rows for k in row))
            qio.write_csv(os.path.join(out, f"criterion{r.id:02d}_{slug}.csv"), r.rows, cols)
        lines.append(r.line())
        lines.append(f"  seconds: {r.seconds:.2f}")
        for k, v in sorted(r.metrics.items()):
            lines.append(f"  {k}: {qio._fmt(v)}")
        if r.text:
            with open(os.path.join(out, f"criterion{r.id:02d}_{slug}.txt"), "w") as fh:
                fh.write(r.text + "\n")
    with open(os.path.join(out, f"{suite}_report.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _suite_params(exp: qio.ExperimentConfig, name: str) -> dict:
    params = exp.suites.get(name, {})
    for key, val in params.items():
        if not (key.isdigit() and int(key) in SUITES[name]):
            raise qio.ConfigError(f"suite {name!r} has no criterion {key!r} (expected one of {SUITES[name]})",
                                  field=f"suites.{name}.{key}")
        if not isinstance(val, dict):
            raise qio.ConfigError("criterion parameters must be an object", field=f"suites.{name}.{key}")
    return params


def _run_one(name, params, seed, out):
    results = run_suite(name, params, seed)
    emit_report(results, out, name)
    return name, [(r.line(), r.passed) for r in results]


def cmd_run_suite(args) -> int:
    exp = qio.ExperimentConfig.from_dict(qio.load_config(args.config)) if args.config else qio.ExperimentConfig({})
    names = list(args.names or []) + list(args.suite or [])
    if not names:
        names = list(exp.suites) or sorted(SUITES)
    for n, name in enumerate(names):
        if name not in SUITES:
            raise qio.ConfigError(f"unknown suite {name!r}; choose from {sorted(SUITES)}", field=f"suite[{n}]")
    for name in exp.suites:
        if name not in SUITES:
            raise qio.ConfigError(f"unknown suite {name!r}", field=f"suites.{name}")
    params = {name: _suite_params(exp, name) for name in names}
    seed = exp.seed if args.seed is None else args.seed
    out = qio.output_dir(args.out or exp.out)
    if args.parallel and len(names) > 1:
        with ProcessPoolExecutor() as pool:
            done = list(pool.map(_run_one, names, [params[n] for n in names], [seed] * len(names),
                                 [out] * len(names)))
    else:
        done = [_run_one(n, params[n], seed, out) for n in names]
    ok = True
    for _, lines in done:
        for line, passed in lines:
            print(line)
            ok &= passed
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qlinv", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("forward", help="solve the forward problem for one boundary datum")
    f.add_argument("--spec", required=True)
    f.add_argument("--bc", required=True)
    f.add_argument("--tol", type=float, default=1e-10)
    f.add_argument("--max-iter", type=int, default=100)
    f.add_argument("--out")
    f.set_defaults(func=cmd_forward)

    lz = sub.add_parser("linearize", help="fit the eps-expansion of a DtN pairing")
    lz.add_argument("--spec", required=True)
    lz.add_argument("--f", required=True)
    lz.add_argument("--w", help="test function boundary config (default: f)")
    lz.add_argument("--k", type=int, default=2)
    lz.add_argument("--eps-count", type=int, default=None)
    lz.add_argument("--tol", type=float, default=1e-12)
    lz.add_argument("--out")
    lz.set_defaults(func=cmd_linearize)

    r = sub.add_parser("reconstruct", help="stagewise recovery of J_k differences")
    r.add_argument("--oracle1", required=True)
    r.add_argument("--oracle2", required=True)
    r.add_argument("--N", type=int, default=2)
    r.add_argument("--support", required=True)
    r.add_argument("--dict", required=True)
    r.add_argument("--tol", type=float, default=1e-13)
    r.add_argument("--out")
    r.set_defaults(func=cmd_reconstruct)

    a = sub.add_parser("audit", help="symbolic coefficient audits")
    a.add_argument("--target", required=True, choices=["magic", "first-order", "qq13"])
    a.add_argument("--report")
    a.set_defaults(func=cmd_audit)

    s = sub.add_parser("run_suite", help="run acceptance suites")
    s.add_argument("names", nargs="*", metavar="SUITE")
    s.add_argument("--suite", action="append")
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.add_argument("--parallel", action="store_true")
    s.set_defaults(func=cmd_run_suite)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except qio.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
