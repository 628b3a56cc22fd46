"""Command line driver.

Exit codes: 0 success, 2 invalid configuration or failed required condition,
1 any other runtime error.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import config as config_mod
from .errors import ConfigError, SparseGpcError

log = logging.getLogger("sparsegpc")

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2


def _load(args):
    cfg = config_mod.load(args.config) if args.config else config_mod.loads(config_mod.DEFAULT_TOML)
    if args.seed is not None:
        cfg.study.seed = args.seed
    if args.cache_dir:
        cfg.output.cache_dir = args.cache_dir
    return cfg


def _out_path(args, cfg, name):
    if args.out:
        return Path(args.out)
    return Path(cfg.output.dir) / name


def cmd_validate(args) -> int:
    from .study import validate

    cfg = _load(args)
    conds = validate(cfg)
    for c in conds:
        tag = "PASS" if c.passed else ("FAIL" if c.required else "FAIL (advisory)")
        print(f"{tag:16s} {c.name:16s} value={c.value:.6g} threshold={c.threshold:.6g}  {c.note}")
    ok = all(c.passed for c in conds if c.required)
    print("config hash", cfg.digest())
    return EXIT_OK if ok else EXIT_INVALID


def cmd_oracle(args) -> int:
    from .gpc import CoefficientCache, oracle_expansion, summability_profile
    from .multiindex import MultiIndex, build_lambda

    cfg = _load(args)
    prob = cfg.problem_obj()
    w = cfg.weight_family()
    level = cfg.oracle.level
    idx = {MultiIndex()}
    for xi in cfg.xi_ladder():
        idx |= {s for s in build_lambda(w, xi, prob.d).indices if s.absinf < level}
    cache = CoefficientCache(cfg.output.cache_dir)
    exp = oracle_expansion(prob, sorted(idx, key=MultiIndex.sort_key), level,
                           node_cap=cfg.oracle.node_cap, cache=cache)
    norms = sorted(exp.norms().items(), key=lambda kv: -kv[1])
    print(f"{len(norms)} coefficients at level {level}; cache {cache.content_hash()}")
    for s, v in norms[:10]:
        print(f"  {s.to_line() or '0':20s} {v:.6e}")
    try:
        print(f"p_hat = {summability_profile(exp).p_hat:.4g}")
    except (ValueError, SparseGpcError) as exc:
        print(f"p_hat unavailable: {exc}")
    return EXIT_OK


def _run(args, methods, name) -> int:
    from .study import run_study, write_results

    cfg = _load(args)
    res = run_study(cfg, threads=args.threads, methods=methods, log=log.info)
    for r in res.rows:
        print(f"{r['method']:9s} ladder={r['ladder']:<10g} n={r['n']:<8d} m={r['m']:<6d} "
              f"error={r['error']:.4e} se={r['stderr']:.2e}")
    for k, v in res.slopes.items():
        print(f"slope {k:17s} {'undefined' if math.isnan(v) else format(v, '.4f')}")
    csv_path, json_path = write_results(res, _out_path(args, cfg, name))
    print(f"wrote {csv_path} and {json_path}")
    if getattr(args, "export_grid", None):
        from .sparsegrid import build_operator

        op = build_operator(cfg.weight_family(), cfg.xi_ladder()[-1], cfg.problem.d, cfg.spec)
        Path(args.export_grid).write_text("\n".join(op.export_lines()) + "\n")
    if getattr(args, "export_design", None):
        from .lsq import design

        des = design(cfg.problem_obj(), cfg.weight_family(), cfg.study.n_ladder[-1],
                     cfg.study.rule_constant, cfg.study.seed)
        des.export_csv(args.export_design)
    return EXIT_OK


def cmd_cache(args) -> int:
    from .gpc import CoefficientCache

    cfg = _load(args)
    cache = CoefficientCache(cfg.output.cache_dir)
    if args.action == "clear":
        print(f"removed {cache.clear()} files from {cache.root}")
    else:
        entries = cache.entries()
        size = sum(p.stat().st_size for p in entries)
        print(f"{cache.root}: {len(entries)} coefficient records, {size} bytes")
        print(f"content hash {cache.content_hash()}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML experiment file (built-in defaults if omitted)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--cache-dir", default=None)
    common.add_argument("--out", default=None, help="output path stem for CSV/JSON")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="sparsegpc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="report condition checks").set_defaults(
        func=cmd_validate)
    sub.add_parser("oracle", parents=[common], help="tensor Gauss coefficients").set_defaults(
        func=cmd_oracle)
    p = sub.add_parser("interp", parents=[common], help="sparse-grid interpolation ladder")
    p.add_argument("--export-grid", default=None, help="write the last grid as text lines")
    p.set_defaults(func=lambda a: _run(a, {"interp"}, "interp"))
    sub.add_parser("quad", parents=[common], help="sparse-grid quadrature ladder").set_defaults(
        func=lambda a: _run(a, {"quad"}, "quad"))
    p = sub.add_parser("lsq", parents=[common], help="weighted least-squares ladder")
    p.add_argument("--export-design", default=None, help="write the last design as CSV")
    p.set_defaults(func=lambda a: _run(a, {"lsq", "lsq_quad"}, "lsq"))
    sub.add_parser("study", parents=[common], help="every ladder").set_defaults(
        func=lambda a: _run(a, None, "study"))
    p = sub.add_parser("cache", parents=[common], help="inspect or clear the coefficient cache")
    p.add_argument("action", choices=("inspect", "clear"))
    p.set_defaults(func=cmd_cache)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SparseGpcError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
