"""Command-line surface: subcommand dispatch, preset listing, and report
emission.

Exit codes encode experiment verdicts so CI can gate on consistency:
0 consistent/complete, 2 inconsistent, 3 inconclusive, 1 error.
The environment variable FURST_SEED overrides the configured seed.
"""

from __future__ import annotations

import argparse
import os
import sys as _sys
from typing import Optional

from .checks import certify, diophantine_probe, random_walk_entropy
from .config import RunConfig, load_config
from .engine import (delta_estimate, dim_estimate, lyapunov_estimate,
                     sample_boundary)
from .dyadic import sphere_to_plane
from .errors import FurstlabError
from .experiments import EXPERIMENTS, PipelineBudget, ThetaSpec, exp_main_theorem
from .presets import get_preset, list_presets
from .reporting import ExperimentReport, VERDICT_CONSISTENT, rows_to_csv


def _effective_config(args) -> RunConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        preset = getattr(args, "preset", None) or "twist"
        cfg = RunConfig(get_preset(preset), preset)
    if args.seed is not None:
        cfg.seed = args.seed
    env_seed = os.environ.get("FURST_SEED")
    if env_seed is not None:
        try:
            cfg.seed = int(env_seed)
        except ValueError:
            raise FurstlabError(f"FURST_SEED must be an integer, got {env_seed!r}")
    if not (0 <= cfg.seed < 2 ** 64):
        raise FurstlabError("seed must fit in 64 unsigned bits")
    if args.out:
        cfg.out_path = args.out
    if args.format:
        cfg.out_format = args.format
    if args.workers is not None:
        cfg.workers = args.workers
    return cfg


def _emit(report: ExperimentReport, cfg: RunConfig) -> int:
    if cfg.out_format == "csv":
        text = rows_to_csv(report.rows)
    else:
        text = report.to_json()
    if cfg.out_path:
        with open(cfg.out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        _sys.stdout.write(text)
    return report.exit_code()


def _wrap(name: str, cfg: RunConfig, rows, summary,
          verdict: str = VERDICT_CONSISTENT) -> ExperimentReport:
    return ExperimentReport(
        name, f"{cfg.system.name}:{cfg.system.fingerprint()}",
        dict(cfg.params), cfg.seed, rows, summary, verdict)


def cmd_check(cfg: RunConfig) -> int:
    rep = certify(cfg.system)
    verdict = VERDICT_CONSISTENT
    return _emit(_wrap("check", cfg, [], rep.to_dict(), verdict), cfg)


def cmd_chi(cfg: RunConfig) -> int:
    n = cfg.param("n", 10_000, int)
    trials = cfg.param("trials", 1000, int)
    ly = lyapunov_estimate(cfg.system, n, trials, cfg.seed, cfg.workers)
    rows = [{"estimator": "op-norm", "value": ly.op_norm.value,
             "stderr": ly.op_norm.stderr},
            {"estimator": "telescoped", "value": ly.telescoped.value,
             "stderr": ly.telescoped.stderr}]
    summary = {"chi": ly.op_norm.value, "stderr": ly.op_norm.stderr,
               "estimators_agree": ly.consistent(), "n": n, "trials": trials}
    return _emit(_wrap("chi", cfg, rows, summary), cfg)


def cmd_hrw(cfg: RunConfig) -> int:
    nmax = cfg.param("nmax", 9, int)
    cap = cfg.param("cap", 2_000_000, int)
    table = random_walk_entropy(cfg.system, nmax, cap)
    rows = [{"n": n, "H_n": h, "H_n_over_n": hn} for n, h, hn in table.rows]
    summary = {"h_rw": table.h_rw_estimate, "free": table.free,
               "letter_entropy": table.letter_entropy,
               "ambiguity_warning": table.ambiguity_warning}
    return _emit(_wrap("hrw", cfg, rows, summary), cfg)


def cmd_dio(cfg: RunConfig) -> int:
    nmax = cfg.param("nmax", 8, int)
    cap = cfg.param("cap", 2_000_000, int)
    rep = diophantine_probe(cfg.system, nmax, cap)
    summary = {"fitted_c": rep.fitted_c, "collisions": rep.collisions_total,
               "branch_pairs": rep.branch_pairs_total,
               "min_separation": rep.min_separation()}
    return _emit(_wrap("dio", cfg, rep.rows, summary), cfg)


def cmd_sample(cfg: RunConfig) -> int:
    count = cfg.param("count", 100_000, int)
    bits = cfg.param("bits", 40.0, float)
    transpose = cfg.param("transpose", "false") in ("true", "1", "yes")
    space = cfg.param("space", "c_inf")
    cloud = sample_boundary(cfg.system, bits, count, cfg.seed, cfg.workers,
                            transpose=transpose)
    measure = cloud.measure if space == "cp1" else sphere_to_plane(cloud.measure)
    if not cfg.out_path:
        raise FurstlabError("sample needs --out for the point-cloud CSV")
    measure.to_csv(cfg.out_path)
    summary = {"count": count, "space": space,
               "inf_mass": measure.inf_mass() if space == "c_inf" else 0.0,
               "mean_stop_length": float(cloud.steps.mean()),
               "path": cfg.out_path}
    rep = _wrap("sample", cfg, [], summary)
    _sys.stdout.write(rep.to_json())
    return 0


def cmd_dim(cfg: RunConfig) -> int:
    count = cfg.param("count", 200_000, int)
    scheme = cfg.param("scheme", "entropy-slope")
    lo = cfg.param("window_lo", 2, int)
    hi = cfg.param("window_hi", 12, int)
    cloud = sample_boundary(cfg.system, cfg.param("bits", 40.0, float),
                            count, cfg.seed, cfg.workers)
    est = dim_estimate(cloud.measure, scheme, window=(lo, hi), seed=cfg.seed)
    summary = {"dimension": est.value, "stderr": est.stderr,
               "method": est.method, "count": count}
    return _emit(_wrap("dim", cfg, [], summary), cfg)


def cmd_delta(cfg: RunConfig) -> int:
    count = cfg.param("count", 200_000, int)
    qmax = cfg.param("qmax", 12, int)
    ladder = delta_estimate(cfg.system, qmax, count, cfg.seed, cfg.workers)
    est = ladder.estimate()
    summary = {"delta": est.value, "stderr": est.stderr, "method": est.method,
               "letter_entropy": ladder.letter_entropy}
    return _emit(_wrap("delta", cfg, ladder.rows, summary), cfg)


def _theta_from_params(cfg: RunConfig) -> ThetaSpec:
    kind = cfg.param("theta", "four-ball")
    if kind == "identity":
        return ThetaSpec.identity_atom()
    if kind == "four-ball":
        return ThetaSpec.four_ball_atoms(cfg.param("theta_spread", 0.08, float))
    if kind == "translation-arc":
        return ThetaSpec.translation_arc(cfg.param("theta_tmax", 0.5, float),
                                         cfg.param("theta_count", 4096, int))
    if kind == "lower-triangular-arc":
        return ThetaSpec.lower_triangular_arc(
            cfg.param("theta_tmax", 0.5, float),
            cfg.param("theta_count", 4096, int))
    raise FurstlabError(f"unknown theta kind {kind!r}")


def cmd_exp(cfg: RunConfig, name: str) -> int:
    if name not in EXPERIMENTS:
        raise FurstlabError(
            f"unknown experiment {name!r}; known: {sorted(EXPERIMENTS)}")
    count = cfg.param("count", 200_000, int)
    seed, workers = cfg.seed, cfg.workers
    if name == "uniform-entropy-dim":
        rep = EXPERIMENTS[name](cfg.system, m=cfg.param("m", 8, int),
                                count=count, eps=cfg.param("eps", 0.25, float),
                                seed=seed, workers=workers)
    elif name == "projection-entropy":
        rep = EXPERIMENTS[name](cfg.system, m=cfg.param("m", 8, int),
                                directions=cfg.param("directions", 180, int),
                                count=count, seed=seed, workers=workers)
    elif name == "direction-cocycle":
        rep = EXPERIMENTS[name](cfg.system, n=cfg.param("n", 10_000, int),
                                q=cfg.param("q", 30, int),
                                delta=cfg.param("delta", 0.1, float),
                                trials=cfg.param("trials", 8, int), seed=seed)
    elif name == "entropy-increase":
        rep = EXPERIMENTS[name](cfg.system, _theta_from_params(cfg),
                                r=cfg.param("r", 0.25, float),
                                n=cfg.param("n", 14, int), count=count,
                                seed=seed, workers=workers)
    elif name == "action-entropy-transfer":
        rep = EXPERIMENTS[name](cfg.system, _theta_from_params(cfg),
                                k=cfg.param("k", 8, int),
                                n=cfg.param("n", 6, int),
                                xi_count=count, seed=seed, workers=workers)
    elif name == "linearization":
        rep = EXPERIMENTS[name](k=cfg.param("k", 8, int),
                                delta=cfg.param("delta", 2.0 ** -10, float),
                                seed=seed)
    elif name == "boundary-convergence":
        n_values = tuple(int(t) for t in
                         cfg.param("n_values", "10,20,30").split(","))
        rep = EXPERIMENTS[name](cfg.system, n_values=n_values,
                                eta=cfg.param("eta", 0.2, float),
                                trials=cfg.param("trials", 1024, int),
                                seed=seed, workers=workers)
    else:
        rep = exp_main_theorem(cfg.system, _budget_from_params(cfg),
                               seed=seed, workers=workers)
    return _emit(rep, cfg)


def _budget_from_params(cfg: RunConfig) -> PipelineBudget:
    b = PipelineBudget()
    n = cfg.param("count", None, int)
    if n is not None:
        if n < b.boundary_samples:
            b = b.small(n)
        else:
            b.boundary_samples = n
    return b


def cmd_report(cfg: RunConfig) -> int:
    rep = exp_main_theorem(cfg.system, _budget_from_params(cfg),
                           seed=cfg.seed, workers=cfg.workers)
    return _emit(rep, cfg)


def cmd_presets(cfg: Optional[RunConfig]) -> int:
    rows = [{"name": name, "generators": k, "exact": ex, "description": desc}
            for name, k, ex, desc in list_presets()]
    for r in rows:
        _sys.stdout.write(f"{r['name']:20s} k={r['generators']} "
                          f"exact={str(r['exact']).lower():5s} "
                          f"{r['description']}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="furstlab",
        description="Furstenberg-measure simulator and verification lab")
    ap.add_argument("command",
                    choices=["check", "chi", "hrw", "dio", "sample", "dim",
                             "delta", "exp", "report", "presets"])
    ap.add_argument("name", nargs="?", default=None,
                    help="experiment name for `exp`")
    ap.add_argument("--config", default=None)
    ap.add_argument("--preset", default=None)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out", default=None)
    ap.add_argument("--format", choices=["json", "csv"], default=None)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--param", action="append", default=[],
                    metavar="KEY=VALUE", help="override a [params] entry")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        if args.command == "presets":
            return cmd_presets(None)
        cfg = _effective_config(args)
        for kv in args.param:
            if "=" not in kv:
                raise FurstlabError(f"--param needs KEY=VALUE, got {kv!r}")
            k, v = kv.split("=", 1)
            cfg.params[k.strip()] = v.strip()
        if args.command == "check":
            return cmd_check(cfg)
        if args.command == "chi":
            return cmd_chi(cfg)
        if args.command == "hrw":
            return cmd_hrw(cfg)
        if args.command == "dio":
            return cmd_dio(cfg)
        if args.command == "sample":
            return cmd_sample(cfg)
        if args.command == "dim":
            return cmd_dim(cfg)
        if args.command == "delta":
            return cmd_delta(cfg)
        if args.command == "report":
            return cmd_report(cfg)
        if args.command == "exp":
            if not args.name:
                raise FurstlabError("exp needs an experiment name")
            return cmd_exp(cfg, args.name)
    except FurstlabError as exc:
        _sys.stderr.write(f"error: {exc}\n")
        return 1
    except OSError as exc:
        _sys.stderr.write(f"error: {exc}\n")
        return 1
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
