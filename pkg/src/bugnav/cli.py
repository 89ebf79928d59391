"""``bugnav`` command line: gen, run, sweep, analyze.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import itertools
import json
import logging
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from .bugs import Algorithm
from .config import ConfigError, Experiment, parse_config, preset, PRESETS
from .envgen import EnvParseError, GenParams, GenerationError, generate, load_env, save_env
from .harness import (
    BatchSpec,
    EpisodeConfig,
    RESULT_FIELDS,
    default_workers,
    episode_noise_seed,
    make_record,
    read_results,
    run_batch,
    run_episode,
    write_trace,
)
from .noise import FP_MODES, NoiseConfig
from .oracle import environment_astar_length
from .render import bar_chart, box_chart, render_environment
from .stats import DegenerateSampleError, bootstrap_test, linear_regression, logistic_regression

log = logging.getLogger("bugnav")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
NOISE_AXES = ("odom_sigma", "p_fp", "p_fn", "dt_sigma")


class UsageError(Exception):
    pass


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _algorithm(s):
    try:
        return Algorithm.parse(s)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_noise_flags(p):
    p.add_argument("--odom-sigma", type=float, default=0.0, help="velocity noise std, m/s")
    p.add_argument("--p-fp", type=float, default=0.0, help="false-positive recall probability")
    p.add_argument("--p-fn", type=float, default=0.0, help="false-negative recall probability")
    p.add_argument("--dt-sigma", type=float, default=0.0, help="distance-to-target noise std, m")
    p.add_argument("--fp-mode", choices=FP_MODES, default="per_tick")
    p.add_argument("--noise-seed", type=int, default=0)


def _add_gen_flags(p):
    p.add_argument("--p-str", type=float, default=GenParams.p_str, help="corridor agent straight-on probability")
    p.add_argument("--t-cor", type=float, default=GenParams.t_cor, help="target corridor fraction")
    p.add_argument("--arena-size", type=float, default=GenParams.arena_size, help="arena side, m")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bugnav", description="Bug algorithm navigation experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an environment file and its SVG")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", type=Path, default=Path("."), help="output directory")
    _add_gen_flags(g)

    r = sub.add_parser("run", help="run one episode")
    src = r.add_mutually_exclusive_group()
    src.add_argument("--env", type=Path, help="environment file")
    src.add_argument("--seed", type=int, help="generate the environment from this seed")
    r.add_argument("--alg", type=_algorithm, required=True)
    r.add_argument("--time-limit", type=float, default=300.0)
    r.add_argument("--out", type=Path, default=Path("."), help="output directory")
    _add_noise_flags(r)
    _add_gen_flags(r)

    s = sub.add_parser("sweep", help="run a batch experiment from a config file or preset")
    s.add_argument("config", nargs="?", type=Path, help="experiment config file")
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("--envs", type=_positive_int, help="override the number of environments")
    s.add_argument("--seed", type=int, help="override base_seed")
    s.add_argument("--workers", type=_positive_int, help="worker processes (default $BUGNAV_WORKERS or CPU count)")
    s.add_argument("--out", type=Path, default=Path("results"), help="output directory")

    a = sub.add_parser("analyze", help="statistics report and charts for results CSVs")
    a.add_argument("results", nargs="+", type=Path)
    a.add_argument("--out", type=Path, default=Path("analysis"), help="output directory")
    a.add_argument("--seed", type=int, default=0, help="bootstrap RNG seed")
    a.add_argument("--resamples", type=_positive_int, default=10_000)
    return parser


# --------------------------------------------------------------------------
# gen / run


def _gen_params(args, seed: int) -> GenParams:
    try:
        return GenParams(p_str=args.p_str, t_cor=args.t_cor, arena_size=args.arena_size, seed=seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_gen(args) -> int:
    env = generate(_gen_params(args, args.seed))
    args.out.mkdir(parents=True, exist_ok=True)
    stem = args.out / f"env-{args.seed}"
    stem.with_suffix(".env").write_text(save_env(env), encoding="utf-8")
    stem.with_suffix(".svg").write_text(render_environment(env), encoding="utf-8")
    print(stem.with_suffix(".env"))
    return EXIT_OK


def cmd_run(args) -> int:
    if args.env is not None:
        try:
            env = load_env(args.env.read_text(encoding="utf-8"))
        except EnvParseError as exc:
            raise UsageError(f"{args.env}: {exc}") from None
        env_seed = -1
        stem_name = args.env.stem
    else:
        env_seed = 0 if args.seed is None else args.seed
        env = generate(_gen_params(args, env_seed))
        stem_name = f"env-{env_seed}"
    try:
        noise = NoiseConfig(
            args.odom_sigma, args.p_fp, args.p_fn, args.dt_sigma, args.fp_mode, args.noise_seed
        )
        ep_noise = dataclasses.replace(noise, noise_seed=episode_noise_seed(args.noise_seed, max(env_seed, 0)))
        cfg = EpisodeConfig(args.alg, env, ep_noise, time_limit=args.time_limit, record_trace=True)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result = run_episode(cfg)
    rec = make_record(env_seed, args.alg, noise, result, environment_astar_length(env.grid))
    args.out.mkdir(parents=True, exist_ok=True)
    stem = args.out / f"{stem_name}-{args.alg.value}"
    write_trace(stem.with_suffix(".trace.csv"), result.trace)
    stem.with_suffix(".svg").write_text(
        render_environment(env, result.trace, cfg.goal_radius), encoding="utf-8"
    )
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(RESULT_FIELDS)
    w.writerow(rec.as_row())
    return EXIT_OK


# --------------------------------------------------------------------------
# sweep


def _load_experiments(args) -> list[Experiment]:
    if (args.config is None) == (args.preset is None):
        raise UsageError("give exactly one of a config file or --preset")
    if args.preset is not None:
        exps = preset(args.preset)
    else:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        exps = parse_config(text)
    overrides = {}
    if args.envs is not None:
        overrides["envs"] = args.envs
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    return [dataclasses.replace(e, **overrides) for e in exps]


def cmd_sweep(args) -> int:
    exps = _load_experiments(args)
    try:
        workers = args.workers or default_workers()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    args.out.mkdir(parents=True, exist_ok=True)
    for exp in exps:
        csv_path = args.out / f"{exp.name}.csv"
        manifest = {
            "command": "sweep",
            "config": str(args.config) if args.config else None,
            "preset": args.preset,
            "output_dir": str(args.out),
            "results": csv_path.name,
            "experiment": exp.manifest(),
        }
        (args.out / f"{exp.name}.manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        spec = BatchSpec(
            algorithms=exp.algorithms,
            noise_grid=tuple(exp.noise_grid()),
            gen=exp.gen,
            time_limit=exp.time_limit,
            goal_radius=exp.goal_radius,
        )
        log.info("%s: %d runs, %d workers", exp.name, exp.n_runs, workers)
        records = run_batch(
            exp.envs, exp.algorithms, spec.noise_grid, exp.base_seed, csv_path, workers, spec
        )
        print(f"{csv_path}: {len(records)} records")
    return EXIT_OK


# --------------------------------------------------------------------------
# analyze


def _noise_key(r):
    return (r.odom_sigma, r.p_fp, r.p_fn, r.dt_sigma, r.fp_mode)


def _alg_order(name):
    return [a.value for a in Algorithm].index(name)


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def analyze(records, out: Path, seed: int = 0, resamples: int = 10_000) -> str:
    """Write the statistics tables and charts; return the plain-text report."""
    if not records:
        raise ValueError("no result rows to analyze")
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    groups = defaultdict(list)
    for r in records:
        groups[(_noise_key(r), r.algorithm)].append(r)
    keys = sorted(groups, key=lambda k: (k[0], _alg_order(k[1])))
    noise_hdr = ["odom_sigma", "p_fp", "p_fn", "dt_sigma", "fp_mode"]
    report = []

    success_rows, length_rows = [], []
    for nk, alg in keys:
        rs = groups[(nk, alg)]
        succ = np.mean([r.success for r in rs])
        q = np.percentile([r.normalized_length for r in rs], [25, 50, 75])
        success_rows.append([alg, *map(_fmt, nk), len(rs), _fmt(float(succ))])
        length_rows.append([alg, *map(_fmt, nk), len(rs), *(_fmt(float(v)) for v in q)])
    _write_csv(out / "success.csv", ["algorithm", *noise_hdr, "n", "success_rate"], success_rows)
    _write_csv(out / "lengths.csv", ["algorithm", *noise_hdr, "n", "q25", "median", "q75"], length_rows)
    report.append("success rate and normalized length quartiles")
    for s, l in zip(success_rows, length_rows):
        report.append(f"  {s[0]:5s} noise={'/'.join(s[1:6])} n={s[6]} success={s[7]} "
                      f"length q25/med/q75={l[7]}/{l[8]}/{l[9]}")

    boot_rows = []
    by_noise = defaultdict(dict)
    for nk, alg in keys:
        by_noise[nk][alg] = [r.normalized_length for r in groups[(nk, alg)]]
    for nk in sorted(by_noise):
        algs = sorted(by_noise[nk], key=_alg_order)
        for a, b in itertools.combinations_with_replacement(algs, 2):
            xa, xb = by_noise[nk][a], by_noise[nk][b]
            if len(xa) < 2 or len(xb) < 2:
                continue
            p = bootstrap_test(xa, xb, resamples, rng)
            boot_rows.append([a, b, *map(_fmt, nk), _fmt(p)])
    _write_csv(out / "bootstrap.csv", ["algorithm_a", "algorithm_b", *noise_hdr, "p_value"], boot_rows)
    report.append("pairwise bootstrap p-values on normalized length: see bootstrap.csv")

    reg_rows = []
    by_alg = defaultdict(list)
    for r in records:
        by_alg[r.algorithm].append(r)
    for alg in sorted(by_alg, key=_alg_order):
        rs = by_alg[alg]
        for axis in NOISE_AXES:
            x = np.array([getattr(r, axis) for r in rs])
            if np.unique(x).size < 2:
                continue
            y = np.array([r.success for r in rs])
            lengths = np.array([r.normalized_length for r in rs])
            lin = linear_regression(x, lengths)
            try:
                lg = logistic_regression(x, y)
                logit = [lg.coefficient, lg.se_coefficient, lg.intercept, lg.pseudo_r_squared]
                note = "separated" if lg.separated else ""
            except (DegenerateSampleError, ValueError) as exc:
                logit = [float("nan")] * 4
                note = str(exc)
            reg_rows.append(
                [alg, axis, len(rs), *map(_fmt, logit), _fmt(lin.slope), _fmt(lin.intercept),
                 _fmt(lin.r_squared), note]
            )
    _write_csv(
        out / "regression.csv",
        ["algorithm", "noise_axis", "n", "logit_coef", "logit_se", "logit_intercept", "pseudo_r2",
         "length_slope", "length_intercept", "length_r2", "note"],
        reg_rows,
    )
    if reg_rows:
        report.append("regression of success (logistic) and normalized length (OLS) on each noise axis")
        for row in reg_rows:
            report.append(f"  {row[0]:5s} {row[1]:10s} coef={row[3]} se={row[4]} pseudoR2={row[6]} "
                          f"slope={row[7]} R2={row[9]} {row[10]}".rstrip())

    labels = [f"{alg}" if len(by_noise) == 1 else f"{alg}@{'/'.join(map(_fmt, nk[:4]))}" for nk, alg in keys]
    (out / "success.svg").write_text(
        bar_chart(labels, [float(r[-1]) for r in success_rows], "success rate", y_max=1.0), encoding="utf-8"
    )
    (out / "lengths.svg").write_text(
        box_chart(labels, [[r.normalized_length for r in groups[k]] for k in keys], "normalized length"),
        encoding="utf-8",
    )
    text = "\n".join(report) + "\n"
    (out / "report.txt").write_text(text, encoding="utf-8")
    return text


def cmd_analyze(args) -> int:
    records = []
    for path in args.results:
        if not path.exists():
            raise UsageError(f"{path}: no such file")
        try:
            records.extend(read_results(path))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if not records:
        raise UsageError("results CSV is empty")
    sys.stdout.write(analyze(records, args.out, args.seed, args.resamples))
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "sweep": cmd_sweep, "analyze": cmd_analyze}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s"
    )
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"bugnav {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GenerationError, OSError, RuntimeError, ValueError) as exc:
        print(f"bugnav {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
