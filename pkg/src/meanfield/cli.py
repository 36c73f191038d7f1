"""Command-line front end.

Exit codes: 0 success, 2 usage or registry errors, 3 data-validation
errors, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import ast
import inspect
import json
import sys
from pathlib import Path

from meanfield.core import InvariantError
from meanfield.envs import ENVIRONMENTS, env_signature, make_env
from meanfield.records import RunRecord, TabularEnvError, load_tabular_env, tune_report
from meanfield.solvers import ALGORITHMS, HYPERPARAMETERS, NumericalError, SolveSettings, solve
from meanfield.tuner import METRICS, TuneSettings, tune

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

ENV_FILE_NOTE = (
    "--env-file loads a population-independent tabular environment (JSON with T, S, A, mu0, "
    "r_max, rewards, transitions). Environments whose rewards or transitions depend on the "
    "population are available through the Python API only."
)


class UsageError(Exception):
    pass


def parse_value(text: str):
    if text.lower() in ("none", "null"):
        return None
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def parse_pairs(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"malformed key=value pair: {item!r}")
        out[key.strip()] = parse_value(value.strip())
    return out


def build_env(name: str, kwargs: dict, seed: int | None = None):
    if name not in ENVIRONMENTS:
        raise UsageError(f"unknown environment {name!r}; valid environments: {', '.join(ENVIRONMENTS)}")
    if seed is not None and "seed" in inspect.signature(ENVIRONMENTS[name]).parameters:
        kwargs = {"seed": seed, **kwargs}
    try:
        return make_env(name, **kwargs)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad arguments for {env_signature(name)}: {exc}") from None


def check_alg(name: str) -> None:
    if name not in ALGORITHMS:
        raise UsageError(f"unknown algorithm {name!r}; valid algorithms: {', '.join(ALGORITHMS)}")


def parse_suite_entry(spec: str) -> tuple[str, dict]:
    name, _, rest = spec.partition(":")
    pairs = [p for p in rest.split(",") if p] if rest else []
    return name, parse_pairs(pairs)


def settings_from(args) -> SolveSettings:
    try:
        return SolveSettings(
            max_iter=args.max_iter, atol=args.atol, rtol=args.rtol, record_every=getattr(args, "record_every", 1)
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


class IterationLog:
    """Per-iteration log writer; flushes every row."""

    def __init__(self, mode: str, stream=None):
        self.mode = mode
        self.stream = stream or sys.stdout
        self.rows = 0

    def __call__(self, n, expl, best, elapsed):
        if self.mode == "none":
            return
        if self.mode == "jsonl":
            line = json.dumps({"iter": n, "expl": expl, "best_expl": best, "elapsed_s": elapsed})
        else:
            if self.rows == 0:
                print(f"{'iter':>8}  {'expl':>12}  {'best_expl':>12}  {'elapsed_s':>10}", file=self.stream)
            line = f"{n:>8d}  {expl:>12.6e}  {best:>12.6e}  {elapsed:>10.4f}"
        self.rows += 1
        print(line, file=self.stream, flush=True)


def cmd_list_envs(args) -> int:
    print("environments:")
    for name in ENVIRONMENTS:
        print(f"  {env_signature(name)}")
    if args.algs:
        print("algorithms:")
        for name, params in HYPERPARAMETERS.items():
            sig = ", ".join(f"{k}={v!r}" for k, v in params.items())
            print(f"  {name}({sig})")
        print("metrics:")
        for name in METRICS:
            print(f"  {name}")
    return EXIT_OK


def cmd_solve(args) -> int:
    check_alg(args.alg)
    params = parse_pairs(args.param)
    settings = settings_from(args)
    if args.env_file:
        env = load_tabular_env(args.env_file)
        env_info = {"file": str(args.env_file)}
    else:
        kwargs = parse_pairs(args.env_arg)
        env = build_env(args.env, kwargs, args.seed)
        env_info = {"name": args.env, "kwargs": kwargs}
        if args.seed is not None:
            env_info["seed"] = args.seed
    unknown = set(params) - set(HYPERPARAMETERS[args.alg])
    if unknown:
        raise UsageError(f"{args.alg} does not take {sorted(unknown)}; expected {sorted(HYPERPARAMETERS[args.alg])}")

    log = IterationLog(args.log)
    try:
        result = solve(args.alg, env, settings, callback=log, **params)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, InvariantError):
            raise
        raise UsageError(str(exc)) from None
    print(
        f"done: converged={result.converged} iterations={result.iterations_run} "
        f"expl={result.exploitabilities[-1]:.6e} best_expl={min(result.exploitabilities):.6e} "
        f"elapsed_s={result.runtimes[-1]:.4f}",
        flush=True,
    )
    if args.output:
        algorithm = {"name": args.alg, "params": {**HYPERPARAMETERS[args.alg], **params}}
        RunRecord.from_result(result, env_info, algorithm, settings).save(args.output)
    return EXIT_OK


def cmd_tune(args) -> int:
    check_alg(args.alg)
    if args.metric not in METRICS:
        raise UsageError(f"unknown metric {args.metric!r}; valid metrics: {', '.join(METRICS)}")
    if not args.env:
        raise UsageError("the environment suite is empty; pass --env at least once")
    suite = [build_env(name, kwargs, args.seed) for name, kwargs in map(parse_suite_entry, args.env)]
    try:
        settings = TuneSettings(
            metric=args.metric,
            n_trials=args.n_trials,
            timeout=args.timeout,
            seed=args.seed if args.seed is not None else 0,
            max_iter=args.max_iter,
            atol=args.atol,
            rtol=args.rtol,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    def show(record):
        print(f"trial {record.index:>4d}  score={record.score!r}  config={json.dumps(record.config)}", flush=True)

    best, history = tune(args.alg, suite, settings=settings, callback=show)
    report = tune_report(args.alg, settings, best, history)
    print(f"best: trial {report['best_trial']} score={report['best_score']!r} config={json.dumps(best)}")
    if args.output:
        Path(args.output).write_text(json.dumps(report, indent=1) + "\n", encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="meanfield", description="Solve finite mean-field games.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list", help="list environments (and algorithms with --algs)")
    p.add_argument("--algs", action="store_true", help="also list algorithms and metrics")
    p.set_defaults(func=cmd_list_envs)

    def solve_flags(p):
        p.add_argument("--max-iter", type=int, default=300)
        p.add_argument("--atol", type=float, default=1e-8)
        p.add_argument("--rtol", type=float, default=1e-8)
        p.add_argument("--seed", type=int, default=None, help="seed for seeded environments")
        p.add_argument("--output", type=Path, default=None)

    p = sub.add_parser("solve", help="run one solver on one environment", epilog=ENV_FILE_NOTE)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--env", help=f"registry name: {', '.join(ENVIRONMENTS)}")
    src.add_argument("--env-file", type=Path, help="tabular environment JSON")
    p.add_argument("--env-arg", action="append", metavar="KEY=VALUE")
    p.add_argument("--alg", required=True, help=f"one of {', '.join(ALGORITHMS)}")
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--record-every", type=int, default=1)
    p.add_argument("--log", choices=("table", "jsonl", "none"), default="table")
    solve_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("tune", help="random-search hyperparameters over an environment suite")
    p.add_argument("--env", action="append", metavar="NAME[:KEY=VALUE,...]", help="repeat to build the suite")
    p.add_argument("--alg", required=True)
    p.add_argument("--metric", default="shifted_geo_mean", help=f"one of {', '.join(METRICS)}")
    p.add_argument("--n-trials", type=int, default=20)
    p.add_argument("--timeout", type=float, default=None)
    solve_flags(p)
    p.set_defaults(func=cmd_tune)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TabularEnvError, InvariantError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
