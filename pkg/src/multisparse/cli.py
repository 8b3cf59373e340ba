"""Command-line driver.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 solver
infeasibility. Diagnostics go to stderr; results go to files or stdout.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace

import numpy as np

from .errors import (
    DimensionError,
    FormatError,
    GenerationError,
    IllConditionedError,
    InfeasibleProblemError,
    UndefinedInputError,
)
from .experiments import (
    Lambda2Scale,
    Method,
    SignalSource,
    SourceKind,
    TrialSpec,
    generate_signal,
    ingest_trace,
    reconstruct,
    relative_error,
    run_sweep,
)
from .io import (
    RunConfig,
    format_sweep_csv,
    load_config,
    read_signal_file,
    write_signal_file,
    write_sweep_csv,
)
from .operators import MeasurementKind, make_measurement_matrix

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INFEASIBLE = 3

log = logging.getLogger("multisparse")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _method(text):
    try:
        return Method.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _methods(text):
    return tuple(_method(t) for t in text.split(",") if t.strip())


def _ratios(text):
    return tuple(float(t) for t in text.split(",") if t.strip())


def _synthetic_kind(text):
    kind = SourceKind(text)
    if kind is SourceKind.FILE_TRACE:
        raise argparse.ArgumentTypeError("use --input for file traces")
    return kind


def build_parser():
    p = _Parser(prog="multisparse",
                description="Multi-domain sparse recovery from compressive measurements.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    rec = sub.add_parser("recover", help="reconstruct one signal from simulated measurements")
    rec.add_argument("--input", required=True, help="sample-per-line signal file")
    rec.add_argument("--n", type=int, help="window length (default: whole file)")
    rec.add_argument("--offset", type=int, default=0)
    rec.add_argument("--method", type=_method, default=Method.L1_L1)
    rec.add_argument("--ratio", type=float, default=0.5)
    rec.add_argument("--seed", type=int, default=0)
    rec.add_argument("--epsilon-frac", type=float, default=0.05)
    rec.add_argument("--lambda2", type=float, default=0.05)
    rec.add_argument("--lambda2-scale", type=Lambda2Scale, default=Lambda2Scale.SQRT_N)
    rec.add_argument("--output", help="estimate file (default: stdout)")

    sw = sub.add_parser("sweep", help="Monte Carlo RMSE sweep")
    sw.add_argument("--config", help="key=value config file; flags override it")
    sw.add_argument("--n", type=int)
    sw.add_argument("--ratios", type=_ratios)
    sw.add_argument("--trials", type=int, dest="trial_count")
    sw.add_argument("--epsilon-frac", type=float)
    sw.add_argument("--lambda2", type=float)
    sw.add_argument("--lambda2-scale", type=Lambda2Scale)
    sw.add_argument("--methods", type=_methods)
    sw.add_argument("--seed", type=int, dest="base_seed")
    sw.add_argument("--source", type=_synthetic_kind)
    sw.add_argument("--k-time", type=int)
    sw.add_argument("--burst-width", type=int)
    sw.add_argument("--noise-floor", type=float)
    sw.add_argument("--input")
    sw.add_argument("--workers", type=int)
    sw.add_argument("--timing", action="store_true", default=None)
    sw.add_argument("--out-csv")

    gen = sub.add_parser("gen", help="write a synthetic signal file")
    gen.add_argument("--kind", type=_synthetic_kind, required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--k-time", type=int)
    gen.add_argument("--k-freq", type=int, default=3)
    gen.add_argument("--burst-width", type=int)
    gen.add_argument("--noise-floor", type=float, default=0.0)
    gen.add_argument("--output", help="signal file (default: stdout)")

    bench = sub.add_parser("bench", help="solver timing table")
    bench.add_argument("--n", type=int, default=512)
    bench.add_argument("--ratio", type=float, default=0.5)
    bench.add_argument("--trials", type=int, default=3)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--methods", type=_methods, default=tuple(Method))
    return p


def _check_ratio(ratio, n):
    if not (0 < ratio <= 1) or math.floor(ratio * n) < 1:
        raise UsageError(f"ratio must lie in (0, 1] and give at least one measurement, got {ratio}")


def _cmd_recover(args):
    if args.n is not None and args.n < 1:
        raise UsageError("--n must be positive")
    if not 0 < args.ratio <= 1:
        raise UsageError(f"--ratio must lie in (0, 1], got {args.ratio}")
    if args.epsilon_frac < 0 or args.lambda2 < 0:
        raise UsageError("--epsilon-frac and --lambda2 must be nonnegative")
    n = args.n if args.n is not None else read_signal_file(args.input).size - args.offset
    _check_ratio(args.ratio, n)
    x = ingest_trace(args.input, n, args.offset)
    m = math.floor(args.ratio * n)
    phi = make_measurement_matrix(MeasurementKind.GAUSSIAN, m, n, args.seed)
    y = phi.apply(x)
    eps = args.epsilon_frac * float(np.linalg.norm(y))
    lam2 = args.lambda2_scale.effective(args.lambda2, n)
    rep = reconstruct(args.method, y, phi, eps, lam2)
    summary = (
        f"method={args.method.value} N={n} M={m} rel_error={relative_error(x, rep.x_hat):.6g} "
        f"objective={rep.objective:.6g} residual={rep.residual:.6g} eps={eps:.6g} "
        f"iterations={rep.iterations} converged={rep.converged} seconds={rep.wall_time:.3f}"
    )
    if args.output:
        write_signal_file(rep.x_hat.samples, args.output)
        print(summary)
    else:
        sys.stdout.write(write_signal_file(rep.x_hat.samples))
        print(summary, file=sys.stderr)
    return EXIT_OK


def _cmd_sweep(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = {
        key: getattr(args, key)
        for key in ("n", "ratios", "trial_count", "epsilon_frac", "lambda2", "lambda2_scale",
                    "methods", "base_seed", "k_time", "burst_width", "noise_floor", "input",
                    "workers", "timing", "out_csv")
        if getattr(args, key) is not None
    }
    if args.source is not None:
        overrides["source"] = args.source
    cfg = replace(cfg, **overrides)
    try:
        spec = cfg.trial_spec()
        source = cfg.signal_source()
        solver = cfg.solver_config()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    result = run_sweep(spec, source, solver, workers=max(1, cfg.workers))
    if cfg.out_csv:
        write_sweep_csv(result, cfg.out_csv, timing=cfg.timing)
        log.info("wrote %s", cfg.out_csv)
    else:
        sys.stdout.write(format_sweep_csv(result, timing=cfg.timing))
    return EXIT_OK


def _cmd_gen(args):
    if args.n < 1:
        raise UsageError("--n must be positive")
    try:
        source = SignalSource(
            kind=args.kind,
            k_time=args.k_time,
            k_freq=args.k_freq,
            burst_width=args.burst_width,
            noise_floor=args.noise_floor,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    x = generate_signal(source, args.n)
    if args.output:
        write_signal_file(x.samples, args.output)
    else:
        sys.stdout.write(write_signal_file(x.samples))
    return EXIT_OK


def _cmd_bench(args):
    _check_ratio(args.ratio, args.n)
    try:
        spec = TrialSpec(n=args.n, ratios=(args.ratio,), trial_count=args.trials,
                         methods=args.methods, base_seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    result = run_sweep(spec, SignalSource(SourceKind.DUAL_SPARSE))
    print(f"# N={args.n} M={spec.measurements(args.ratio)} trials={args.trials}")
    print(f"{'method':<8}{'mean_seconds':>14}{'mean_rmse':>12}")
    for method, _, cell in result.rows():
        print(f"{method.value:<8}{cell.mean_seconds:>14.4f}{cell.mean_rmse:>12.5f}")
    return EXIT_OK


_COMMANDS = {
    "recover": _cmd_recover,
    "sweep": _cmd_sweep,
    "gen": _cmd_gen,
    "bench": _cmd_bench,
}


def cli_main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"multisparse {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleProblemError as exc:
        print(f"multisparse {args.command}: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (FormatError, UndefinedInputError, GenerationError, DimensionError,
            IllConditionedError, OSError) as exc:
        print(f"multisparse {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


def main():
    sys.exit(cli_main())
