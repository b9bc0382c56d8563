"""Command-line surface: analyze, schedule, simulate, lowerbound, bench.

Exit codes: 0 success, 1 validation or feasibility failure, 2 search or
fixing capacity exhausted, 64 usage error. `CD_ROUTER_LOG` (error, info,
debug) controls logging; all randomness derives from --seed sub-streams.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import lowerbound as lb_mod
from . import schedule as schedule_mod
from .fixer import FixerConfig, FixerError, run_pipeline
from .instance import (
    Instance,
    InvalidInstanceError,
    decode,
    generate_random_instance,
    stats,
    validate,
)
from .oracle import OracleCapacityError
from .simulator import (
    CheckRequirements,
    arrivals_csv_rows,
    check,
    loads_csv_rows,
    simulate,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CAPACITY = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _sci(x: float) -> str:
    mantissa, exponent = f"{x:.2e}".split("e")
    return f"{mantissa}e{int(exponent)}"


def _load_instance(path: str) -> Instance:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidInstanceError(f"cannot read {path}: {exc}") from exc
    return decode(text)


def _write_or_print(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# --- subcommands -------------------------------------------------------------

def cmd_analyze(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance)
    report = validate(instance)
    if not report.ok:
        for violation in report.violations:
            print(f"invalid: {violation}")
        return EXIT_FAILURE
    s = stats(instance)
    print(f"C={s.congestion} D={s.dilation} ok")
    return EXIT_OK


def cmd_schedule(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance)
    report = validate(instance)
    if not report.ok:
        for violation in report.violations:
            print(f"invalid: {violation}", file=sys.stderr)
        return EXIT_FAILURE
    config = FixerConfig(
        variant=args.variant,
        delta=args.delta,
        strategy=args.strategy,
        finalize_strategy=args.finalize,
        seed=args.seed,
    )
    result = run_pipeline(instance, config)
    _write_or_print(schedule_mod.encode(result.schedule), args.out)
    if args.report is not None:
        Path(args.report).write_text(
            json.dumps(result.report.to_dict(), indent=2) + "\n"
        )
    r = result.report
    denom = result.congestion + result.dilation
    print(
        f"variant={r.variant} C={result.congestion} D={result.dilation} "
        f"load={r.load} gamma={r.gamma_final:.4f} makespan={r.makespan} "
        f"ratio={r.makespan / denom:.3f}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance)
    try:
        sched = schedule_mod.decode(Path(args.schedule).read_text())
    except OSError as exc:
        print(f"cannot read {args.schedule}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    trace = simulate(instance, sched, capacity=args.capacity)
    requirements = CheckRequirements(
        capacity=args.capacity,
        makespan_bound=args.max_makespan,
        edge_wait_bound=args.max_wait,
    )
    report = check(trace, requirements)
    for result in report.results:
        status = "PASS" if result.passed else "FAIL"
        print(f"{result.name}: {status} ({result.detail})")
    if args.trace_csv is not None:
        with open(args.trace_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["edge", "slot", "load"])
            writer.writerows(loads_csv_rows(trace))
    if args.arrivals_csv is not None:
        with open(args.arrivals_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["packet", "arrival"])
            writer.writerows(arrivals_csv_rows(trace))
    verdict = "PASS" if report.ok else "FAIL"
    print(f"load={trace.max_load} makespan={trace.makespan} {verdict}")
    return EXIT_OK if report.ok else EXIT_FAILURE


def cmd_lowerbound_gen(args: argparse.Namespace) -> int:
    lb = lb_mod.generate(args.n, args.seed)
    _write_or_print(lb_mod.serialize(lb), args.out)
    return EXIT_OK


def cmd_lowerbound_solve(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance)
    opt = lb_mod.solve(instance, horizon=args.horizon)
    s = stats(instance)
    print(f"optimal_makespan={opt} C={s.congestion} D={s.dilation}")
    return EXIT_OK


def cmd_lowerbound_margin(args: argparse.Namespace) -> int:
    m = lb_mod.margin(args.eps)
    if m.holds:
        print(f"phi={_sci(m.phi_value)} < {_sci(m.collision_exponent)} : separation holds")
        return EXIT_OK
    print(f"phi={_sci(m.phi_value)} >= {_sci(m.collision_exponent)} : separation fails")
    return EXIT_FAILURE


def _bench_one(job: tuple[int, str, str, int]) -> tuple[dict | None, str | None]:
    index, seed, variant, delta = job
    instance = generate_random_instance(seed)
    s = stats(instance)
    config = FixerConfig(variant=variant, delta=delta, seed=seed)
    start = time.perf_counter()
    try:
        result = run_pipeline(instance, config)
    except (FixerError, OracleCapacityError) as exc:
        return None, f"job {index} ({variant}): {exc}"
    elapsed_ms = (time.perf_counter() - start) * 1000.0
    r = result.report
    row = {
        "instance": f"random-{index}",
        "seed": seed,
        "variant": variant,
        "delta": r.delta,
        "relax": f"{r.relax_max:g}",
        "gamma": f"{r.gamma_final:.6g}",
        "load": r.load,
        "makespan": r.makespan,
        "C": s.congestion,
        "D": s.dilation,
        "ratio": f"{r.makespan / (s.congestion + s.dilation):.4f}",
        "ms": f"{elapsed_ms:.1f}",
    }
    return row, None


def cmd_bench(args: argparse.Namespace) -> int:
    if args.suite != "random":
        print(f"unknown suite {args.suite!r}", file=sys.stderr)
        return EXIT_USAGE
    jobs = [
        (i, f"{args.seed}/bench{i}", variant, args.delta)
        for i in range(args.count)
        for variant in ("plain", "buffered")
    ]
    rows: list[dict] = []
    errors: list[str] = []
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(_bench_one, jobs))
    else:
        outcomes = [_bench_one(job) for job in jobs]
    for row, error in outcomes:
        if error is not None:
            errors.append(error)
        else:
            rows.append(row)
    fieldnames = [
        "instance", "seed", "variant", "delta", "relax", "gamma",
        "load", "makespan", "C", "D", "ratio", "ms",
    ]
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    for error in errors:
        print(error, file=sys.stderr)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_CAPACITY if errors else EXIT_OK


# --- wiring ------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="cd-router", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="validate an instance and print C, D")
    p.add_argument("instance")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("schedule", help="run the full scheduling pipeline")
    p.add_argument("instance")
    p.add_argument("--variant", choices=("plain", "buffered"), default="plain")
    p.add_argument("--delta", type=int, default=4)
    p.add_argument("--seed", default="0")
    p.add_argument("--strategy", choices=("resample", "greedy"), default="resample")
    p.add_argument("--finalize", choices=("ones", "greedy"), default="ones")
    p.add_argument("--out", default=None)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("simulate", help="replay a schedule and check feasibility")
    p.add_argument("instance")
    p.add_argument("schedule")
    p.add_argument("--capacity", type=int, default=1)
    p.add_argument("--max-makespan", type=int, default=None)
    p.add_argument("--max-wait", type=int, default=None)
    p.add_argument("--trace-csv", default=None)
    p.add_argument("--arrivals-csv", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("lowerbound", help="hard-instance experiments")
    lb_sub = p.add_subparsers(dest="lb_command", required=True)

    q = lb_sub.add_parser("gen", help="generate a random-permutation gadget")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--seed", default="0")
    q.add_argument("--out", default=None)
    q.set_defaults(func=cmd_lowerbound_gen)

    q = lb_sub.add_parser("solve", help="exact optimal makespan (small n)")
    q.add_argument("instance")
    q.add_argument("--horizon", type=int, default=None)
    q.set_defaults(func=cmd_lowerbound_solve)

    q = lb_sub.add_parser("margin", help="compare counting vs collision exponents")
    q.add_argument("--eps", type=float, required=True)
    q.set_defaults(func=cmd_lowerbound_margin)

    p = sub.add_parser("bench", help="run pipeline benchmarks, emit CSV")
    p.add_argument("--suite", default="random")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--delta", type=int, default=4)
    p.add_argument("--seed", default="0")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    return parser


def _configure_logging() -> None:
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    name = os.environ.get("CD_ROUTER_LOG", "error").lower()
    logging.basicConfig(level=levels.get(name, logging.ERROR), format="%(message)s")


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (InvalidInstanceError, schedule_mod.ScheduleError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (FixerError, OracleCapacityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
