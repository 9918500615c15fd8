"""Command-line entry point: generate, solve, oracle, bench."""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time

from .bench import mann_kendall, run_bench, summarize, write_report, write_results
from .benders import (EbdConfig, EbdStatus, MasterBackend, StalledCycle, solve,
                      write_trace_csv)
from .instance import InstanceError, generate, read_instance, write_instance
from .oracle import Infeasible, solve_direct
from .sampler import SaConfig

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_ITERATION_LIMIT = 4
EXIT_INFEASIBLE = 5
EXIT_STALLED = 6


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be a positive finite number, got {text}")
    return v


def _size_list(text: str):
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise argparse.ArgumentTypeError("at least one size is required")
    return [_positive_int(p.strip()) for p in parts]


def _add_sa_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--reads", type=_positive_int, default=3000, help="SA reads per master solve")
    p.add_argument("--sweeps", type=_positive_int, default=3000, help="SA sweeps per read")
    p.add_argument("--penalty", type=_positive_float, default=0.55, help="initial cut penalty")
    p.add_argument("--epsilon", type=_positive_float, default=0.5, help="gap threshold")
    p.add_argument("--max-iters", type=_positive_int, default=100)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="benders-qubo",
                                     description="Benders decomposition with exact or annealing master.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random instance as JSON")
    g.add_argument("--n", type=_positive_int, required=True)
    g.add_argument("--p", type=_positive_int, required=True)
    g.add_argument("--m", type=_positive_int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    s = sub.add_parser("solve", help="run the decomposition on one instance")
    s.add_argument("--instance", required=True)
    s.add_argument("--master", choices=["exact", "sa"], default="exact")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trace", help="write the per-iteration trace CSV here")
    _add_sa_flags(s)

    o = sub.add_parser("oracle", help="solve by full enumeration of x")
    o.add_argument("--instance", required=True)

    b = sub.add_parser("bench", help="success rate and master time versus n")
    b.add_argument("--sizes", type=_size_list, default=[5, 10, 20, 40])
    b.add_argument("--trials", type=_positive_int, default=20)
    b.add_argument("--master", choices=["exact", "sa", "both"], default="both")
    b.add_argument("--p", type=_positive_int, default=5)
    b.add_argument("--m", type=_positive_int, default=5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", required=True, help="results CSV")
    b.add_argument("--report", help="per-size summary CSV")
    b.add_argument("--trace-dir", help="write one trace CSV per run into this directory")
    _add_sa_flags(b)
    return parser


def _config(args, backend: str) -> EbdConfig:
    return EbdConfig(
        epsilon=args.epsilon,
        max_iterations=args.max_iters,
        master_backend=MasterBackend(backend),
        sa=SaConfig(num_reads=args.reads, num_sweeps=args.sweeps, seed=args.seed),
        penalty=args.penalty,
    )


def _load(path):
    try:
        return read_instance(path)
    except OSError as exc:
        print(f"error: cannot read {path}: {exc.strerror}", file=sys.stderr)
    except InstanceError as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
    return None


def cmd_generate(args) -> int:
    inst = generate(args.n, args.p, args.m, args.seed)
    try:
        write_instance(inst, args.out)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    if inst is None:
        return EXIT_IO
    start = time.perf_counter()
    code = EXIT_OK
    try:
        res = solve(inst, _config(args, args.master))
        trace, status, iterations = res.trace, res.status.value, res.iterations
        objective = res.solution.objective if res.solution else math.nan
        code = {EbdStatus.CONVERGED: EXIT_OK,
                EbdStatus.ITERATION_LIMIT: EXIT_ITERATION_LIMIT,
                EbdStatus.MASTER_INFEASIBLE: EXIT_INFEASIBLE}[res.status]
    except StalledCycle as exc:
        trace, status, iterations, objective = exc.trace, "StalledCycle", len(exc.trace), math.nan
        code = EXIT_STALLED
    wall = time.perf_counter() - start
    if args.trace:
        try:
            write_trace_csv(trace, args.trace)
        except OSError as exc:
            print(f"error: cannot write {args.trace}: {exc.strerror}", file=sys.stderr)
            return EXIT_IO
    print(f"status: {status}")
    print(f"objective: {objective!r}")
    print(f"iterations: {iterations}")
    print(f"wall_s: {wall:.3f}")
    return code


def cmd_oracle(args) -> int:
    inst = _load(args.instance)
    if inst is None:
        return EXIT_IO
    try:
        sol = solve_direct(inst)
    except Infeasible:
        print("status: Infeasible")
        return EXIT_INFEASIBLE
    print(f"objective: {sol.objective!r}")
    print("x: " + " ".join(str(int(v)) for v in sol.x))
    print("y: " + " ".join(repr(float(v)) for v in sol.y))
    return EXIT_OK


def cmd_bench(args) -> int:
    backends = [MasterBackend.EXACT, MasterBackend.QUBO_SA] if args.master == "both" \
        else [MasterBackend(args.master)]
    if args.trace_dir:
        os.makedirs(args.trace_dir, exist_ok=True)

    def progress(row):
        logging.getLogger(__name__).info("n=%d trial=%d %s converged=%s", row.size, row.trial,
                                         row.backend, row.converged)

    rows = run_bench(args.sizes, args.trials, backends, _config(args, backends[0].value),
                     args.p, args.m, args.seed, trace_dir=args.trace_dir, progress=progress)
    summary = summarize(rows)
    try:
        write_results(rows, args.out)
        if args.report:
            write_report(summary, args.report)
    except OSError as exc:
        print(f"error: cannot write results: {exc.strerror}", file=sys.stderr)
        return EXIT_IO

    print("size backend trials success_rate master_ms_mean")
    for s in summary:
        print(f"{s['size']} {s['backend']} {s['trials']} {s['success_rate']:.3f} {s['master_ms_mean']:.1f}")
    for backend in sorted({s["backend"] for s in summary}):
        rates = [s["success_rate"] for s in summary if s["backend"] == backend]
        if len(rates) >= 3:
            mk = mann_kendall(rates)
            print(f"trend {backend}: S={mk.s} p_increasing={mk.p_increasing:.4f} "
                  f"p_decreasing={mk.p_decreasing:.4f}")
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "oracle": cmd_oracle, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
