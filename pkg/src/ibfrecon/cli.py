"""Command-line front end.

Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.
``IBFRECON_OUTPUT_DIR`` sets the directory for files written without ``-o``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from typing import Optional, Sequence

from . import counting, markov, simulation, thresholds
from .hashing import sample_distinct_elements
from .protocol import Mode, run_iterative
from .simulation import TrialConfig

OUTPUT_DIR_ENV = "IBFRECON_OUTPUT_DIR"

JSON_SCHEMA = {
    "type": "object",
    "required": ["command", "params", "columns", "rows", "notes"],
    "properties": {
        "command": {"type": "string"},
        "params": {"type": "object"},
        "columns": {"type": "array", "items": {"type": "string"}},
        "rows": {"type": "array", "items": {"type": "array"}},
        "notes": {"type": "array", "items": {"type": "string"}},
    },
    "additionalProperties": False,
}


class UsageError(Exception):
    pass


def parse_range(text: str) -> list[int]:
    """``a:b:s`` (inclusive stop), ``a,b,c`` or a single integer."""
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) == 2:
                parts.append(1)
            start, stop, step = parts
            if step <= 0:
                raise ValueError
            return list(range(start, stop + 1, step))
        return [int(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid range {text!r}") from None


def parse_rates(text: str) -> list[Fraction]:
    try:
        rates = [Fraction(p) for p in text.split(",")]
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"invalid rate list {text!r}") from None
    if any(not 0 < r <= 1 for r in rates):
        raise argparse.ArgumentTypeError("rates must lie in (0, 1]")
    return rates


def _subparser(subs, name: str, help: str) -> argparse.ArgumentParser:
    # -h means "number of hash functions" here, so help moves to --help
    p = subs.add_parser(name, help=help, add_help=False)
    p.add_argument("--help", action="help", help="show this help message and exit")
    return p


def _output_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("-o", "--output", help=f"output file (default: stdout, or ${OUTPUT_DIR_ENV}/<name>)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ibfrecon", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)

    p = _subparser(subs, "bound", "failure-probability bound for partial extraction")
    p.add_argument("-N", type=int, required=True, help="number of cells")
    p.add_argument("-h", dest="h", type=int, required=True, help="number of hash functions")
    p.add_argument("-f", type=parse_range, required=True, help="stored elements (int, list or a:b:s)")
    p.add_argument("-R", type=parse_rates, default=list(simulation.DEFAULT_THRESHOLDS),
                   help="extraction-rate thresholds, comma separated (default 0.1,0.2,0.5,1)")
    p.add_argument("--exact", action="store_true", help="print exact fractions")
    _output_args(p)

    p = _subparser(subs, "threshold", "threshold constants c_h")
    p.add_argument("--hs", type=parse_range, default=[2, 3, 4, 5, 6, 7], help="h values (default 2:7)")
    p.add_argument("--tol", type=float, default=1e-6)
    _output_args(p)

    p = _subparser(subs, "simulate", "Monte Carlo experiments")
    p.add_argument("kind", choices=["extract", "reconcile"])
    p.add_argument("-N", type=int, default=120)
    p.add_argument("-h", dest="h", type=parse_range, default=[3], help="hash function count(s)")
    p.add_argument("-f", type=parse_range, default=[60], help="elements per filter (extract)")
    p.add_argument("-d", type=parse_range, default=list(range(20, 201, 20)),
                   help="difference sizes (reconcile), default 20:200:20")
    p.add_argument("-R", type=parse_rates, default=list(simulation.DEFAULT_THRESHOLDS))
    p.add_argument("-t", "--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--layout", choices=["partitioned", "distinct"], default="partitioned",
                   help="cell layout for extract trials")
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.CLIENT_SERVER.value)
    p.add_argument("--max-rounds", type=int, default=None)
    p.add_argument("--bound-output", help="also write the model bound CSV here (reconcile)")
    _output_args(p)

    p = _subparser(subs, "rounds-bound", "model upper bound on expected protocol rounds")
    p.add_argument("-N", type=int, default=120)
    p.add_argument("-h", dest="h", type=parse_range, default=[2, 3, 4, 5])
    p.add_argument("-f", type=parse_range, default=list(range(20, 201, 20)))
    _output_args(p)

    p = _subparser(subs, "demo", "run one reconciliation session and print its transcript")
    p.add_argument("--mode", default=Mode.CLIENT_SERVER.value)
    p.add_argument("-N", type=int, default=120)
    p.add_argument("-h", dest="h", type=int, default=3)
    p.add_argument("--a-only", type=int, default=3)
    p.add_argument("--b-only", type=int, default=2)
    p.add_argument("--common", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-rounds", type=int, default=50)
    return parser


def _check_divisible(N: int, hs: Sequence[int]) -> None:
    for h in hs:
        if h < 1 or N < 1 or N % h:
            raise UsageError(f"N={N} must be a positive multiple of h={h}")


def _emit(args, name: str, columns: list[str], rows: list[list], notes: list[str],
          params: dict, sep: str = ",") -> Optional[str]:
    if args.format == "json":
        text = json.dumps({"command": name, "params": params, "columns": columns,
                           "rows": rows, "notes": notes}, indent=2) + "\n"
    else:
        lines = [sep.join(columns)] + [sep.join(str(v) for v in r) for r in rows]
        text = "\n".join(lines) + "\n"
    return _write(args.output, f"{name}.{args.format}", text)


def _write(path: Optional[str], default_name: str, text: str) -> Optional[str]:
    if path is None and os.environ.get(OUTPUT_DIR_ENV):
        path = os.path.join(os.environ[OUTPUT_DIR_ENV], default_name)
    if path is None:
        sys.stdout.write(text)
        return None
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def cmd_bound(args) -> int:
    _check_divisible(args.N, [args.h])
    n_h = args.N // args.h
    rows = []
    for f in args.f:
        if f < 1:
            raise UsageError("f must be positive")
        regime = thresholds.classify(args.N, f, args.h) if args.h >= 2 else None
        main = counting.goodrich_main_term(args.N, args.h, f)
        main_s = (counting.format_prob(main, exact=args.exact)
                  if regime is thresholds.Regime.UNDER else "N/A")
        for R in args.R:
            b = counting.failure_bound(n_h, f, args.h, R)
            rows.append([args.h, f, simulation._fmt_rate(R), counting.format_prob(b, exact=args.exact),
                         main_s, regime.value if regime else "n/a"])
    _emit(args, "bound", ["h", "f", "R", "bound", "main_term", "regime"], rows, [],
          {"N": args.N, "h": args.h, "f": args.f, "R": [str(r) for r in args.R], "exact": args.exact})
    return 0


def cmd_threshold(args) -> int:
    rows = []
    for h in args.hs:
        if h < 2:
            raise UsageError("h must be at least 2")
        computed = f"{thresholds.compute_c_h(h, args.tol):.3f}" if h >= 3 else "N/A"
        table = thresholds.C_TABLE.get(h)
        rows.append([h, computed, f"{float(table):.3f}" if table is not None else "N/A"])
    _emit(args, "threshold", ["h", "c_h", "table"], rows,
          ["h=2 has no supremum definition; the table constant 2 is used"],
          {"hs": args.hs, "tol": args.tol})
    return 0


def cmd_simulate(args) -> int:
    _check_divisible(args.N, args.h)
    if args.trials < 1:
        raise UsageError("trials must be at least 1")
    if args.kind == "extract":
        stats = []
        for h in args.h:
            for f in args.f:
                if f < 0:
                    raise UsageError("f must be non-negative")
                cfg = TrialConfig(args.N, h, f, args.trials, args.seed, tuple(args.R), args.layout)
                st = simulation.run_extraction_trials(cfg, workers=args.workers)
                stats.append(st)
                print(f"h={h} f={f} mean_rate={float(st.mean_rate):.4f} "
                      + " ".join(f"fail(R={float(R):g})={float(st.failure_fraction(R)):.4g}"
                                 for R in cfg.thresholds), file=sys.stderr)
        text = simulation.extraction_csv(stats)
        where = _emit_table(args, f"extract_N{args.N}", text, ",", _sim_params(args))
    else:
        by_h = {}
        for h in args.h:
            if args.N // h < 2:
                raise UsageError("need at least two cells per hash block")
            by_h[h] = simulation.run_rounds_experiment(
                args.N, h, args.d, args.trials, args.seed, workers=args.workers,
                max_rounds=args.max_rounds, mode=args.mode)
            for p in by_h[h]:
                print(f"h={h} d={p.d} mean_rounds={p.mean:.4f} stderr={p.stderr:.4f} "
                      f"reconciled={p.reconciled}/{p.trials}", file=sys.stderr)
        text = simulation.rounds_csv(by_h)
        where = _emit_table(args, f"reconcile_N{args.N}", text, ";", _sim_params(args))
        if args.bound_output:
            _write(args.bound_output, "", simulation.rounds_bound_csv(args.N, args.h, args.d))
    if where:
        print(f"wrote {where}", file=sys.stderr)
    return 0


def _sim_params(args) -> dict:
    return {"kind": args.kind, "N": args.N, "h": args.h, "f": args.f, "d": args.d,
            "R": [str(r) for r in args.R], "trials": args.trials, "seed": args.seed,
            "layout": args.layout, "mode": args.mode, "max_rounds": args.max_rounds}


def _emit_table(args, name: str, text: str, sep: str, params: dict) -> Optional[str]:
    if args.format == "csv":
        return _write(args.output, f"{name}.csv", text)
    header, *body = text.splitlines()
    rows = [line.split(sep) for line in body]
    notes = [f"cell layout: {args.layout}"] if args.kind == "extract" else []
    return _emit(args, name, header.split(sep), rows, notes, params)


def cmd_rounds_bound(args) -> int:
    _check_divisible(args.N, args.h)
    if any(f < 0 for f in args.f):
        raise UsageError("f must be non-negative")
    print(f"note: {markov.RESIDUAL_NOTE}", file=sys.stderr)
    if args.format == "csv":
        _write(args.output, "rounds_bound.csv", simulation.rounds_bound_csv(args.N, args.h, args.f))
        return 0
    tables = {h: markov.expected_rounds_table(max(args.f), markov.MarkovConfig(args.N, h)) for h in args.h}
    rows = [[f] + [round(tables[h][f], 6) for h in args.h] for f in args.f]
    _emit(args, "rounds_bound", ["x"] + [str(h) for h in args.h], rows, [markov.RESIDUAL_NOTE],
          {"N": args.N, "h": args.h, "f": args.f})
    return 0


def cmd_demo(args) -> int:
    try:
        mode = Mode(args.mode)
    except ValueError:
        raise UsageError(f"unknown mode {args.mode!r}; choose from {[m.value for m in Mode]}") from None
    _check_divisible(args.N, [args.h])
    if args.N // args.h < 2:
        raise UsageError("need at least two cells per hash block")
    if min(args.a_only, args.b_only, args.common) < 0:
        raise UsageError("set sizes must be non-negative")
    xs = sample_distinct_elements(args.seed, args.a_only + args.b_only + args.common)
    common = xs[args.a_only + args.b_only:]
    S_A = set(xs[:args.a_only]) | set(common)
    S_B = set(xs[args.a_only:args.a_only + args.b_only]) | set(common)
    print(f"mode={mode.value} N={args.N} h={args.h} |S_A|={len(S_A)} |S_B|={len(S_B)} "
          f"d={len(S_A ^ S_B)}")
    A, B, tr = run_iterative(S_A, S_B, args.N, args.h, args.seed, args.max_rounds, mode)
    for r in tr.round_log:
        print(f"round {r.round}: sender={r.sender} d {r.d_before} -> {r.d_after} "
              f"extracted +{r.extracted_positive}/-{r.extracted_negative} ibf_bytes={r.ibf_bytes}")
    print(f"{tr.rounds} rounds, {len(tr.entries)} messages, {tr.total_bytes} bytes: {tr.outcome.value}")
    return 0


COMMANDS = {
    "bound": cmd_bound,
    "threshold": cmd_threshold,
    "simulate": cmd_simulate,
    "rounds-bound": cmd_rounds_bound,
    "demo": cmd_demo,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ibfrecon {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, RuntimeError, ValueError) as exc:
        print(f"ibfrecon {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
