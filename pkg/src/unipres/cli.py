"""Batch front end: read declarations plus sentences, decide, report.

Human output is one verdict line per sentence; structured output is
line-delimited JSON records with stable field names (verdict, witness,
case_trace, log, timings_ms), byte-identical across runs apart from the
timings field.  Exit codes: 0 sat, 1 unsat, 2 unknown, 64 input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ._ast import ParseError, PolyAtom, Verdict
from .formula import Formula, normalize, parse, parse_multi
from .power_solver import SolveOptions, _combine
from .power_solver import decide as decide_power
from .poly_solver import decide_poly
from . import encoder

__all__ = ["RunConfig", "SolveOutcome", "solve_formula", "run", "read_records", "main"]

ENV_PREFIX = "UNIPRES_"

EXIT_SAT = 0
EXIT_UNSAT = 1
EXIT_UNKNOWN = 2
EXIT_INPUT = 64


@dataclass
class RunConfig:
    paths: list
    bound: int = 10**6
    scan_cap: int = 10**6
    fmt: str = "human"
    trace: bool = False
    multi: bool = False

    def __post_init__(self) -> None:
        if self.bound < 1 or self.scan_cap < 1:
            raise ValueError("bounds must be >= 1")
        if self.fmt not in ("human", "json-lines"):
            raise ValueError(f"unknown format {self.fmt!r}")

    def options(self) -> SolveOptions:
        return SolveOptions(enum_bound=self.bound, scan_cap=self.scan_cap)


@dataclass
class SolveOutcome:
    verdict: Verdict
    negated: bool
    case_trace: list = field(default_factory=list)
    log: list = field(default_factory=list)

    @property
    def printable(self) -> str:
        v = self.verdict
        if v.is_sat:
            return f"sat x={v.witness}" if v.witness is not None else "sat"
        if v.is_unsat:
            return "unsat"
        return f"unknown ({v.reason}, bound={v.bound})"

    @property
    def exit_code(self) -> int:
        return {"sat": EXIT_SAT, "unsat": EXIT_UNSAT, "unknown": EXIT_UNKNOWN}[self.verdict.status]


def solve_formula(f: Formula, options: SolveOptions | None = None) -> SolveOutcome:
    """Decide a sentence: normalize, route each disjunct, combine, negate."""
    options = options or SolveOptions()
    nf = normalize(f, enum_bound=options.enum_bound)
    verdicts = []
    trace: list = []
    for system in nf.systems:
        if system.resolved is not None:
            verdicts.append(system.resolved)
        elif any(isinstance(a, PolyAtom) for a in system.positives + system.negatives):
            verdicts.append(decide_poly(system, options))
        else:
            verdicts.append(decide_power(system, options))
        trace.extend(system.trace)
    inner = _combine(verdicts)
    log = [t for t in trace if t.startswith(("redundant", "coalesce", "poly-redundant", "dedup"))]
    if not nf.negated:
        return SolveOutcome(inner, False, trace, log)
    # forall-sentence: true iff the negated body is unsatisfiable.
    if inner.is_sat:
        out = Verdict("unsat", witness=inner.witness)  # witness = counterexample
    elif inner.is_unsat:
        out = Verdict("sat")  # universally true; no single witness
    else:
        out = inner
    return SolveOutcome(out, True, trace, log)


def _record(path: str, index: int, outcome: SolveOutcome, ms: float, trace: bool) -> dict:
    rec = {
        "file": path,
        "index": index,
        "verdict": outcome.verdict.status,
        "witness": outcome.verdict.witness,
        "reason": outcome.verdict.reason,
        "bound": outcome.verdict.bound,
        "negated": outcome.negated,
        "case_trace": list(outcome.case_trace),
        "log": list(outcome.log),
        "timings_ms": round(ms, 3),
    }
    if not trace:
        rec["case_trace"] = [t for t in rec["case_trace"] if not t.startswith("depress")]
    return rec


def _solve_file(path: str, config: RunConfig):
    text = sys.stdin.read() if path == "-" else open(path, "r", encoding="utf-8").read()
    formulas = parse_multi(text) if config.multi else [parse(text)]
    out = []
    for i, f in enumerate(formulas):
        t0 = time.perf_counter()
        outcome = solve_formula(f, config.options())
        ms = (time.perf_counter() - t0) * 1000.0
        out.append((i, outcome, ms))
    return out


def run(config: RunConfig, stream=None) -> int:
    """Decide every input; returns the worst exit code seen."""
    stream = stream or sys.stdout
    try:
        if len(config.paths) == 1:
            results = {config.paths[0]: _solve_file(config.paths[0], config)}
        else:
            with ThreadPoolExecutor(max_workers=min(4, len(config.paths))) as pool:
                futures = {p: pool.submit(_solve_file, p, config) for p in config.paths}
                results = {p: fut.result() for p, fut in futures.items()}
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    code = EXIT_SAT
    many = len(config.paths) > 1 or config.multi
    for path in config.paths:
        for index, outcome, ms in results[path]:
            if config.fmt == "json-lines":
                print(json.dumps(_record(path, index, outcome, ms, config.trace), sort_keys=True), file=stream)
            else:
                prefix = f"{path}[{index}]: " if many else ""
                line = prefix + outcome.printable
                if config.trace and outcome.case_trace:
                    line += "  ; " + " ".join(outcome.case_trace)
                print(line, file=stream)
            code = max(code, outcome.exit_code)
    return code


def read_records(text: str) -> list[dict]:
    """Parse structured (json-lines) output back into records."""
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def _env_default(name: str, cast, fallback):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None:
        return fallback
    if cast is bool:
        return raw.lower() in ("1", "true", "yes", "on")
    return cast(raw)


def _solve_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="unipres", description=__doc__)
    ap.add_argument("paths", nargs="+", help="input files ('-' for stdin)")
    ap.add_argument("--bound", type=int, default=_env_default("BOUND", int, 10**6),
                    help="auxiliary-unknown bound for finite-case enumeration")
    ap.add_argument("--scan-cap", type=int, default=_env_default("SCAN_CAP", int, 10**6),
                    help="candidate cap for witness scans")
    ap.add_argument("--format", dest="fmt", choices=("human", "json-lines"),
                    default=_env_default("FORMAT", str, "human"))
    ap.add_argument("--trace", action="store_true",
                    default=_env_default("TRACE", bool, False))
    ap.add_argument("--multi", action="store_true",
                    default=_env_default("MULTI", bool, False),
                    help="allow several sentences per file")
    return ap


def _encode_main(argv) -> int:
    ap = argparse.ArgumentParser(prog="unipres encode",
                                 description="Encode h(x1..xn) = 0 over <0,1,+,-,Z^2>.")
    ap.add_argument("poly", help="polynomial term or a file containing one")
    ap.add_argument("--chain", type=int, default=encoder.BUCHI_CHAIN,
                    help="square-chain length (Buchi constant; default 5)")
    args = ap.parse_args(argv)
    text = args.poly
    if os.path.exists(text):
        text = open(text, "r", encoding="utf-8").read()
    try:
        h = encoder.parse_poly(text)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(encoder.format_square_formula(encoder.encode(h, chain_len=args.chain)))
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "encode":
        return _encode_main(argv[1:])
    args = _solve_parser().parse_args(argv)
    try:
        config = RunConfig(args.paths, args.bound, args.scan_cap, args.fmt, args.trace, args.multi)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return run(config)


if __name__ == "__main__":
    raise SystemExit(main())
