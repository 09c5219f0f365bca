"""Command-line front end: ``sievegaps {build,census,dynamics,maxgap,hl,verify}``.

Exit codes: 0 success, 1 verification or data-integrity failure, 2 usage
error, 3 resource guard exceeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import resource
import sys
import time
from dataclasses import asdict, dataclass, field

from . import verify as verify_mod
from .census import DrivingTermTable, census, max_gap, stream_census
from .dynamics import advance_to, stage_ratio_sum, total_driving_terms, trajectory_counts_csv, trajectory_json_obj, trajectory_ratios_csv
from .errors import DomainError, PreconditionError, ResourceError, SieveGapsError, SnapshotError, StreamError
from .gapcycle import GapCycle, MaxGapSink, _stream_extension, base_cycle, extend, extended_phi
from .numtheory import euler_phi, format_decimal, hl_ratio, is_prime, primes_up_to
from .snapshot import read_snapshot, write_snapshot

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3

ENV_MAX_RESIDENT = "SIEVEGAPS_MAX_RESIDENT"
ENV_MAX_STREAM = "SIEVEGAPS_MAX_STREAM"
DEFAULT_MAX_RESIDENT = 1_100_000_000
DEFAULT_MAX_STREAM = 40_000_000_000

log = logging.getLogger("sievegaps")


class UsageError(SieveGapsError):
    pass


@dataclass
class StageReport:
    stage_prime: int | None
    modulus: str
    phi: int
    max_gap: int
    twins: int
    selected_rows: dict[str, dict[str, int]] = field(default_factory=dict)
    elapsed_s: float = 0.0
    peak_rss_mb: float = 0.0
    gaps: str | None = None

    @classmethod
    def of(cls, cycle: GapCycle, started: float) -> "StageReport":
        t = census(cycle, 6, 3)
        rows = {str(g): {str(j): n for j, n in t.row(g).items()} for g in (2, 4, 6)}
        return cls(
            cycle.modulus.largest_prime, str(cycle.modulus), cycle.phi, cycle.max_gap, t.twins, rows,
            round(time.perf_counter() - started, 3), _peak_rss_mb(), _short_gaps(cycle),
        )

    def text(self) -> str:
        lines = [f"{k}: {v}" for k, v in asdict(self).items()]
        return "\n".join(lines)


def _short_gaps(cycle: GapCycle, limit: int = 64) -> str | None:
    # small cycles are shown in full, digits run together when all gaps are single digits
    if cycle.phi > limit:
        return None
    sep = "" if cycle.max_gap < 10 else " "
    return sep.join(str(g) for g in cycle.tolist())


def _peak_rss_mb() -> float:
    return round(resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024, 1)


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        value = int(float(raw))
    except ValueError as exc:
        raise UsageError(f"{name}={raw!r} is not a number") from exc
    return value


def _prime_arg(text: str) -> int:
    try:
        p = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if not is_prime(p):
        raise argparse.ArgumentTypeError(f"{p} is not prime")
    return p


def _even_arg(text: str) -> int:
    try:
        g = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if g < 2 or g % 2:
        raise argparse.ArgumentTypeError(f"{g} is not a positive even integer")
    return g


def _positive_arg(text: str) -> int:
    try:
        n = int(float(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number")
    if n < 1:
        raise argparse.ArgumentTypeError(f"{n} must be positive")
    return n


def _emit(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _guard(size: int, limit: int, hint: str) -> None:
    if size > limit:
        raise ResourceError(f"{size} gaps exceed the resident limit {limit}; {hint}")


def _build_primorial(p: int, limit: int) -> GapCycle:
    primes = primes_up_to(p)
    cycle = base_cycle(2)
    for q in primes[1:]:
        _guard(extended_phi(cycle, q), limit, "use `census --stream-from SNAPSHOT --by Q` to stream the last stage")
        cycle = extend(cycle, q)
    return cycle


def cmd_build(args) -> int:
    started = time.perf_counter()
    if args.up_to is not None:
        cycle = _build_primorial(args.up_to, args.max_resident)
    else:
        if args.by is None:
            raise UsageError("--extend needs --by Q")
        base = read_snapshot(args.extend, limit=args.max_resident)
        _guard(extended_phi(base, args.by), args.max_resident, "use `census --stream-from` instead")
        cycle = extend(base, args.by)
    write_snapshot(cycle, args.out)
    report = StageReport.of(cycle, started)
    if args.format == "json":
        print(json.dumps(asdict(report), indent=2))
    else:
        print(report.text())
    return EXIT_OK


def _load_cycle(args) -> GapCycle:
    if getattr(args, "input", None):
        return read_snapshot(args.input, limit=args.max_resident)
    if getattr(args, "up_to", None):
        return _build_primorial(args.up_to, args.max_resident)
    raise UsageError("need --in PATH, --up-to P, or --stream-from PATH --by Q")


def _stream_base(args) -> GapCycle:
    if args.by is None:
        raise UsageError("--stream-from needs --by Q")
    base = read_snapshot(args.stream_from, limit=args.max_resident)
    size = extended_phi(base, args.by)
    if size > args.max_stream:
        raise ResourceError(f"stream of {size} gaps exceeds the stream limit {args.max_stream}")
    return base


def cmd_census(args) -> int:
    j_max = args.jmax if args.jmax is not None else args.gmax // 2
    if args.stream_from:
        table = stream_census(_stream_base(args), args.by, args.gmax, j_max)
    else:
        table = census(_load_cycle(args), args.gmax, j_max)
    _emit(table.to_json() if args.format == "json" else table.to_csv(), args.out)
    return EXIT_OK


def _read_table(path: str) -> DrivingTermTable:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return DrivingTermTable.from_json(text)
    return DrivingTermTable.from_csv(text)


def cmd_dynamics(args) -> int:
    table = _read_table(args.table)
    stages, dropped = advance_to(table, args.to)
    for d in dropped:
        log.warning("dropped row g=%d at stage %d (%s)", d.gap, d.stage, d.reason)
    if args.format == "json":
        _emit(json.dumps(trajectory_json_obj(stages, dropped, args.places), indent=2) + "\n", args.out)
    else:
        counts = trajectory_counts_csv(stages)
        ratios = trajectory_ratios_csv(stages, args.places)
        if args.ratios_out:
            _emit(counts, args.out)
            _emit(ratios, args.ratios_out)
        else:
            _emit(counts + "\n" + ratios, args.out)
    return EXIT_OK


def cmd_maxgap(args) -> int:
    if args.stream_from:
        base = _stream_base(args)
        sink = MaxGapSink()
        _stream_extension(base, args.by, sink)
        value = sink.max_gap
    else:
        value = max_gap(_load_cycle(args))
    print(value)
    return EXIT_OK


def cmd_hl(args) -> int:
    g = args.gap
    exact = hl_ratio(g)
    qbar, total = total_driving_terms(g)
    out = {
        "gap": g,
        "hl_ratio_exact": str(exact),
        "hl_ratio_decimal": format_decimal(exact, args.places),
        "largest_prime_factor": qbar,
        "total_driving_terms_at_largest_factor": total,
    }
    if args.stage is not None:
        s = stage_ratio_sum(g, args.stage)
        out["stage_prime"] = args.stage
        out["stage_ratio_sum_exact"] = str(s)
        out["stage_ratio_sum_decimal"] = format_decimal(s, args.places)
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_verify(args) -> int:
    outcomes = verify_mod.run(args.level)
    outcomes += [verify_mod.verify_snapshot_file(p) for p in args.snapshot or ()]
    for o in outcomes:
        print(o.line())
    failed = sum(not o.passed for o in outcomes)
    print(f"{len(outcomes) - failed}/{len(outcomes)} checks passed")
    return EXIT_FAIL if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sievegaps", description="Cycles of gaps in the stages of Eratosthenes sieve.")
    ap.add_argument("--max-resident", type=_positive_arg, default=None, help=f"max gaps held in memory (env {ENV_MAX_RESIDENT})")
    ap.add_argument("--max-stream", type=_positive_arg, default=None, help=f"max gaps in a stream (env {ENV_MAX_STREAM})")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build a cycle and write a .pgc snapshot")
    src = b.add_mutually_exclusive_group(required=True)
    src.add_argument("--up-to", type=_prime_arg, metavar="P")
    src.add_argument("--extend", metavar="SNAPSHOT")
    b.add_argument("--by", type=_prime_arg, metavar="Q")
    b.add_argument("--out", required=True)
    b.add_argument("--format", choices=("text", "json"), default="text")
    b.set_defaults(func=cmd_build)

    c = sub.add_parser("census", help="count driving terms by gap and length")
    src = c.add_mutually_exclusive_group(required=True)
    src.add_argument("--in", dest="input", metavar="PATH")
    src.add_argument("--up-to", type=_prime_arg, metavar="P")
    src.add_argument("--stream-from", metavar="PATH")
    c.add_argument("--by", type=_prime_arg, metavar="Q")
    c.add_argument("--gmax", type=_even_arg, required=True)
    c.add_argument("--jmax", type=_positive_arg)
    c.add_argument("--format", choices=("csv", "json"), default="csv")
    c.add_argument("--out")
    c.set_defaults(func=cmd_census)

    d = sub.add_parser("dynamics", help="advance a census table by the count recursion")
    d.add_argument("--table", required=True, help="census table (JSON or CSV)")
    d.add_argument("--to", type=_prime_arg, required=True)
    d.add_argument("--format", choices=("csv", "json"), default="csv")
    d.add_argument("--out")
    d.add_argument("--ratios-out")
    d.add_argument("--places", type=int, default=4)
    d.set_defaults(func=cmd_dynamics)

    m = sub.add_parser("maxgap", help="largest gap of a cycle")
    src = m.add_mutually_exclusive_group(required=True)
    src.add_argument("--in", dest="input", metavar="PATH")
    src.add_argument("--up-to", type=_prime_arg, metavar="P")
    src.add_argument("--stream-from", metavar="PATH")
    m.add_argument("--by", type=_prime_arg, metavar="Q")
    m.set_defaults(func=cmd_maxgap)

    h = sub.add_parser("hl", help="limiting and stage ratio sums for a gap")
    h.add_argument("--gap", type=_even_arg, required=True)
    h.add_argument("--stage", type=_prime_arg)
    h.add_argument("--places", type=int, default=4)
    h.set_defaults(func=cmd_hl)

    v = sub.add_parser("verify", help="run the invariant suites")
    v.add_argument("--level", choices=("quick", "full"), default="quick")
    v.add_argument("--snapshot", action="append", metavar="PATH", help="also verify this snapshot file")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.max_resident is None:
            args.max_resident = _env_int(ENV_MAX_RESIDENT, DEFAULT_MAX_RESIDENT)
        if args.max_stream is None:
            args.max_stream = _env_int(ENV_MAX_STREAM, DEFAULT_MAX_STREAM)
        return args.func(args)
    except ResourceError as exc:
        print(f"sievegaps: resource guard: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (UsageError, DomainError, PreconditionError) as exc:
        print(f"sievegaps: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SnapshotError, StreamError) as exc:
        print(f"sievegaps: {getattr(exc, 'code', 'stream')}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"sievegaps: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
