"""Command-line front end.

Exit codes: 0 success, 1 guarantee violation, 2 usage error, 3 I/O or
file-format error.  Reports go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .bench import BenchReport, SuiteParams, run_accuracy_suite, run_scaling_suite
from .datasets import GENERATORS, box_queries, generate
from .errors import GuaranteeViolation, IndexFormatError, PointDataError, UsageError
from .index import METHODS, build_index, read_index, write_index
from .metric import MetricKind, PointSet, _extremes, exact_nn, parse_points, read_points, write_points
from .prune import prune_figure_dump

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


def _eps(text: str) -> float:
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"eps must lie in (0, 1), got {v}")
    return v


def _alpha(text: str) -> float:
    v = float(text)
    if not v > 1.0:
        raise argparse.ArgumentTypeError(f"alpha must exceed 1, got {v}")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _sizes(text: str) -> list[int]:
    return [_positive_int(s) for s in text.split(",") if s.strip()]


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _render(obj: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        keys = list(obj)
        return ",".join(keys) + "\n" + ",".join(str(obj[k]) for k in keys) + "\n"
    width = max(len(k) for k in obj)
    return "".join(f"{k.ljust(width)}  {v}\n" for k, v in obj.items())


def _render_report(report: BenchReport, fmt: str, timings: bool) -> str:
    if fmt == "json":
        return report.to_json(timings)
    if fmt == "csv":
        return report.to_csv(timings)
    return report.to_text(timings)


def _load_input(args) -> PointSet:
    return read_points(args.input, args.metric)


# -- subcommands -------------------------------------------------------------


def cmd_ingest(args) -> int:
    ps = _load_input(args)
    diam, cp = _extremes(ps)
    info = {"n": ps.n, "d": ps.d, "metric": ps.metric.label, "diameter": diam}
    if ps.n >= 2:
        info.update(closest_pair=cp, spread=diam / cp)
    _emit(_render(info, args.format), args.out)
    return EXIT_OK


def cmd_generate(args) -> int:
    pts = generate(args.generator, args.n, args.d, args.seed)
    if args.out:
        write_points(args.out, pts)
    else:
        for row in pts:
            sys.stdout.write(" ".join(repr(float(x)) for x in row) + "\n")
    return EXIT_OK


def cmd_build(args) -> int:
    ps = _load_input(args)
    t0 = time.perf_counter()
    index = build_index(ps, args.method, eps=args.eps, alpha=args.alpha)
    seconds = time.perf_counter() - t0
    size = write_index(args.out, index)
    info = {
        "method": args.method,
        "n": ps.n,
        "d": ps.d,
        "metric": ps.metric.label,
        "edges": index.edge_count,
        "edges_per_point": index.edge_count / ps.n,
        "index_bytes": size,
        "index": args.out,
    }
    if args.method == "perm":
        friends = index.perm.friend_count()
        info["friend_list_total"] = friends
        if friends != index.edge_count:
            print("edge count differs from total friend-list size", file=sys.stderr)
            return EXIT_VIOLATION
    if args.timings:
        info["build_seconds"] = seconds
    _emit(_render(info, args.format), None)
    return EXIT_OK


def _parse_point(text: str) -> np.ndarray:
    return parse_points(text)[0]


def cmd_query(args) -> int:
    index = read_index(args.index)
    if args.point is not None:
        qs = [_parse_point(args.point)]
    else:
        with open(args.queries, "r", encoding="utf-8") as fh:
            qs = list(parse_points(fh.read()))
    records = []
    worst = 1.0
    for q in qs:
        r = index.query(q, early_stop=args.early_stop, beam=args.beam)
        rec = {
            "answer": r.answer,
            "coords": index.ps.coords[r.answer].tolist(),
            "dist": r.dist,
            "hops": r.hops,
            "edges_scanned": r.edges_scanned,
            "distance_evals": r.distance_evals,
            "early_stopped": r.early_stopped,
        }
        if r.phase_hops is not None:
            rec["phase_hops"] = list(r.phase_hops)
        if args.oracle:
            oi, od = exact_nn(index.ps, q)
            ratio = r.dist / od if od > 0 else (1.0 if r.dist == 0 else float("inf"))
            rec.update(oracle_index=oi, oracle_dist=od, ratio=ratio)
            worst = max(worst, ratio)
        records.append(rec)
    if args.format == "json":
        text = json.dumps(records if len(records) > 1 else records[0], indent=2, sort_keys=True) + "\n"
    else:
        text = "".join(_render({k: v for k, v in rec.items()}, args.format) for rec in records)
    _emit(text, args.out)
    if args.oracle and index.method != "diskann-slow" and worst > 1.0 + index.eps:
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_bench(args) -> int:
    params = SuiteParams(eps=args.eps, alpha=args.alpha, early_stop=args.early_stop, beam=args.beam)
    if args.index:
        index = read_index(args.index)
        ps = index.ps
        params.eps = index.eps if index.method != "diskann-slow" else params.eps
        params.alpha = index.alpha if index.method == "diskann-slow" else params.alpha
        qs = box_queries(ps.coords, args.queries, args.seed + 1)
        report = run_accuracy_suite(ps, index.method, params, qs, index=index, threads=args.threads,
                                    generator=args.index, seed=args.seed)
    else:
        if args.input:
            ps = _load_input(args)
            label = args.input
        else:
            ps = PointSet.from_array(generate(args.generator, args.n, args.d, args.seed), args.metric)
            label = args.generator
        qs = box_queries(ps.coords, args.queries, args.seed + 1)
        report = run_accuracy_suite(ps, args.method, params, qs, threads=args.threads,
                                    generator=label, seed=args.seed)
    _emit(_render_report(report, args.format, args.timings), args.out)
    return EXIT_OK if report.ok else EXIT_VIOLATION


def cmd_scaling(args) -> int:
    report = run_scaling_suite(
        args.generator, args.sizes, args.eps, methods=args.methods.split(","), d=args.d,
        seed=args.seed, num_queries=args.queries, alpha=args.alpha,
    )
    _emit(_render_report(report, args.format, args.timings), args.out)
    return EXIT_OK if report.ok else EXIT_VIOLATION


def cmd_prune_fig(args) -> int:
    if args.input:
        ps = _load_input(args)
    else:
        ps = PointSet.from_array(generate(args.generator, args.n, 2, args.seed), args.metric)
    fig = prune_figure_dump(ps, args.vertex, args.alpha)
    _emit(fig.to_csv(), args.out)
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(fig.to_svg())
    print(f"selected {len(fig.selected)} centers, {len(fig.disks)} disks", file=sys.stderr)
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="navgraph", description="Navigable graphs for approximate nearest-neighbor search.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, formats=("text", "json", "csv")):
        sp.add_argument("--metric", default="l2", choices=[m.label for m in MetricKind])
        sp.add_argument("--format", default="text", choices=formats)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=_positive_int, default=1)

    sp = sub.add_parser("ingest", help="validate a point file and print n, d, diameter, spread")
    sp.add_argument("--input", required=True)
    sp.add_argument("--out")
    common(sp)
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("generate", help="write a seeded synthetic point file")
    sp.add_argument("--generator", default="uniform", choices=sorted(GENERATORS))
    sp.add_argument("--n", type=_positive_int, default=1000)
    sp.add_argument("--d", type=_positive_int, default=2)
    sp.add_argument("--out")
    common(sp)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("build", help="build an index file")
    sp.add_argument("--input", required=True)
    sp.add_argument("--method", default="perm", choices=METHODS)
    sp.add_argument("--eps", type=_eps, default=0.25)
    sp.add_argument("--alpha", type=_alpha, default=2.0)
    sp.add_argument("--out", required=True, help="index file to write")
    sp.add_argument("--timings", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_build)

    sp = sub.add_parser("query", help="answer queries from an index file")
    sp.add_argument("--index", required=True)
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--point", help='query coordinates, e.g. "0.3,0.7"')
    g.add_argument("--queries", help="file of query points")
    sp.add_argument("--oracle", action="store_true", help="also report the exact answer and the ratio")
    sp.add_argument("--early-stop", action="store_true")
    sp.add_argument("--beam", type=_positive_int)
    sp.add_argument("--out")
    common(sp)
    sp.set_defaults(func=cmd_query)

    sp = sub.add_parser("bench", help="accuracy suite against the brute-force oracle")
    src = sp.add_mutually_exclusive_group()
    src.add_argument("--input")
    src.add_argument("--index")
    sp.add_argument("--generator", default="uniform", choices=sorted(GENERATORS))
    sp.add_argument("--n", type=_positive_int, default=1000)
    sp.add_argument("--d", type=_positive_int, default=2)
    sp.add_argument("--method", default="perm", choices=METHODS)
    sp.add_argument("--eps", type=_eps, default=0.25)
    sp.add_argument("--alpha", type=_alpha, default=2.0)
    sp.add_argument("--queries", type=_positive_int, default=100)
    sp.add_argument("--early-stop", action="store_true")
    sp.add_argument("--beam", type=_positive_int)
    sp.add_argument("--timings", action="store_true", help="include wall-clock build time")
    sp.add_argument("--out")
    common(sp)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("scaling", help="edge-count growth over a series of sizes")
    sp.add_argument("--generator", default="uniform", choices=sorted(GENERATORS))
    sp.add_argument("--sizes", type=_sizes, default=[250, 500, 1000, 2000, 4000])
    sp.add_argument("--d", type=_positive_int, default=2)
    sp.add_argument("--methods", default="perm,wspd")
    sp.add_argument("--eps", type=_eps, default=0.5)
    sp.add_argument("--alpha", type=_alpha, default=2.0)
    sp.add_argument("--queries", type=_positive_int, default=50)
    sp.add_argument("--timings", action="store_true")
    sp.add_argument("--out")
    common(sp, formats=("csv", "json", "text"))
    sp.set_defaults(func=cmd_scaling, format="csv")

    sp = sub.add_parser("prune-fig", help="dump robust-prune centers and Apollonius disks")
    sp.add_argument("--input")
    sp.add_argument("--generator", default="island", choices=sorted(GENERATORS))
    sp.add_argument("--n", type=_positive_int, default=10000)
    sp.add_argument("--vertex", type=int, default=0)
    sp.add_argument("--alpha", type=_alpha, default=4.0)
    sp.add_argument("--out", help="CSV output (stdout when omitted)")
    sp.add_argument("--svg", help="optional SVG rendering")
    common(sp)
    sp.set_defaults(func=cmd_prune_fig)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "scaling":
        for m in args.methods.split(","):
            if m not in METHODS:
                parser.error(f"unknown method {m!r}")
    try:
        return args.func(args)
    except GuaranteeViolation as exc:
        print(f"navgraph: guarantee violated: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except UsageError as exc:
        print(f"navgraph: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PointDataError, IndexFormatError, OSError) as exc:
        print(f"navgraph: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"navgraph: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
