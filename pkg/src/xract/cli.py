"""Operator command line: thin argument parsing over the library.

Exit codes: 0 success, 1 operational failure (diagnostic on stderr), 2 usage.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from xract.errors import XractError


class UsageError(XractError):
    """Bad invocation caught after parsing; exits with the usage code."""


def _cmd_simulate(args: argparse.Namespace) -> int:
    from xract.simulator import ScenarioSpec, generate_session, manifest_path_for, write_manifest

    script = None
    if args.script:
        script = json.loads(Path(args.script).read_text(encoding="utf-8"))
    spec = ScenarioSpec(preset=args.preset, seed=args.seed, users=args.users, script=script)
    store, manifest = generate_session(spec, args.out)
    manifest_path = manifest_path_for(args.out)
    write_manifest(manifest, manifest_path)
    print(f"session: {args.out} ({store.record_count()} records, users={list(store.meta.users)})")
    print(f"manifest: {manifest_path}")
    return 0


def _cmd_ingest(args: argparse.Namespace) -> int:
    from xract.ingest import IngestConfig, ingest_directory, merge_sessions
    from xract.uad.store import write_session

    cfg = IngestConfig(
        anonymize=not args.no_anonymize,
        resample_interval=args.resample / 1000.0 if args.resample else None,
    )
    stores = [ingest_directory(d, cfg) for d in args.raw]
    store = stores[0] if len(stores) == 1 else merge_sessions(stores, rebase=args.rebase)
    final = write_session(store, args.out)
    for line in getattr(store, "diagnostics", []):
        print(f"note: {line}", file=sys.stderr)
    print(f"ingested {final.record_count()} records for {list(final.meta.users)} -> {args.out}")
    return 0


def _cmd_process(args: argparse.Namespace) -> int:
    from xract.insight.client import resolve_client
    from xract.pipeline import PROCESS_STEPS, process_session

    steps = args.steps.split(",") if args.steps else None
    if steps:
        unknown = [s for s in steps if s not in PROCESS_STEPS]
        if unknown:
            raise XractError(f"unknown steps {unknown}; valid: {list(PROCESS_STEPS)}")
    client = resolve_client(args.llm)
    report = process_session(
        args.session, client, stride=args.stride, voxel=args.voxel, steps=steps
    )
    print(report.summary())
    if args.verbose:
        for line in report.diagnostics:
            print(f"note: {line}", file=sys.stderr)
    return 0


def _cmd_insights(args: argparse.Namespace) -> int:
    from xract.insight.agents import generate_insights, insights_to_json
    from xract.insight.client import resolve_client
    from xract.jsonio import atomic_write_text, dumps_pretty
    from xract.service.app import INSIGHTS_FILE
    from xract.uad.store import read_session

    store = read_session(args.session, verify_assets=False)
    client = resolve_client(args.llm)
    insights = generate_insights(store, args.aoi, args.mode, client)
    payload = insights_to_json(insights, args.aoi, args.mode)
    out = Path(args.session) / INSIGHTS_FILE
    atomic_write_text(out, dumps_pretty(payload))
    print(f"{len(insights)} insight(s) -> {out}")
    for ins in insights:
        print(f"  [{ins.id}] ({ins.aspect.value}) {ins.title}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    from xract.insight.agents import generate_insights
    from xract.insight.client import resolve_client
    from xract.insight.evaluate import comparison_json, evaluate_insights, render_comparison
    from xract.jsonio import atomic_write_text, dumps_pretty
    from xract.service.app import EVAL_FILE
    from xract.uad.store import read_session

    store = read_session(args.session, verify_assets=False)
    client = resolve_client(args.llm)
    single = multi = None
    if args.compare:
        for mode in ("single", "multi"):
            insights = generate_insights(store, args.aoi, mode, client)
            scores = evaluate_insights(insights, args.aoi, client, runs=args.runs, method=mode)
            if mode == "single":
                single = scores
            else:
                multi = scores
    else:
        insights = generate_insights(store, args.aoi, args.mode, client)
        scores = evaluate_insights(insights, args.aoi, client, runs=args.runs, method=args.mode)
        single, multi = (scores, None) if args.mode == "single" else (None, scores)
    payload = comparison_json(single=single, multi=multi)
    out = Path(args.session) / EVAL_FILE
    atomic_write_text(out, dumps_pretty(payload))
    print(render_comparison(single=single, multi=multi))
    print(f"saved: {out}")
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    from xract.bench import bench_log
    from xract.jsonio import dumps_pretty

    if args.iterations < 10 or args.runs < 1:
        raise UsageError(
            f"bench needs --iterations >= 10 and --runs >= 1 "
            f"(got {args.iterations}, {args.runs})"
        )
    report = bench_log(
        iterations=args.iterations,
        runs=args.runs,
        referent_points=args.points,
        progress=(lambda msg: print(msg, file=sys.stderr)) if args.verbose else None,
    )
    print(report.render_table())
    if args.out:
        Path(args.out).write_text(dumps_pretty(report.to_json_dict()), encoding="utf-8")
        print(f"saved: {args.out}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    from xract.service.app import serve

    serve(
        args.root,
        port=args.port,
        host=args.host,
        llm_mode=args.llm,
        ui_dir=args.ui,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xract",
        description="Record, process, analyze, and serve XR user-action sessions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic session + ground-truth manifest")
    p.add_argument("--preset", required=True,
                   help="a1_vr_game | a2_mr_selection | a3_ar_markers | a4_ar_collab | a5_ar_inspection | custom")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--users", type=int, default=None)
    p.add_argument("--script", default=None, help="inline scenario JSON (preset=custom)")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("ingest", help="anonymize + prepare session(s); multiple inputs merge")
    p.add_argument("raw", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--no-anonymize", action="store_true")
    p.add_argument("--rebase", action="store_true",
                   help="shift merged sessions to a common start time")
    p.add_argument("--resample", type=int, default=None, metavar="MS",
                   help="normalize continuous sampling to this interval")
    p.set_defaults(fn=_cmd_ingest)

    p = sub.add_parser("process", help="reconstruct context + run model inferences (resumable)")
    p.add_argument("session")
    p.add_argument("--llm", default=None, help="mock | remote (default: environment)")
    p.add_argument("--stride", type=int, default=2)
    p.add_argument("--voxel", type=float, default=0.02)
    p.add_argument("--steps", default=None, help="comma list: context,classify,describe,intent")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(fn=_cmd_process)

    p = sub.add_parser("insights", help="generate the curated insight list")
    p.add_argument("session")
    p.add_argument("--aoi", default="", help="analysis-of-interest prompt (optional)")
    p.add_argument("--mode", choices=("single", "multi"), default="multi")
    p.add_argument("--llm", default=None)
    p.set_defaults(fn=_cmd_insights)

    p = sub.add_parser("eval", help="judge insight quality on the five criteria")
    p.add_argument("session")
    p.add_argument("--aoi", default="")
    p.add_argument("--mode", choices=("single", "multi"), default="multi")
    p.add_argument("--runs", type=int, default=3)
    p.add_argument("--compare", action="store_true", help="evaluate both modes side by side")
    p.add_argument("--llm", default=None)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("bench", help="measure log-call overhead (sync and async-perceived)")
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--points", type=int, default=400_000, help="referent model size")
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(fn=_cmd_bench)

    p = sub.add_parser("serve", help="serve processed sessions over HTTP")
    p.add_argument("root")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--llm", default=None)
    p.add_argument("--ui", default=None, help="static bundle directory to mount at /")
    p.set_defaults(fn=_cmd_serve)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except XractError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
