"""Command-line front end: classify, score, bench.

Every subcommand builds a fresh engine from explicit file paths (model
container, pattern ruleset, optional calculator config), so runs are
reproducible from the arguments alone.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from .engine import OracleEngine


def _add_engine_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", required=True, help="model container file (.ssnn)")
    p.add_argument("--rules", required=True, help="attack-pattern ruleset file")
    p.add_argument("--calc-config", default=None, help="calculator config JSON")
    p.add_argument("--threshold", type=float, default=0.5, help="anomaly threshold (default 0.5)")


def _engine(args: argparse.Namespace) -> OracleEngine:
    return OracleEngine(args.model, args.rules, args.calc_config, threshold=args.threshold)


def _cmd_classify(args: argparse.Namespace) -> int:
    engine = _engine(args)
    for item in engine.process(args.line) + engine.finish():
        if item["kind"] == "verdict":
            print(json.dumps(item))
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    engine = _engine(args)
    for item in engine.process(args.line) + engine.finish():
        print(json.dumps(item))
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    engine = _engine(args)
    with open(args.corpus, "r", encoding="utf-8") as fh:
        lines = [ln for ln in (raw.rstrip("\n") for raw in fh) if ln]
    emitted = 0
    t0 = time.perf_counter()
    for line in lines:
        emitted += len(engine.process(line))
    emitted += len(engine.finish())
    wall = time.perf_counter() - t0
    print(
        json.dumps(
            {
                "engine_id": engine.engine_id,
                "mode": "batch",
                "events": len(lines),
                "emitted": emitted,
                "wall_time_s": round(wall, 6),
                "throughput_eps": round(len(lines) / wall, 1) if wall > 0 else 0.0,
            }
        )
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="oracle", description="pure-Python analytics twin")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="verdict for one log line")
    _add_engine_args(p)
    p.add_argument("--line", required=True, help="access-log or JSON event line")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("score", help="verdict plus threat assessment for one log line")
    _add_engine_args(p)
    p.add_argument("--line", required=True, help="access-log or JSON event line")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("bench", help="replay a corpus file and report timing")
    _add_engine_args(p)
    p.add_argument("corpus", help="file of log/JSON lines, one event per line")
    p.set_defaults(func=_cmd_bench)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
