#!/usr/bin/env python3
"""Measure the engine two ways and print the numbers.

Batch mode pushes a generated corpus through as fast as it will go;
steady mode paces the same traffic at a fixed rate and reports the
publish-to-emission latency distribution. When the pure-Python
reference engine is installed the same workload runs on both and the
wall-clock ratio is printed.
"""

from __future__ import annotations

import json

from threatlight.bench import (
    EngineUnavailable,
    PrimaryEngine,
    Workload,
    comparison_table,
    compare,
    generate_lines,
    make_reference_engine,
    run_bench,
)

EVENTS = 20_000


def main() -> None:
    workload = Workload(mode="batch", events=EVENTS)
    lines = generate_lines(EVENTS, seed=workload.seed, attack_ratio=workload.attack_ratio)

    print(f"batch: {EVENTS} events through the numpy engine")
    primary = run_bench(PrimaryEngine(), workload, lines=lines)
    print(json.dumps(primary.to_dict(), indent=2))
    print()

    steady = run_bench(PrimaryEngine(), Workload(mode="steady", events=2_000, rate=500.0))
    print("steady: 2000 events at 500/s, per-event release-to-completion latency")
    print(json.dumps(steady.to_dict()["per_event_ms"], indent=2))
    print()

    try:
        reference_engine = make_reference_engine()
    except EngineUnavailable as exc:
        print(f"reference comparison skipped: {exc}")
        return

    print(f"comparing engines on the same {EVENTS}-event batch")
    reference = run_bench(reference_engine, workload, lines=lines)
    result = compare(primary, reference)
    print(f"speedup: {result['speedup']}x")
    print(comparison_table([result]))


if __name__ == "__main__":
    main()
