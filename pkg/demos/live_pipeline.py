#!/usr/bin/env python3
"""Run the full bus-wired pipeline on a small synthetic stream.

Parses 40 generated access-log lines, publishes them to raw_events,
and tails ad_events and threat_events from the outside, exactly as
the HTTP service does. Detector and calculator run on their own
threads; the main thread is just another subscriber.
"""

from __future__ import annotations

from threatlight.bench import generate_lines
from threatlight.bus import EventBus
from threatlight.config import default_model_path
from threatlight.httpfeat import load_default_ruleset
from threatlight.ingest import parse_apache_line
from threatlight.nn import load_model
from threatlight.pipeline import TOPIC_THREATS, TOPIC_VERDICTS, Pipeline
from threatlight import wire
from threatlight.types import AnomalyVerdict

EVENTS = 40


def main() -> None:
    bus = EventBus()
    pipe = Pipeline(bus, load_model(default_model_path()), load_default_ruleset())
    tail = bus.subscribe(TOPIC_VERDICTS, TOPIC_THREATS)

    lines = generate_lines(EVENTS, seed=2026, attack_ratio=0.25)
    with pipe:
        for line in lines:
            pipe.publish_record(parse_apache_line(line))
    bus.close()

    anomalous = 0
    for message in tail:
        item = wire.decode(message)
        if isinstance(item, AnomalyVerdict):
            if item.is_anomalous:
                anomalous += 1
                print(f"verdict  {item.event_id}  {item.attack_type.name:<15} "
                      f"conf={item.confidence:.3f}  from {item.source_ip}")
        else:
            print(f" threat    score={item.final_score:6.2f}  {item.band.name:<6} "
                  f"window={item.window_event_count}")

    print()
    print(f"published {EVENTS} records; pipeline emitted {pipe.verdicts_out} verdicts "
          f"({anomalous} anomalous) and {pipe.assessments_out} assessments")


if __name__ == "__main__":
    main()
