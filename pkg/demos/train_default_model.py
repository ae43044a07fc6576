#!/usr/bin/env python3
"""Build the packaged default model from synthetic labeled traffic.

HTTP samples come from the benchmark traffic generator and are
labeled by the pattern flags their own feature extraction sets, so
the network learns to trust the rule evidence. Flow samples are
constructed: ordinary TCP exchanges (benign) against high-rate
SYN bursts and oversized single-sided blasts (anomalous).

Writes src/threatlight/data/default_model.ssnn and a JSONL copy of
the training set under build/ for the `threatlight train` CLI.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from random import Random

import numpy as np

from threatlight.bench import generate_lines
from threatlight.flows import finalize_flow, update_flow
from threatlight.httpfeat import extract_http_features
from threatlight.ingest import parse_apache_line
from threatlight.nn import TrainingConfig, forward, init_model, save_model, train
from threatlight.schema import assemble, schema_hash
from threatlight.types import PacketRecord, Protocol

REPO = Path(__file__).resolve().parents[1]
MODEL_OUT = REPO / "src" / "threatlight" / "data" / "default_model.ssnn"
DATA_OUT = REPO / "build" / "default_training_set.jsonl"
SEED = 7


def http_samples(n: int) -> tuple[list[list[float]], list[float]]:
    feats, labels = [], []
    for line in generate_lines(n, seed=SEED, attack_ratio=0.5):
        rec = parse_apache_line(line)
        http_vec = extract_http_features(rec)
        flagged = any(http_vec[i] >= 0.5 for i in (9, 10, 11))
        feats.append(assemble(None, http_vec))
        labels.append(1.0 if flagged else 0.0)
    return feats, labels


def _flow_vec(packets: list[PacketRecord]) -> list[float]:
    state = None
    for pkt in packets:
        state = update_flow(state, pkt)
    return finalize_flow(state)


def flow_samples(n_benign: int, n_attack: int) -> tuple[list[list[float]], list[float]]:
    rng = Random(SEED + 1)
    feats, labels = [], []
    base = 1_767_225_600_000_000

    def pkt(ts, src, sport, dst, dport, length, flags):
        return PacketRecord(ts, src, sport, dst, dport, Protocol.TCP, length, frozenset(flags))

    # Magnitudes are kept moderate on purpose: wildly unscaled rate or
    # byte features dominate the first layer's batch statistics and
    # starve every other input of gradient signal.
    for _ in range(n_benign):
        src = f"10.0.{rng.randint(0, 255)}.{rng.randint(1, 254)}"
        dst = f"192.0.2.{rng.randint(1, 40)}"
        sport, dport = rng.randint(1024, 65000), rng.choice((80, 443, 22))
        ts = base + rng.randint(0, 10**9)
        packets = [pkt(ts, src, sport, dst, dport, 60, ("SYN",))]
        for _ in range(rng.randint(2, 9)):
            ts += rng.randint(300_000, 4_000_000)
            if rng.random() < 0.55:
                packets.append(pkt(ts, src, sport, dst, dport, rng.randint(80, 400), ("ACK", "PSH")))
            else:
                packets.append(pkt(ts, dst, dport, src, sport, rng.randint(80, 400), ("ACK",)))
        ts += rng.randint(300_000, 2_000_000)
        packets.append(pkt(ts, src, sport, dst, dport, 52, ("FIN", "ACK")))
        feats.append(assemble(_flow_vec(packets), None))
        labels.append(0.0)

    for i in range(n_attack):
        src = f"203.0.113.{rng.randint(1, 254)}"
        dst = f"192.0.2.{rng.randint(1, 40)}"
        sport = rng.randint(1024, 65000)
        ts = base + rng.randint(0, 10**9)
        packets = []
        if i % 2 == 0:
            # SYN flood at one service: one-sided, no handshake progress
            dport = rng.choice((80, 443, 22, 25))
            for _ in range(rng.randint(30, 80)):
                ts += rng.randint(30_000, 120_000)
                packets.append(pkt(ts, src, sport, dst, dport, 60, ("SYN",)))
        else:
            # one-sided push flood, no acknowledgements coming back
            for _ in range(rng.randint(20, 50)):
                ts += rng.randint(40_000, 200_000)
                packets.append(pkt(ts, src, sport, dst, 80, rng.randint(500, 900), ("ACK", "PSH")))
        feats.append(assemble(_flow_vec(packets), None))
        labels.append(1.0)

    return feats, labels


def main() -> int:
    feats, labels = http_samples(4000)
    f2, l2 = flow_samples(600, 400)
    feats += f2
    labels += l2

    DATA_OUT.parent.mkdir(parents=True, exist_ok=True)
    with DATA_OUT.open("w", encoding="utf-8") as fh:
        for vec, lab in zip(feats, labels):
            fh.write(json.dumps({"features": vec, "label": int(lab)}) + "\n")

    x = np.asarray(feats, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    print(f"training set: {len(y)} samples, {int(y.sum())} anomalous")

    model = init_model(schema_hash(), seed=SEED)
    # stock hyperparameters, but give the optimizer room: the first
    # layer needs time to learn scale compensation for the raw flow
    # magnitudes before validation loss settles
    cfg = TrainingConfig(seed=SEED, max_epochs=120, early_stop_patience=30)
    trained, history = train(model, x, y, cfg)

    p = forward(trained, x)
    pred = (p >= 0.5).astype(np.float64)
    tp = float(np.sum((pred == 1) & (y == 1)))
    fp = float(np.sum((pred == 1) & (y == 0)))
    fn = float(np.sum((pred == 0) & (y == 1)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0

    MODEL_OUT.parent.mkdir(parents=True, exist_ok=True)
    n = save_model(trained, MODEL_OUT)
    print(
        f"epochs {history.epochs_run} (best {history.best_epoch}, "
        f"val loss {history.best_val_loss:.5f}, early stop {history.stopped_early})"
    )
    print(f"full-set precision {precision:.4f} recall {recall:.4f} F1 {f1:.4f}")
    print(f"wrote {MODEL_OUT} ({n} bytes)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
