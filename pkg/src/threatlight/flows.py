"""Bidirectional flow aggregation over packet streams.

Packets sharing a canonical 5-tuple (endpoints sorted, so direction
does not split flows) are folded into O(1) running aggregates. All
sums are kept as exact integers; statistics only touch floating point
at finalization, computed as single divisions of exact integer
numerators, so streaming results match batch recomputation to within
rounding noise.

Timestamps are UTC microseconds. A flow is finalized when it has been
idle longer than the table's idle timeout, measured in event time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .types import PacketRecord, Protocol, TCP_FLAG_ORDER

__all__ = [
    "KeyMismatch",
    "EmptyFlow",
    "FlowKey",
    "LengthAggregate",
    "FlowState",
    "FlowTable",
    "update_flow",
    "finalize_flow",
    "FLOW_FEATURE_NAMES",
    "IDLE_TIMEOUT_US",
]

FLOW_FEATURE_NAMES = (
    "duration_s",
    "fwd_packets",
    "bwd_packets",
    "len_mean",
    "len_max",
    "len_min",
    "len_std",
    "bytes_per_s",
    "packets_per_s",
    "flag_fin",
    "flag_syn",
    "flag_rst",
    "flag_psh",
    "flag_ack",
    "flag_urg",
    "flag_ece",
    "flag_cwr",
    "fwd_len_mean",
    "fwd_len_max",
    "bwd_len_mean",
    "bwd_len_max",
    "total_bytes",
)

IDLE_TIMEOUT_US = 120 * 1_000_000
RATE_FLOOR_S = 0.001

_FLAG_INDEX = {f: i for i, f in enumerate(TCP_FLAG_ORDER)}


class KeyMismatch(ValueError):
    """Packet does not belong to the flow state it was applied to."""


class EmptyFlow(ValueError):
    """Finalization requires at least one packet."""


@dataclass(frozen=True, slots=True)
class FlowKey:
    """Canonical bidirectional flow identity.

    Endpoints are sorted so (ip_a, port_a) ≤ (ip_b, port_b); equality
    and hashing ignore `initiator`, which only records which endpoint
    sent the first packet (the forward direction).
    """

    ip_a: str
    port_a: int
    ip_b: str
    port_b: int
    protocol: Protocol
    initiator: tuple[str, int] = field(compare=False)

    @classmethod
    def from_packet(cls, pkt: PacketRecord) -> "FlowKey":
        src = (pkt.src_ip, pkt.src_port)
        dst = (pkt.dst_ip, pkt.dst_port)
        a, b = (src, dst) if src <= dst else (dst, src)
        return cls(a[0], a[1], b[0], b[1], pkt.protocol, initiator=src)


class LengthAggregate:
    """Exact running aggregates of packet lengths."""

    __slots__ = ("count", "total", "total_sq", "min", "max")

    def __init__(self):
        self.count = 0
        self.total = 0
        self.total_sq = 0
        self.min = 0
        self.max = 0

    def add(self, n: int) -> None:
        if self.count == 0:
            self.min = self.max = n
        else:
            if n < self.min:
                self.min = n
            if n > self.max:
                self.max = n
        self.count += 1
        self.total += n
        self.total_sq += n * n

    def mean(self) -> float:
        return self.total / self.count if self.count else 0.0

    def std(self) -> float:
        """Population standard deviation (divide by n)."""
        if self.count == 0:
            return 0.0
        # n·Σx² − (Σx)² is an exact non-negative integer; one division
        # and one sqrt are the only rounding steps.
        numer = self.count * self.total_sq - self.total * self.total
        return math.sqrt(numer / (self.count * self.count))


class FlowState:
    """Mutable per-flow accumulator, owned by a single writer."""

    __slots__ = ("key", "first_ts", "last_ts", "fwd_packets", "bwd_packets",
                 "fwd_len", "bwd_len", "len", "flag_counts", "total_bytes")

    def __init__(self, key: FlowKey, first_ts: int):
        self.key = key
        self.first_ts = first_ts
        self.last_ts = first_ts
        self.fwd_packets = 0
        self.bwd_packets = 0
        self.fwd_len = LengthAggregate()
        self.bwd_len = LengthAggregate()
        self.len = LengthAggregate()
        self.flag_counts = [0] * len(TCP_FLAG_ORDER)
        self.total_bytes = 0


def update_flow(state: Optional[FlowState], pkt: PacketRecord) -> FlowState:
    """Fold one packet into a flow state (created when absent).

    Direction is forward iff the packet's source is the initiator
    endpoint. Raises KeyMismatch if the packet belongs to another flow.
    """
    key = FlowKey.from_packet(pkt)
    if state is None:
        state = FlowState(key, pkt.timestamp)
    elif state.key != key:
        raise KeyMismatch(f"packet 5-tuple {key} does not match flow {state.key}")

    if pkt.timestamp < state.first_ts:
        state.first_ts = pkt.timestamp
    if pkt.timestamp > state.last_ts:
        state.last_ts = pkt.timestamp

    if (pkt.src_ip, pkt.src_port) == state.key.initiator:
        state.fwd_packets += 1
        state.fwd_len.add(pkt.length_bytes)
    else:
        state.bwd_packets += 1
        state.bwd_len.add(pkt.length_bytes)
    state.len.add(pkt.length_bytes)
    state.total_bytes += pkt.length_bytes

    for flag in pkt.tcp_flags:
        state.flag_counts[_FLAG_INDEX[flag]] += 1
    return state


def finalize_flow(state: FlowState) -> list[float]:
    """Emit the flow feature section in schema order (see FLOW_FEATURE_NAMES).

    Rates use effective_duration = max(duration, 1 ms) so degenerate
    single-packet flows stay finite. Raises EmptyFlow on zero packets.
    """
    if state.len.count == 0:
        raise EmptyFlow("flow has no packets")
    duration_s = (state.last_ts - state.first_ts) / 1_000_000
    eff = duration_s if duration_s > RATE_FLOOR_S else RATE_FLOOR_S
    out = [
        duration_s,
        float(state.fwd_packets),
        float(state.bwd_packets),
        state.len.mean(),
        float(state.len.max),
        float(state.len.min),
        state.len.std(),
        state.total_bytes / eff,
        state.len.count / eff,
    ]
    out.extend(float(c) for c in state.flag_counts)
    out.extend((
        state.fwd_len.mean(),
        float(state.fwd_len.max),
        state.bwd_len.mean(),
        float(state.bwd_len.max),
        float(state.total_bytes),
    ))
    return out


class FlowTable:
    """Single-writer table of live flows with idle-timeout expiry."""

    def __init__(self, idle_timeout_us: int = IDLE_TIMEOUT_US):
        self.idle_timeout_us = idle_timeout_us
        self._flows: dict[FlowKey, FlowState] = {}

    def __len__(self) -> int:
        return len(self._flows)

    def observe(self, pkt: PacketRecord) -> FlowState:
        key = FlowKey.from_packet(pkt)
        state = self._flows.get(key)
        if state is None:
            state = FlowState(key, pkt.timestamp)
            self._flows[key] = state
        return update_flow(state, pkt)

    def take_idle(self, now: int) -> list[FlowState]:
        """Remove and return flows idle strictly longer than the timeout."""
        cutoff = now - self.idle_timeout_us
        idle = [k for k, st in self._flows.items() if st.last_ts < cutoff]
        return [self._flows.pop(k) for k in idle]

    def expire_flows(self, now: int) -> list[list[float]]:
        """Finalized feature vectors of every flow that just went idle."""
        return [finalize_flow(st) for st in self.take_idle(now)]

    def drain(self) -> list[FlowState]:
        """Remove and return every live flow (end of input)."""
        states = list(self._flows.values())
        self._flows.clear()
        return states

    def states(self) -> Iterable[FlowState]:
        return self._flows.values()
