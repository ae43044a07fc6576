"""Five-factor threat scoring over a sliding event-time window.

Final = min(100, base × frequency × cluster × ip × diversity), the
product taken left to right. The window holds the last 60 seconds of
anomalous verdicts (event time); frequency counts the window BEFORE
the current verdict, cluster and diversity count it AFTER, and the
per-IP reputation is read before the offense is recorded, decaying
one point per idle hour. Bands: GREEN below yellow, YELLOW below
red, RED to 100.
"""

from __future__ import annotations

import ipaddress
import json
import math
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional, Union

FREQ_CAP = 3.0
CLUSTER_CAP = 2.0
IP_MIN, IP_MAX = 0.5, 2.0
DIVERSITY_CAP = 1.6
ALLOWLIST_FACTOR = 0.5
OFFENSE_DECAY_US = 3_600_000_000


@dataclass(frozen=True)
class CalculatorConfig:
    window_span_s: float = 60.0
    freq_baseline: float = 10.0
    cluster_step: float = 0.1
    ip_step: float = 0.1
    diversity_step: float = 0.15
    band_yellow: float = 30.0
    band_red: float = 70.0
    allowlist: frozenset[str] = frozenset()

    @property
    def window_span_us(self) -> int:
        return int(self.window_span_s * 1_000_000)


def load_calculator_config(path: Union[str, Path]) -> CalculatorConfig:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValueError("calculator config must be a JSON object")
    kwargs = {}
    for key in ("window_span_s", "freq_baseline", "cluster_step", "ip_step", "diversity_step"):
        if key in raw:
            kwargs[key] = float(raw[key])
    bands = raw.get("bands", {})
    if "yellow" in bands:
        kwargs["band_yellow"] = float(bands["yellow"])
    if "red" in bands:
        kwargs["band_red"] = float(bands["red"])
    if "allowlist" in raw:
        kwargs["allowlist"] = frozenset(str(ip) for ip in raw["allowlist"])
    return CalculatorConfig(**kwargs)


def map_band(score: float, yellow: float = 30.0, red: float = 70.0) -> str:
    if not 0.0 <= score <= 100.0:
        raise ValueError(f"score {score!r} not in [0,100]")
    if score < yellow:
        return "GREEN"
    if score < red:
        return "YELLOW"
    return "RED"


@lru_cache(maxsize=8192)
def subnet_key(ip: str):
    """IPv4 /24 or IPv6 /48; unparseable strings cluster by themselves."""
    try:
        addr = ipaddress.ip_address(ip)
    except ValueError:
        return ("raw", ip)
    if addr.version == 4:
        return (4, int(addr) >> 8)
    return (6, int(addr) >> 80)


class _Reputation:
    __slots__ = ("offense", "last_seen")

    def __init__(self, offense: int, last_seen: int):
        self.offense = offense
        self.last_seen = last_seen


class Calculator:
    """Single-writer scoring state machine; mirrors the wire contract."""

    def __init__(self, config: CalculatorConfig = CalculatorConfig()):
        self.config = config
        self._ring: deque[tuple[int, object, str]] = deque()
        self._subnet_counts: dict = {}
        self._cluster_hist: dict[int, int] = {}
        self._max_cluster = 0
        self._type_counts: dict[str, int] = {}
        self._reputation: dict[str, _Reputation] = {}

    def _evict(self, now: int) -> None:
        cutoff = now - self.config.window_span_us
        ring = self._ring
        while ring and ring[0][0] <= cutoff:
            _, subnet, atype = ring.popleft()
            self._dec_subnet(subnet)
            c = self._type_counts[atype] - 1
            if c:
                self._type_counts[atype] = c
            else:
                del self._type_counts[atype]

    def _inc_subnet(self, subnet) -> None:
        c = self._subnet_counts.get(subnet, 0)
        if c:
            self._cluster_hist[c] -= 1
        self._subnet_counts[subnet] = c + 1
        self._cluster_hist[c + 1] = self._cluster_hist.get(c + 1, 0) + 1
        if c + 1 > self._max_cluster:
            self._max_cluster = c + 1

    def _dec_subnet(self, subnet) -> None:
        c = self._subnet_counts[subnet]
        self._cluster_hist[c] -= 1
        if c == 1:
            del self._subnet_counts[subnet]
        else:
            self._subnet_counts[subnet] = c - 1
            self._cluster_hist[c - 1] = self._cluster_hist.get(c - 1, 0) + 1
        while self._max_cluster > 0 and self._cluster_hist.get(self._max_cluster, 0) == 0:
            self._max_cluster -= 1

    def _ip_factor(self, ip: str, now: int) -> float:
        if ip in self.config.allowlist:
            return ALLOWLIST_FACTOR
        entry = self._reputation.get(ip)
        if entry is None:
            return 1.0
        idle_hours = (now - entry.last_seen) // OFFENSE_DECAY_US
        if idle_hours > 0:
            entry.offense = max(0, entry.offense - int(idle_hours))
            entry.last_seen = now
        return min(IP_MAX, max(IP_MIN, 1.0 + self.config.ip_step * entry.offense))

    def _record_offense(self, ip: str, now: int) -> None:
        entry = self._reputation.get(ip)
        if entry is None:
            self._reputation[ip] = _Reputation(1, now)
        else:
            entry.offense += 1
            entry.last_seen = now

    def process(self, verdict: dict) -> Optional[dict]:
        """Score one verdict dict; benign input updates occupancy only."""
        now = verdict["timestamp"]
        self._evict(now)
        if not verdict["is_anomalous"]:
            return None

        cfg = self.config
        n_before = len(self._ring)
        base = 100.0 * verdict["confidence"]
        freq = min(FREQ_CAP, 1.0 + math.log2(1.0 + n_before / cfg.freq_baseline))
        ipf = self._ip_factor(verdict["source_ip"], now)

        subnet = subnet_key(verdict["source_ip"])
        atype = verdict["attack_type"]
        self._ring.append((now, subnet, atype))
        self._inc_subnet(subnet)
        self._type_counts[atype] = self._type_counts.get(atype, 0) + 1

        cluster = min(CLUSTER_CAP, 1.0 + cfg.cluster_step * (self._max_cluster - 1))
        diversity = min(DIVERSITY_CAP, 1.0 + cfg.diversity_step * max(0, len(self._type_counts) - 1))

        final = min(100.0, base * freq * cluster * ipf * diversity)
        self._record_offense(verdict["source_ip"], now)
        return {
            "kind": "threat",
            "timestamp": now,
            "final_score": final,
            "band": map_band(final, cfg.band_yellow, cfg.band_red),
            "factors": {
                "base_score": base,
                "frequency_multiplier": freq,
                "cluster_factor": cluster,
                "ip_factor": ipf,
                "diversity_factor": diversity,
            },
            "window_event_count": len(self._ring),
        }
