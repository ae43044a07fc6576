"""Threat scoring: sliding-window context and the capped factor product.

Consumes anomaly verdicts and produces threat assessments whose final
score is min(100, base × frequency × cluster × ip × diversity),
multiplied left to right. Benign verdicts only advance the window
clock; anomalous ones update frequency, subnet-cluster, reputation,
and diversity state, then emit.

Factor computation order against the window (fixed so results are
reproducible): the frequency count excludes the verdict being scored,
cluster and diversity include it, and the IP factor is read before
the verdict increments its offense count. The first anomalous verdict
ever therefore scores with every multiplier at exactly 1.0.

All window arithmetic is event-time (verdict timestamps), never wall
clock, so replaying a stream reproduces assessments bit for bit.
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

from .types import AnomalyVerdict, Band, FactorBreakdown, ThreatAssessment

__all__ = [
    "OutOfRange",
    "CalculatorConfig",
    "load_calculator_config",
    "ThreatCalculator",
    "compute_base_score",
    "compute_frequency_multiplier",
    "compute_cluster_factor",
    "compute_ip_factor",
    "compute_diversity_factor",
    "compute_final_score",
    "map_band",
    "subnet_key",
]

FREQ_CAP = 3.0
CLUSTER_CAP = 2.0
IP_MIN, IP_MAX = 0.5, 2.0
DIVERSITY_CAP = 1.6
ALLOWLIST_FACTOR = 0.5
OFFENSE_DECAY_US = 3_600_000_000  # one offense point per hour of silence


class OutOfRange(ValueError):
    """Input outside its declared domain."""


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
    """Read the calculator config JSON; absent keys keep their defaults.

    Shape: {"window_span_s": 60, "freq_baseline": 10, "cluster_step": 0.1,
    "ip_step": 0.1, "diversity_step": 0.15, "bands": {"yellow": 30,
    "red": 70}, "allowlist": ["ip", ...]}
    """
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


# --- Factor formulas (pure) ------------------------------------------------


def compute_base_score(confidence: float) -> float:
    """base = 100 · confidence. Raises OutOfRange outside [0,1]."""
    if not (isinstance(confidence, (int, float)) and 0.0 <= confidence <= 1.0):
        raise OutOfRange(f"confidence {confidence!r} not in [0,1]")
    return 100.0 * confidence

def compute_frequency_multiplier(n_window: int, baseline: float = 10.0) -> float:
    """m = min(3, 1 + log2(1 + n/baseline))."""
    if n_window < 0:
        raise OutOfRange("window count must be >= 0")
    return min(FREQ_CAP, 1.0 + math.log2(1.0 + n_window / baseline))

def compute_cluster_factor(max_subnet_cluster: int, step: float = 0.1) -> float:
    """c = min(2, 1 + step·(cluster − 1)); cluster counts same-subnet verdicts."""
    if max_subnet_cluster < 1:
        raise OutOfRange("cluster size must be >= 1")
    return min(CLUSTER_CAP, 1.0 + step * (max_subnet_cluster - 1))

def compute_ip_factor(offense_count: Optional[int], step: float = 0.1,
                      allowlisted: bool = False) -> float:
    """clamp(1 + step·offense, 0.5, 2.0); absent entry → 1.0; allowlist pins 0.5."""
    if allowlisted:
        return ALLOWLIST_FACTOR
    if offense_count is None:
        return 1.0
    if offense_count < 0:
        raise OutOfRange("offense count must be >= 0")
    return min(IP_MAX, max(IP_MIN, 1.0 + step * offense_count))

def compute_diversity_factor(distinct_types: int, step: float = 0.15) -> float:
    """d = min(1.6, 1 + step·max(0, types − 1))."""
    if distinct_types < 0:
        raise OutOfRange("distinct type count must be >= 0")
    return min(DIVERSITY_CAP, 1.0 + step * max(0, distinct_types - 1))

def compute_final_score(factors: FactorBreakdown) -> float:
    """Left-to-right product of the five factors, capped at 100. No other clamping."""
    return min(100.0, factors.product())

def map_band(score: float, yellow: float = 30.0, red: float = 70.0) -> Band:
    """GREEN [0, yellow), YELLOW [yellow, red), RED [red, 100]."""
    if not 0.0 <= score <= 100.0:
        raise OutOfRange(f"score {score!r} not in [0,100]")
    if score < yellow:
        return Band.GREEN
    if score < red:
        return Band.YELLOW
    return Band.RED


@lru_cache(maxsize=8192)
def subnet_key(ip: str):
    """Clustering key: IPv4 /24 or IPv6 /48; unparseable strings cluster by themselves."""
    try:
        addr = ipaddress.ip_address(ip)
    except ValueError:
        return ("raw", ip)
    if addr.version == 4:
        return (4, int(addr) >> 8)
    return (6, int(addr) >> 80)


# --- Stateful calculator ----------------------------------------------------


class _Reputation:
    __slots__ = ("offense", "last_seen")

    def __init__(self, offense: int, last_seen: int):
        self.offense = offense
        self.last_seen = last_seen


class ThreatCalculator:
    """Single-writer scoring state machine.

    Owns the sliding window (a ring of recent anomalous verdicts with
    incremental subnet-cluster and attack-type counters) and the IP
    reputation table. process() is total: it never raises on valid
    verdicts and returns None for benign ones.
    """

    def __init__(self, config: CalculatorConfig = CalculatorConfig()):
        self.config = config
        self._ring: deque[tuple[int, object, str]] = deque()  # (ts, subnet, attack_type)
        self._subnet_counts: dict = {}
        self._cluster_hist: dict[int, int] = {}
        self._max_cluster = 0
        self._type_counts: dict[str, int] = {}
        self._reputation: dict[str, _Reputation] = {}

    # window occupancy, including whatever verdict was just inserted
    def window_count(self) -> int:
        return len(self._ring)

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
        return compute_ip_factor(entry.offense, self.config.ip_step)

    def _record_offense(self, ip: str, now: int) -> None:
        entry = self._reputation.get(ip)
        if entry is None:
            self._reputation[ip] = _Reputation(1, now)
        else:
            entry.offense += 1
            entry.last_seen = now

    def process(self, verdict: AnomalyVerdict) -> Optional[ThreatAssessment]:
        """Score one verdict. Benign input updates window occupancy only."""
        now = verdict.timestamp
        self._evict(now)
        if not verdict.is_anomalous:
            return None

        n_before = len(self._ring)
        base = compute_base_score(verdict.confidence)
        freq = compute_frequency_multiplier(n_before, self.config.freq_baseline)
        ipf = self._ip_factor(verdict.source_ip, now)

        subnet = subnet_key(verdict.source_ip)
        atype = verdict.attack_type.value
        self._ring.append((now, subnet, atype))
        self._inc_subnet(subnet)
        self._type_counts[atype] = self._type_counts.get(atype, 0) + 1

        cluster = compute_cluster_factor(self._max_cluster, self.config.cluster_step)
        diversity = compute_diversity_factor(len(self._type_counts), self.config.diversity_step)

        factors = FactorBreakdown(
            base_score=base,
            frequency_multiplier=freq,
            cluster_factor=cluster,
            ip_factor=ipf,
            diversity_factor=diversity,
        )
        final = compute_final_score(factors)
        self._record_offense(verdict.source_ip, now)
        return ThreatAssessment(
            timestamp=now,
            final_score=final,
            band=map_band(final, self.config.band_yellow, self.config.band_red),
            factors=factors,
            window_event_count=len(self._ring),
        )

    # --- consistency probes used by tests ---------------------------------

    def recount(self) -> tuple[dict, int, dict]:
        """Recompute subnet counts, max cluster, and type counts from the ring."""
        subnets: dict = {}
        types: dict[str, int] = {}
        for _, subnet, atype in self._ring:
            subnets[subnet] = subnets.get(subnet, 0) + 1
            types[atype] = types.get(atype, 0) + 1
        return subnets, max(subnets.values(), default=0), types

    def counters_consistent(self) -> bool:
        subnets, max_c, types = self.recount()
        return (subnets == self._subnet_counts
                and max_c == self._max_cluster
                and types == self._type_counts)
