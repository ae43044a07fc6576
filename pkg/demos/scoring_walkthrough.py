#!/usr/bin/env python3
"""Watch the five-factor calculator react to an unfolding attack.

One detector verdict at a time goes into a fresh ThreatCalculator.
The printout shows how each factor moves: frequency ramps as the
60-second window fills, the cluster factor notices a second host in
the same /24, repeat offenses raise the per-IP factor, and a second
attack type engages the diversity bonus. The final score is the
capped product, mapped onto GREEN / YELLOW / RED.
"""

from __future__ import annotations

from threatlight.scoring import ThreatCalculator, map_band
from threatlight.types import AnomalyVerdict, AttackType

US = 1_000_000
T0 = 1_770_000_000 * US

SCRIPT = [
    # (seconds, source_ip, attack_type, confidence, note)
    # Confidences sit just above a sensitive deployment threshold so the
    # multipliers, not the base score, drive the band transitions.
    (0.0, "198.51.100.7", AttackType.SQL_INJECTION, 0.28, "first sighting, every multiplier 1.0"),
    (2.0, "198.51.100.7", AttackType.SQL_INJECTION, 0.30, "same host again, frequency wakes up"),
    (4.0, "198.51.100.7", AttackType.SQL_INJECTION, 0.32, "third hit, repeat offense counted"),
    (5.0, "198.51.100.8", AttackType.SQL_INJECTION, 0.29, "neighbour in the /24, cluster rises"),
    (7.0, "198.51.100.7", AttackType.XSS, 0.30, "new attack type, diversity engages"),
    (9.0, "198.51.100.7", AttackType.SQL_INJECTION, 0.35, "sustained burst hits the cap"),
    (200.0, "203.0.113.40", AttackType.PATH_TRAVERSAL, 0.26, "later, elsewhere: window emptied"),
]


def main() -> None:
    calc = ThreatCalculator()
    print(f"{'t(s)':>6}  {'source':<14} {'type':<15} {'base':>6} {'freq':>5} "
          f"{'clus':>5} {'ip':>5} {'div':>5}  {'final':>6}  band")
    for i, (sec, ip, attack, conf, note) in enumerate(SCRIPT):
        verdict = AnomalyVerdict(
            event_id=f"demo-{i:02d}",
            timestamp=T0 + int(sec * US),
            confidence=conf,
            is_anomalous=True,
            attack_type=attack,
            source_ip=ip,
        )
        a = calc.process(verdict)
        f = a.factors
        band = map_band(a.final_score)
        print(f"{sec:>6.1f}  {ip:<14} {attack.name:<15} {f.base_score:>6.1f} "
              f"{f.frequency_multiplier:>5.2f} {f.cluster_factor:>5.2f} "
              f"{f.ip_factor:>5.2f} {f.diversity_factor:>5.2f}  "
              f"{a.final_score:>6.1f}  {band.name:<7} {note}")
    print()
    print("Weak individual signals, strong pattern: no single verdict exceeds a")
    print("base of 35, yet the sustained burst crosses into RED and hits the 100")
    print("cap purely on the multipliers. The last row lands 191 seconds later:")
    print("the 60-second window has drained and the address is new, so every")
    print("multiplier resets to 1.0 and the score drops back to GREEN.")


if __name__ == "__main__":
    main()
