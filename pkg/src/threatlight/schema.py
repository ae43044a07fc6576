"""Feature schema: the ordered 90-dimensional model input contract.

The vector is 78 flow slots (22 computed statistics followed by 56
reserved slots that are always zero) and 12 HTTP features. The schema
manifest is a JSON document listing every feature name with its
section tag plus the content hash of the attack-pattern ruleset; its
SHA-256 is embedded in saved models so a model can never be fed
features it was not trained on.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Optional, Sequence, Union

from .flows import FLOW_FEATURE_NAMES
from .httpfeat import HTTP_FEATURE_NAMES, Ruleset, load_default_ruleset

__all__ = [
    "SCHEMA_VERSION",
    "FLOW_SECTION_WIDTH",
    "HTTP_SECTION_WIDTH",
    "INPUT_WIDTH",
    "FEATURE_NAMES",
    "build_manifest",
    "manifest_bytes",
    "schema_hash",
    "write_manifest",
    "load_manifest",
    "assemble",
]

SCHEMA_VERSION = 1

FLOW_SECTION_WIDTH = 78
HTTP_SECTION_WIDTH = len(HTTP_FEATURE_NAMES)
INPUT_WIDTH = FLOW_SECTION_WIDTH + HTTP_SECTION_WIDTH

_RESERVED = tuple(f"reserved_{i:02d}" for i in range(FLOW_SECTION_WIDTH - len(FLOW_FEATURE_NAMES)))

FEATURE_NAMES: tuple[str, ...] = FLOW_FEATURE_NAMES + _RESERVED + HTTP_FEATURE_NAMES

assert len(FEATURE_NAMES) == INPUT_WIDTH


def build_manifest(ruleset: Optional[Ruleset] = None) -> dict:
    rs = ruleset or load_default_ruleset()
    features = [{"name": n, "section": "flow"} for n in FLOW_FEATURE_NAMES + _RESERVED]
    features += [{"name": n, "section": "http"} for n in HTTP_FEATURE_NAMES]
    return {
        "version": SCHEMA_VERSION,
        "feature_count": INPUT_WIDTH,
        "ruleset": {"name": rs.name, "sha256": hashlib.sha256(rs.raw).hexdigest()},
        "features": features,
    }


def manifest_bytes(manifest: dict) -> bytes:
    """Canonical serialization: compact separators, preserved key order."""
    return json.dumps(manifest, separators=(",", ":"), ensure_ascii=True).encode("ascii")


def schema_hash(ruleset: Optional[Ruleset] = None) -> bytes:
    """32-byte SHA-256 of the canonical manifest."""
    return hashlib.sha256(manifest_bytes(build_manifest(ruleset))).digest()


def write_manifest(path: Union[str, Path], ruleset: Optional[Ruleset] = None) -> bytes:
    """Write the manifest JSON (pretty-printed) and return its schema hash.

    The hash is computed over the canonical compact form, so pretty
    whitespace in the file does not perturb it.
    """
    manifest = build_manifest(ruleset)
    Path(path).write_text(json.dumps(manifest, indent=2) + "\n", encoding="ascii")
    return hashlib.sha256(manifest_bytes(manifest)).digest()


def load_manifest(path: Union[str, Path]) -> tuple[dict, bytes]:
    """Read a manifest file back; returns (manifest, schema hash)."""
    manifest = json.loads(Path(path).read_text(encoding="ascii"))
    names = tuple(f["name"] for f in manifest["features"])
    if manifest.get("feature_count") != len(names):
        raise ValueError("manifest feature_count disagrees with its feature list")
    return manifest, hashlib.sha256(manifest_bytes(manifest)).digest()


def assemble(flow_vec: Optional[Sequence[float]], http_vec: Optional[Sequence[float]]) -> list[float]:
    """Concatenate sections into the 90-wide model input.

    Either section may be absent (an HTTP-only event has no flow, a
    packet-only flow has no request): absent sections are zero-filled,
    and the 56 reserved flow slots are always zero.
    """
    out = [0.0] * INPUT_WIDTH
    if flow_vec is not None:
        if len(flow_vec) != len(FLOW_FEATURE_NAMES):
            raise ValueError(f"flow section must have {len(FLOW_FEATURE_NAMES)} values")
        out[: len(flow_vec)] = [float(v) for v in flow_vec]
    if http_vec is not None:
        if len(http_vec) != HTTP_SECTION_WIDTH:
            raise ValueError(f"http section must have {HTTP_SECTION_WIDTH} values")
        out[FLOW_SECTION_WIDTH:] = [float(v) for v in http_vec]
    return out
