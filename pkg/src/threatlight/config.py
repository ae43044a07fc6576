"""Service configuration: one JSON file, every key optional.

Shape:

    {
      "listen": {"host": "127.0.0.1", "port": 8787},
      "topics": {"raw": "raw_events", "verdicts": "ad_events",
                 "threats": "threat_events"},
      "model_path": "models/custom.ssnn",
      "threshold": 0.5,
      "calculator": {"window_span_s": 60, "freq_baseline": 10,
                     "cluster_step": 0.1, "ip_step": 0.1,
                     "diversity_step": 0.15,
                     "bands": {"yellow": 30, "red": 70},
                     "allowlist": []},
      "chat": {"endpoint_url": null, "model": "",
               "api_key_env": "SS_CHAT_KEY"},
      "knowledge_base": "kb.md",
      "replay": {"path": "access.log", "rate": 500, "loop": 1}
    }

Omitted model_path / knowledge_base fall back to the packaged default
model and knowledge base. The optional replay block makes the service
feed itself on startup.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .pipeline import TOPIC_RAW, TOPIC_THREATS, TOPIC_VERDICTS
from .scoring import CalculatorConfig

__all__ = ["BadConfig", "ChatConfig", "ReplaySpec", "AppConfig", "load_app_config", "default_model_path"]

DEFAULT_CHAT_KEY_ENV = "SS_CHAT_KEY"


class BadConfig(ValueError):
    """Config file missing, unparseable, or holding out-of-range values."""


@dataclass(frozen=True)
class ChatConfig:
    endpoint_url: Optional[str] = None
    model: str = ""
    api_key_env: str = DEFAULT_CHAT_KEY_ENV

    @property
    def configured(self) -> bool:
        return bool(self.endpoint_url)


@dataclass(frozen=True)
class ReplaySpec:
    path: str
    rate: Optional[float] = None  # None → batch
    loop: int = 1


@dataclass(frozen=True)
class AppConfig:
    host: str = "127.0.0.1"
    port: int = 8787
    topic_raw: str = TOPIC_RAW
    topic_verdicts: str = TOPIC_VERDICTS
    topic_threats: str = TOPIC_THREATS
    model_path: Optional[str] = None
    threshold: float = 0.5
    calculator: CalculatorConfig = field(default_factory=CalculatorConfig)
    chat: ChatConfig = field(default_factory=ChatConfig)
    knowledge_base: Optional[str] = None
    replay: Optional[ReplaySpec] = None

    @property
    def topics(self) -> tuple[str, str, str]:
        return (self.topic_raw, self.topic_verdicts, self.topic_threats)


def default_model_path() -> Path:
    """The packaged default model file."""
    from importlib import resources

    return Path(str(resources.files("threatlight.data").joinpath("default_model.ssnn")))


def _calculator_from(raw: dict) -> CalculatorConfig:
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


def load_app_config(path: Union[str, Path, None] = None) -> AppConfig:
    """Parse the config file; None gives all defaults. Raises BadConfig."""
    if path is None:
        return AppConfig()
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise BadConfig(f"cannot read config: {e}") from None
    except json.JSONDecodeError as e:
        raise BadConfig(f"config is not valid JSON: {e}") from None
    if not isinstance(raw, dict):
        raise BadConfig("config root must be a JSON object")

    try:
        listen = raw.get("listen", {})
        topics = raw.get("topics", {})
        chat_raw = raw.get("chat", {})
        replay_raw = raw.get("replay")
        replay = None
        if replay_raw is not None:
            rate = replay_raw.get("rate")
            replay = ReplaySpec(
                path=str(replay_raw["path"]),
                rate=float(rate) if rate is not None else None,
                loop=int(replay_raw.get("loop", 1)),
            )
            if replay.rate is not None and replay.rate <= 0:
                raise BadConfig("replay.rate must be > 0")
            if replay.loop < 1:
                raise BadConfig("replay.loop must be >= 1")
        cfg = AppConfig(
            host=str(listen.get("host", "127.0.0.1")),
            port=int(listen.get("port", 8787)),
            topic_raw=str(topics.get("raw", TOPIC_RAW)),
            topic_verdicts=str(topics.get("verdicts", TOPIC_VERDICTS)),
            topic_threats=str(topics.get("threats", TOPIC_THREATS)),
            model_path=raw.get("model_path"),
            threshold=float(raw.get("threshold", 0.5)),
            calculator=_calculator_from(raw.get("calculator", {})),
            chat=ChatConfig(
                endpoint_url=chat_raw.get("endpoint_url"),
                model=str(chat_raw.get("model", "")),
                api_key_env=str(chat_raw.get("api_key_env", DEFAULT_CHAT_KEY_ENV)),
            ),
            knowledge_base=raw.get("knowledge_base"),
            replay=replay,
        )
    except BadConfig:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise BadConfig(f"bad config value: {e}") from None

    if not 0 < cfg.port < 65536:
        raise BadConfig(f"port {cfg.port} out of range")
    if not 0.0 <= cfg.threshold <= 1.0:
        raise BadConfig("threshold must be in [0,1]")
    if len({cfg.topic_raw, cfg.topic_verdicts, cfg.topic_threats}) != 3:
        raise BadConfig("topic names must be distinct")
    return cfg
