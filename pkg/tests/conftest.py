"""Shared fixtures and corpus helpers."""

from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
CORPUS_PATH = TESTS_DIR / "data" / "pattern_corpus.txt"


def load_corpus() -> list[tuple[str, str]]:
    rows = []
    for raw in CORPUS_PATH.read_text(encoding="utf-8").splitlines():
        if not raw or raw.startswith("#"):
            continue
        label, target = raw.split("\t")
        rows.append((label, target))
    return rows


def clf_line(
    target: str,
    ip: str = "198.51.100.7",
    method: str = "GET",
    status: int = 200,
    nbytes: int = 512,
    stamp: str = "10/Oct/2025:13:55:36 +0000",
) -> str:
    return f'{ip} - - [{stamp}] "{method} {target} HTTP/1.1" {status} {nbytes}'


@pytest.fixture(scope="session")
def ruleset():
    from threatlight.httpfeat import load_default_ruleset

    return load_default_ruleset()


@pytest.fixture(scope="session")
def default_model():
    from threatlight.config import default_model_path
    from threatlight.nn.modelio import load_model

    return load_model(default_model_path())


@pytest.fixture(scope="session")
def tiny_model():
    """Small random net with the production input width; fast to evaluate."""
    from threatlight import schema
    from threatlight.nn.model import init_model

    return init_model(schema.schema_hash(), seed=5, dims=(schema.INPUT_WIDTH, 16, 8, 1))
