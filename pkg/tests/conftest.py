from __future__ import annotations

import json
from pathlib import Path

import pytest

from antisocial import _backend

FIXTURES = Path(__file__).parent / "fixtures"


def read_jsonl(path: Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


@pytest.fixture(params=sorted(_backend.available()))
def backend(request):
    """Every kernel backend importable in this environment."""
    return _backend.available()[request.param]


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
