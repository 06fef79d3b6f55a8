from __future__ import annotations

import copy
import json
from pathlib import Path

import pytest

from changehound import corpus
from changehound.impact import analyze
from changehound.model import app_model_from_dict

REPO = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="session")
def entries():
    return corpus.entries()


@pytest.fixture(scope="session")
def by_name(entries):
    return {e.name: e for e in entries}


@pytest.fixture(scope="session")
def amaze(by_name):
    return by_name["amaze_like"]


@pytest.fixture(scope="session")
def chain_model():
    path = corpus.fixture_path("chain")
    return app_model_from_dict(json.loads(path.read_text()))


def targets_for(entry):
    return analyze(entry.model, entry.changes)[1]


def minimal_doc() -> dict:
    return {
        "name": "minimal",
        "activities": [{"id": "Main", "initial_layout": "root", "inflatable_layouts": [], "is_start": True}],
        "layouts": [{"id": "root", "elements": [], "embedded_layouts": []}],
        "elements": [],
        "call_graph": {"nodes": [], "edges": []},
        "transitions": [],
        "faults": [],
        "flags": [],
        "values": [],
    }


def clone(doc: dict) -> dict:
    return copy.deepcopy(doc)


# one line per acceptance criterion, echoed after the test run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
