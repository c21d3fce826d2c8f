from __future__ import annotations

import json
from pathlib import Path

import pytest

from ambirag.gateway import Gateway, ScriptedMock
from ambirag.config import PipelineConfig
from ambirag.evaluation import load_dataset
from ambirag.retrieval import ingest_corpus

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"
CORPUS = FIXTURES / "corpus.jsonl"
DATASET = FIXTURES / "dataset.jsonl"
SCRIPT = FIXTURES / "mock_script.json"


@pytest.fixture(scope="session")
def index():
    return ingest_corpus(CORPUS)


@pytest.fixture(scope="session")
def dataset():
    return {g.question.id: g for g in load_dataset(DATASET)}


@pytest.fixture
def script() -> dict[str, str]:
    return json.loads(SCRIPT.read_text(encoding="utf-8"))


@pytest.fixture
def mock_cfg(script):
    def make(overrides: dict[str, str] | None = None, **kwargs) -> PipelineConfig:
        gateway = Gateway(ScriptedMock({**script, **(overrides or {})}))
        return PipelineConfig.single(gateway, **kwargs)
    return make


def pipeline_args(*extra: str) -> list[str]:
    return ["--corpus", str(CORPUS), "--mock-fixtures", str(SCRIPT), *extra]


# criterion id -> list of (ok, detail); filled by test_acceptance.py
ACCEPTANCE: dict[str, list[tuple[bool, str]]] = {}


def record_criterion(cid: str, ok: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(cid, []).append((bool(ok), detail))
    print(f"{'PASS' if ok else 'FAIL'} {cid}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=lambda c: int(c[1:])):
        results = ACCEPTANCE[cid]
        passed = sum(ok for ok, _ in results)
        status = "PASS" if passed == len(results) else "FAIL"
        if len(results) == 1:
            detail = results[0][1]
        else:
            failed = [d for ok, d in results if not ok]
            detail = f"{passed}/{len(results)} checks" + (f"; failing: {', '.join(failed)}" if failed else "")
        terminalreporter.write_line(f"{status} {cid}: {detail}")
