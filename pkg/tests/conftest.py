from pathlib import Path

import pytest

from citeassess import CorpusStore, Resolver, load_roster

FIXTURES = Path(__file__).parent / "fixtures"


def ingest_fixture(store: CorpusStore, name: str) -> None:
    for fname, kind in (("mag.jsonl", "MAG"), ("oa.jsonl", "OA"), ("cr.jsonl", "CR"), ("coci.csv", "COCI")):
        path = FIXTURES / name / fname
        if path.exists():
            store.ingest_dump(path, kind)


@pytest.fixture
def corpus_store(tmp_path):
    with CorpusStore(tmp_path / "store") as s:
        ingest_fixture(s, "corpus")
        yield s


def dossier_for(tmp_path, name):
    with CorpusStore(tmp_path / name) as s:
        ingest_fixture(s, name)
        cands, comm = load_roster(FIXTURES / name / "roster.json")
        return Resolver(s).build_dossier(cands[0], comm)


@pytest.fixture
def f1_dossier(tmp_path):
    return dossier_for(tmp_path, "f1")


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
