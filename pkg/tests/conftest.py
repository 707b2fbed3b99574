from pathlib import Path

import pytest

from dhol.tptp import parse_dhol

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
GOLDEN = Path(__file__).resolve().parent / "golden"


def load(name: str):
    """Parse a corpus problem, resolving includes against the corpus directory."""
    return parse_dhol((CORPUS / name).read_text(encoding="utf-8"), [str(CORPUS)])


def corpus_files() -> list:
    return sorted(p.name for p in CORPUS.glob("*.p"))


@pytest.fixture(scope="session")
def category():
    return load("category.p").theory


# --- acceptance summary -----------------------------------------------------

_CRITERIA: dict = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        outcome = "SKIP" if report.skipped else ("PASS" if report.passed else "FAIL")
        _CRITERIA[name] = outcome


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA, key=lambda n: int(n.split("_")[2])):
        terminalreporter.write_line(f"{_CRITERIA[name]}  {name}")
