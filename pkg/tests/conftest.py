from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"

_ACCEPTANCE: dict = {}


class AcceptanceLog:
    """Collects one verdict line per acceptance criterion."""

    def record(self, number: int, title: str, passed: bool, detail: str = ""):
        _ACCEPTANCE[number] = (title, bool(passed), detail)


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


@pytest.fixture(scope="session")
def scenarios_dir():
    return SCENARIOS


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, passed, detail = _ACCEPTANCE[number]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{verdict}] {number:>2}. {title}" + (f" :: {detail}" if detail else ""))
