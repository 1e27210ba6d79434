"""Collects one verdict line per acceptance criterion and prints them at the end of the run."""

import pytest

VERDICTS: list[str] = []


@pytest.fixture
def verdict(request):
    """Call with (label, ok, detail); records a PASS/FAIL line and asserts ok."""

    seen = []

    def record(label: str, ok: bool, detail: str = ""):
        line = f"{'PASS' if ok else 'FAIL'} {label}" + (f": {detail}" if detail else "")
        VERDICTS.append(line)
        seen.append(line)
        print(line)
        assert ok, line

    yield record
    if not seen:
        VERDICTS.append(f"FAIL {request.node.name}: raised before reaching its verdict")


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
