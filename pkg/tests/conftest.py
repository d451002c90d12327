import pytest

_REPORT = {}


def pytest_addoption(parser):
    parser.addoption("--full-matrix", action="store_true", default=False,
                     help="run the full 27 x 15 desk-scale matrix for the soft trend report")


@pytest.fixture(scope="session")
def acceptance_report():
    """Record one pass/fail line per acceptance criterion."""

    def record(key, passed, detail):
        status = passed if isinstance(passed, str) else ("PASS" if passed else "FAIL")
        _REPORT[key] = f"[{status}] criterion {key}: {detail}"
        print(_REPORT[key])

    return record


def pytest_terminal_summary(terminalreporter):
    if not _REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_REPORT, key=lambda k: (int(k.split(".")[0]), k)):
        terminalreporter.write_line(_REPORT[key])
