import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_VERDICTS: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion reported in the PASS/FAIL summary")


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    name = mark.args[0]
    if call.when == "setup" and call.excinfo is not None:
        _VERDICTS[name] = "FAIL"
    elif call.when == "call":
        _VERDICTS[name] = "FAIL" if call.excinfo is not None else "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict in _VERDICTS.items():
        terminalreporter.write_line(f"{verdict}  {name}")
