import csv
import io
import time
from collections import defaultdict

import pytest

_CRITERIA = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion this test checks")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for mark in report.user_properties:
        if mark[0] == "criterion":
            _CRITERIA[mark[1]].append(report.outcome == "passed")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m:
            item.user_properties.append(("criterion", m.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_CRITERIA, key=lambda s: (int(s.split(" ")[0].rstrip("abcd")), s)):
        ok = all(_CRITERIA[label])
        terminalreporter.write_line(f"criterion {label}: {'PASS' if ok else 'FAIL'}")


def read_table(path):
    text = path.read_text(encoding="utf-8")
    return list(csv.DictReader(io.StringIO("".join(ln for ln in text.splitlines(True) if not ln.startswith("#")))))


@pytest.fixture(scope="session")
def comparison(tmp_path_factory):
    """Full seven-method comparison with the shipped configuration."""
    from calais_cba.cli import main
    from calais_cba.config import shipped_config

    out = tmp_path_factory.mktemp("compare")
    start = time.perf_counter()
    status = main(["compare", "--out", str(out)])
    elapsed = time.perf_counter() - start
    h = shipped_config().config_hash
    return {"status": status, "dir": out, "hash": h, "elapsed": elapsed,
            "table": read_table(out / f"compare-all-{h}.csv"),
            "sims": {m: read_table(out / f"sim-{m}-{h}.csv") for m in ("mc", "des0", "des1", "des2", "des3")}}
