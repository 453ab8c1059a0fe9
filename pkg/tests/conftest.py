import sys
from collections import defaultdict
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# criterion -> list of (test id, outcome, details)
_RESULTS = defaultdict(list)

CRITERIA = {
    1: "extended-state plateau",
    2: "mobility edges",
    3: "slowly varying lambda transition",
    4: "dimer jump and two bumps",
    5: "correlated-disorder inflexion",
    6: "long-range hopping inflexion and asymmetry",
    7: "property suite",
    8: "end-to-end reproducibility",
}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    number = dict(report.user_properties).get("criterion")
    if number is None:
        return
    details = [v for k, v in report.user_properties if k == "detail"]
    _RESULTS[number].append((report.nodeid.split("::")[-1], report.outcome, details))


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            item.user_properties.append(("criterion", mark.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_RESULTS):
        runs = _RESULTS[number]
        ok = all(outcome == "passed" for _, outcome, _ in runs)
        failed = [name for name, outcome, _ in runs if outcome != "passed"]
        line = f"criterion {number} ({CRITERIA.get(number, '')}): {'PASS' if ok else 'FAIL'}"
        if failed:
            line += f"  [failed: {', '.join(failed)}]"
        tr.write_line(line)
        for _, _, details in runs:
            for d in details:
                tr.write_line(f"    {d}")
