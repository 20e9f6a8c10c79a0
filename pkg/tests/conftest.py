"""Per-criterion PASS/FAIL summary for tests marked ``acceptance(n)``."""

import collections

ACCEPTANCE = collections.OrderedDict()


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None:
            item.user_properties.append(("criterion", mark.args[0]))


def pytest_runtest_logreport(report):
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        ACCEPTANCE.setdefault(crit, []).append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[crit]
        failed = [name for name, outcome in checks if outcome == "failed"]
        ran = [name for name, outcome in checks if outcome != "skipped"]
        status = "FAIL" if failed else ("PASS" if ran else "SKIP")
        detail = f"  failing: {', '.join(failed)}" if failed else ""
        tr.write_line(f"criterion {crit:>2}: {status} ({len(ran) - len(failed)}/{len(ran)} checks){detail}")
