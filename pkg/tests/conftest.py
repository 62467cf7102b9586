import re


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    rows = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            m = re.search(r"test_acceptance\.py::test_criterion_(\d+)\w*", nodeid)
            if m and getattr(rep, "when", "call") == "call":
                num = int(m.group(1))
                name = nodeid.split("::")[-1]
                rows[num] = (name, "PASS" if outcome == "passed" else "FAIL")
    if rows:
        terminalreporter.write_sep("=", "acceptance criteria")
        for num in sorted(rows):
            name, verdict = rows[num]
            terminalreporter.write_line(f"criterion {num:2d}: {verdict}  ({name})")
