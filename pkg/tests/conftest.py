from __future__ import annotations


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one verdict line per acceptance test at the end of the run."""
    rows = {}
    for key, verdict in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL"), ("skipped", "SKIP")):
        for rep in terminalreporter.stats.get(key, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            # setup/teardown failures count against the criterion
            if rows.get(name) != "FAIL":
                rows[name] = verdict
    if not rows:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name in sorted(rows):
        terminalreporter.write_line(f"{rows[name]:4s} {name}")
