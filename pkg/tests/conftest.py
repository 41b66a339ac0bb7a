"""Acceptance reporting: one pass/fail line per criterion at the end of the run."""

ACCEPTANCE_LOG: dict[str, dict] = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LOG:
        return
    outcomes = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            if getattr(rep, "when", "call") == "call":
                outcomes[rep.nodeid.split("::")[-1]] = status
    tw = terminalreporter
    tw.write_sep("=", "acceptance criteria")
    for crit_id in sorted(ACCEPTANCE_LOG):
        entry = ACCEPTANCE_LOG[crit_id]
        status = outcomes.get(entry["test"], "unknown")
        verdict = "PASS" if status == "passed" else "FAIL"
        tw.write_line(f"[{crit_id}] {verdict}  {entry['title']}")
        for key, val in entry.get("measured", {}).items():
            tw.write_line(f"        {key} = {val}")
