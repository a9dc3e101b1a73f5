"""Prints one pass/fail line per acceptance criterion after the run."""

_results = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _results[props["criterion"]] = (report.outcome, props.get("title", ""), props.get("detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        outcome, title, detail = _results[n]
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"criterion {n:2d} {status}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
