"""Prints one line per acceptance criterion at the end of the session."""

_RESULTS = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    criterion = props.get("criterion")
    if criterion is None:
        return
    if report.when == "call" or report.failed:
        outcome = "PASS" if report.passed else "FAIL"
        if report.passed and props.get("status"):
            outcome = props["status"]
        _RESULTS[criterion] = (outcome, props.get("note", ""))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_RESULTS, key=lambda c: int(c.split(".")[0])):
        outcome, note = _RESULTS[criterion]
        line = f"{outcome:6s} {criterion}"
        terminalreporter.write_line(f"{line}  [{note}]" if note else line)
