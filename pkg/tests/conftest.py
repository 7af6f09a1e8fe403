"""Shared pytest glue: acceptance-criterion registry and terminal summary.

Acceptance tests call record_criterion() with their measured numbers before
asserting, so the end-of-run summary shows one PASS/FAIL line per criterion
even when a criterion is red.
"""

_ACCEPTANCE = {}


def record_criterion(number, passed, detail):
    _ACCEPTANCE[number] = (bool(passed), str(detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[number]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[criterion {number:2d}] {verdict}: {detail}")
