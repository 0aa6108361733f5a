from test_acceptance import CRITERIA, RESULTS


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title in CRITERIA.items():
        if number in RESULTS:
            ok, detail = RESULTS[number]
            terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}")
