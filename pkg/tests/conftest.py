import pytest

_acceptance_results: list[tuple[str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and item.fspath.basename == "test_acceptance.py":
        doc = item.function.__doc__ or item.name
        label = doc.strip().splitlines()[0]
        _acceptance_results.append(("PASS" if report.passed else "FAIL", label))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for status, label in _acceptance_results:
        terminalreporter.write_line(f"  [{status}] {label}")
