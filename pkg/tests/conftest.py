import pytest

_criteria_key = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record an acceptance verdict: ``criterion(number, passed, detail)``."""
    results = request.config.stash.setdefault(_criteria_key, {})

    def record(number: int, passed: bool, detail: str) -> None:
        results[number] = (passed, detail)
        with request.config.pluginmanager.get_plugin("capturemanager").global_and_fixture_disabled():
            print(f"\ncriterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_criteria_key, None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        passed, detail = results[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
