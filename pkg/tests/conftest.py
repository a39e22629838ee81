import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``record(passed, detail)``; a crash records FAIL."""
    state = {"done": False}
    number, title = request.node.get_closest_marker("criterion").args

    def record(passed: bool, detail: str):
        line = f"criterion {number:>2} {title}: {'PASS' if passed else 'FAIL'} ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        state["done"] = True

    yield record
    if not state["done"]:
        ACCEPTANCE_LINES.append(f"criterion {number:>2} {title}: FAIL (raised before completion)")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
