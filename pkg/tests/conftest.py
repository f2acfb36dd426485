import pytest

_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance outcome; the lines are repeated in the terminal summary."""
    lines = request.config.stash[_LINES]

    def record(label, passed, detail=""):
        line = f"{'PASS' if passed else 'FAIL'}  {label}  {detail}".rstrip()
        lines.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
