import pytest

_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_KEY] = []


@pytest.fixture
def criterion(request):
    """record(num, title, ok, detail, seconds): log one acceptance line, then assert."""
    lines = request.config.stash[_KEY]

    def record(num, title, ok, detail="", seconds=None):
        t = f" [{seconds:.1f}s]" if seconds is not None else ""
        line = f"{'PASS' if ok else 'FAIL'}  criterion {num:>2}: {title}{t}  {detail}"
        lines.append((num, line))
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines):
        terminalreporter.write_line(line)
