import pytest

_LINES = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Print one PASS/FAIL line per acceptance criterion and repeat it in the terminal summary."""
    lines = request.config.stash.setdefault(_LINES, [])

    def report(number, name, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number} ({name}){': ' + detail if detail else ''}"
        print(line)
        lines.append(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
