import pytest

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance(request):
    """Record one acceptance line, print it, and fail the test if the check failed."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def record(name: str, passed: bool | None, detail: str) -> None:
        verdict = {True: "PASS", False: "FAIL", None: "SKIP"}[passed]
        line = f"{verdict} {name}: {detail}"
        lines.append(line)
        print(line)
        if passed is None:
            pytest.skip(detail)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
