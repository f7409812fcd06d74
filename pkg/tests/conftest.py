import pytest

ACCEPTANCE_LOG = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LOG] = []


@pytest.fixture
def acceptance_log(request):
    return request.config.stash[ACCEPTANCE_LOG]


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_LOG, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
