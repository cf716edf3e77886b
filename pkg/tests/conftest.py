import pytest

from pointgames.gamefile import builtin, search_config_for
from pointgames.search import run_search


@pytest.fixture(scope="session")
def golden1():
    return builtin("penTIPG1")


@pytest.fixture(scope="session")
def golden2():
    return builtin("penTIPG2")


@pytest.fixture(scope="session")
def golden3():
    return builtin("penTIPG3")


@pytest.fixture(scope="session")
def toy():
    return builtin("toy")


@pytest.fixture(scope="session")
def searched2(golden2):
    """Search rerun on the penTIPG2 grid."""
    return run_search(search_config_for(golden2))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
