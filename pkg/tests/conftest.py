import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gapdense.measures import uniform  # noqa: E402
from gapdense.orthopoly import build_system  # noqa: E402
from gapdense.scalars import PrecisionContext  # noqa: E402


@pytest.fixture(scope="session")
def ctx256():
    return PrecisionContext(256)


@pytest.fixture(scope="session")
def u01():
    return uniform(0, 1)


@pytest.fixture(scope="session")
def sys30(u01, ctx256):
    return build_system(u01, 30, ctx256)


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[key])
