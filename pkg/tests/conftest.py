import pytest

from fraccache.channel_model import ChannelParams
from fraccache.content_model import ContentLibrary
from fraccache.distance import Fixed, UniformDisk

_ACCEPTANCE_LINES = []


@pytest.fixture
def default_lib():
    return ContentLibrary.zipf(20, 1.0)


@pytest.fixture
def default_params():
    return ChannelParams.from_db()


@pytest.fixture
def trend_params():
    # non-degenerate delivery channel at the default operating point
    return ChannelParams.from_db(r0_m=1.75)


@pytest.fixture(params=["fixed", "uniform"])
def dist(request):
    return Fixed(40.0) if request.param == "fixed" else UniformDisk(60.0)


@pytest.fixture
def acceptance_report():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
