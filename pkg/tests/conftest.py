"""
Pytest configuration and fixtures for sqar tests.
"""

import sys
from pathlib import Path

import pytest

# Add src directory to Python path
src_path = Path(__file__).parent.parent / "src"
sys.path.insert(0, str(src_path))


def pytest_addoption(parser):
    parser.addoption(
        "--runslow",
        action="store_true",
        default=False,
        help="run Monte Carlo acceptance studies",
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Monte Carlo study, skipped without --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def asymmetric_series():
    """n=600 series from the asymmetric ARCH menu entry."""
    from dgp import get_dgp, simulate_from_spec
    return simulate_from_spec(get_dgp("asymmetric_arch"), n=600, seed=11)


@pytest.fixture
def symmetric_series():
    """n=600 intercept-free series with symmetric t(3) GARCH noise."""
    from dgp import get_dgp, simulate_from_spec
    return simulate_from_spec(get_dgp("symmetric_garch"), n=600, seed=12)
