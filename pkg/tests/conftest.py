import numpy as np
import pytest

from stablefield.point_process import PointPattern, Region
from stablefield.statistics import MarkedSample


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='run slow acceptance tests')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def square():
    return Region(sides=(10.0, 10.0))


@pytest.fixture
def hand_sample(square):
    """Five hand-placed marked points on the 10x10 square; mean 1.6."""
    points = [(1.0, 1.0), (4.0, 4.0), (6.0, 2.0), (7.0, 3.0), (8.0, 8.0)]
    marks = [1.0, -2.0, 2.0, 3.0, 4.0]
    return MarkedSample(pattern=PointPattern(points=points, region=square), marks=marks)


@pytest.fixture
def client():
    from main import app
    app.config['TESTING'] = True
    with app.test_client() as test_client:
        yield test_client
