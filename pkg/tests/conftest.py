import pytest


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='run the slow end-to-end tests')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: end-to-end training runs of several minutes, skipped without --runslow')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return

    skip = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip)
