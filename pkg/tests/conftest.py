import random

import pytest

from psinflation.cli import DEFAULT_SEED

_ACCEPTANCE = {}


def pytest_addoption(parser):
    parser.addoption("--seed", type=int, default=DEFAULT_SEED,
                     help=f"seed for the randomized property suites (default {DEFAULT_SEED})")


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(num, title): numbered acceptance criterion")


@pytest.fixture
def seed(request):
    return request.config.getoption("--seed")


@pytest.fixture
def rnd(seed):
    return random.Random(seed)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    num, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _ACCEPTANCE[num] = (title, rep.passed, rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        title, ok, dur = _ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {title}  ({dur:.1f}s)")
