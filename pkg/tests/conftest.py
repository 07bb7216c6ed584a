import pytest

from allee_defense.model import ModelParams

TABLE1 = dict(r=1.0, K=1.0, w=0.3, a=0.6, b=0.7, c=0.3, delta=0.1, h=0.2)
TABLE2 = dict(r=1.0, K=1.0, w=0.3, a=0.6, b=0.7, c=0.2, delta=0.1, h=0.2)


def table1(**kw) -> ModelParams:
    return ModelParams(**{**TABLE1, **kw})


def table2(**kw) -> ModelParams:
    return ModelParams(**{**TABLE2, **kw})


@pytest.fixture
def t1():
    return table1


@pytest.fixture
def t2():
    return table2


def pytest_terminal_summary(terminalreporter):
    from .test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
