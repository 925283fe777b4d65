from __future__ import annotations

from fractions import Fraction as F

import pytest

from coalfreeze import FreezeMeasure

# fixed arbitrary rational rows (non-degenerate, not from any named measure)
ARBITRARY_ROWS = {
    2: [(F(1, 3), F(2, 3)), (F(3, 4), F(1, 4)), (F(1, 2), F(1, 2))],
    3: [(F(1, 5), F(2, 5), F(2, 5)), (F(1, 2), F(1, 3), F(1, 6)), (F(2, 7), F(4, 7), F(1, 7))],
    4: [(F(1, 4), F(1, 4), F(1, 4), F(1, 4)), (F(1, 10), F(3, 5), F(1, 5), F(1, 10)), (F(2, 3), F(1, 6), F(0), F(1, 6))],
    5: [
        (F(1, 5),) * 5,
        (F(1, 3), F(1, 3), F(1, 9), F(1, 9), F(1, 9)),
        (F(1, 8), F(1, 2), F(1, 8), F(0), F(1, 4)),
    ],
}


def builtin_measures():
    return [
        FreezeMeasure.kingman(F(1, 2)),
        FreezeMeasure.kingman(F(1)),
        FreezeMeasure.hook(F(1)),
        FreezeMeasure.uniform(F(1)),
        FreezeMeasure.atom(F(1, 2), rho=F(1)),
    ]


@pytest.fixture
def measures():
    return builtin_measures()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[key])
