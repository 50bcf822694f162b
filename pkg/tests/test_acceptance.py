"""Release gate: each acceptance criterion at its full workload.

Every test prints one ``PASS``/``FAIL`` line with the measured value and the
required tolerance, whether or not output capture is enabled.
"""

import pytest

from antpap.verify import CHECKS

CRITERIA = [
    (1, "paw-transitions"),
    (2, "cover-time-law"),
    (3, "region-consistency"),
    (4, "convergence-permanence"),
    (5, "star-counterexample"),
    (6, "balance-at-convergence"),
    (7, "idleness-bound"),
    (8, "close-before-convergence"),
    (9, "sweep-trends"),
    (10, "determinism"),
    (11, "obliviousness"),
]

RESULTS = {}


@pytest.mark.acceptance
@pytest.mark.parametrize("number,name", CRITERIA, ids=[f"{n:02d}-{name}" for n, name in CRITERIA])
def test_criterion(number, name, capsys):
    result = CHECKS[name]()
    RESULTS[number] = result
    with capsys.disabled():
        print(f"\n[criterion {number:2d}] {result.line()}")
    assert result.passed, result.detail


def test_paw_transitions_finish_within_a_minute():
    result = CHECKS["paw-transitions"]()
    assert result.seconds < 60


def test_negative_control_names_itself():
    result = CHECKS["stagnation-prose-form"](variant="pseudocode")
    assert not result.passed and result.line().startswith("FAIL stagnation-prose-form")
