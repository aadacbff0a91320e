"""Acceptance criteria A1-A9; each prints one PASS/FAIL line.

A3 accumulates maximum-principle violations from every solve in the
session, so it runs last.
"""

import pytest

from conelab.acceptance import CHECKS

ORDER = ["A1", "A2", "A4", "A5", "A6", "A7", "A8", "A9", "A3"]


@pytest.mark.parametrize("name", ORDER)
def test_acceptance(name):
    r = CHECKS[name]()
    print(r.line())
    assert r.passed, r.line()
