"""One test per acceptance criterion; each prints its pass/fail line."""
import pytest

from finsler_quant import acceptance

SLOW = {6, 7, 9, 10, 11}


@pytest.mark.parametrize(
    "criterion",
    [pytest.param(c, id=f"criterion_{c.number:02d}", marks=[pytest.mark.slow] if c.number in SLOW else [])
     for c in acceptance.CRITERIA],
)
def test_criterion(criterion, capsys):
    res = criterion()
    with capsys.disabled():
        print("\n" + res.line)
    assert res.passed, res.line
