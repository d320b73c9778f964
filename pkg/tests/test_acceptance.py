"""One test per acceptance criterion; each prints a PASS/FAIL line with its key metrics."""

import json

import pytest

from solitonglue import verify


@pytest.mark.parametrize("check", verify.CHECKS, ids=[f"criterion_{i:02d}" for i in range(1, len(verify.CHECKS) + 1)])
def test_criterion(check, capsys):
    res = check()
    with capsys.disabled():
        print()
        print(res.line())
        print("    " + json.dumps(_headline(res.metrics), default=str))
    assert res.passed, res.metrics


def _headline(metrics: dict) -> dict:
    """Scalar metrics only, to keep the printed line short."""
    return {k: v for k, v in metrics.items() if isinstance(v, (bool, int, float, str))
            or (isinstance(v, list) and len(v) <= 4 and all(isinstance(x, (int, float)) for x in v))}
