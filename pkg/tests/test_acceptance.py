"""The eight acceptance criteria, one test each, at exact tolerance.

Each test prints its summary line whether or not pytest captures output.
Run this file directly for the same lines without pytest.
"""

import pytest

from flatgeom.suites import CRITERIA, TITLES, run_all


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"{n}-{TITLES[n].replace(' ', '-')}")
def test_criterion(number, capsys):
    [res] = run_all([number])
    with capsys.disabled():
        print("\n" + res.line())
    assert not res.failures, res.failures[:3]
    assert res.passed, f"over the time limit: {res.seconds:.1f}s"


if __name__ == "__main__":
    results = run_all(echo=print)
    raise SystemExit(0 if all(r.passed for r in results) else 1)
