from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from msnonlocality.algebra import algebraic_bound, model_bound
from msnonlocality.classify import classify, theta_critical
from msnonlocality.optimize import ghz_conjecture


def test_examples():
    cert = classify(4, value_M=2**1.5)
    assert (cert.max_groups, cert.min_broadcasters) == (1, 3)
    cert = classify(3, value_Mplus=1.1)
    assert (cert.max_groups, cert.min_broadcasters) == (3, 0)
    cert = classify(3, value_M=1.1)
    assert (cert.max_groups, cert.min_broadcasters) == (2, 1)
    cert = classify(3, value_M=1.2)
    assert cert.to_dict()["max_groups"] == 2 and cert.to_dict()["min_broadcasters"] == 1


@pytest.mark.parametrize("n", range(1, 8))
def test_local_values_certify_nothing(n):
    cert = classify(n, value_M=1.0, value_Mplus=math.sqrt(2))
    assert (cert.max_groups, cert.min_broadcasters) == (n, 0)


def test_errors():
    with pytest.raises(ValueError):
        classify(3)
    with pytest.raises(ValueError):
        classify(3, value_M=2.5)
    with pytest.raises(ValueError):
        classify(3, value_M=float("nan"))
    with pytest.raises(ValueError):
        classify(3, value_M=1.0, margin=-1)
    with pytest.raises(ValueError):
        theta_critical(0)


def test_theta_critical():
    assert theta_critical(1) == pytest.approx(math.pi / 4)
    assert theta_critical(2) == pytest.approx(math.pi / 8)
    assert theta_critical(3) == pytest.approx(math.pi / 12)


@pytest.mark.parametrize("n", range(2, 9))
def test_inverse_of_bound_grid(n):
    eps = 1e-6
    for m in range(2, n + 1):
        v = float(model_bound(n, m)) + eps
        kw = {"value_M": v} if (n - m) % 2 == 0 else {"value_Mplus": v}
        cert = classify(n, **kw)
        # only levels of the same parity are tested by one value; all levels >= m of that parity fall
        same = [k for k in range(2, n + 1) if (n - k) % 2 == (n - m) % 2]
        assert list(cert.violated) == [k for k in same if k >= m]
        exact = classify(n, **{key: float(model_bound(n, m)) for key in kw})
        assert m not in exact.violated


@pytest.mark.parametrize("n", range(3, 7))
def test_certificate_consistency_around_threshold(n):
    for m in range(2, n + 1):
        tc = theta_critical(m)
        for theta, above in ((tc + 1e-3, True), (tc - 1e-3, False)):
            if theta > math.pi / 4:
                continue
            cert = classify(n, value_M=ghz_conjecture(n, theta, "M"), value_Mplus=ghz_conjecture(n, theta, "M+"))
            if above:
                assert cert.max_groups <= m - 1
            else:
                assert cert.max_groups >= m


@given(st.integers(2, 8), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_monotone_in_values(n, x, y, t):
    bm, bp = float(algebraic_bound("M", n)), float(algebraic_bound("M+", n))
    low = classify(n, value_M=x * bm, value_Mplus=y * bp)
    high = classify(n, value_M=(x + t * (1 - x)) * bm, value_Mplus=(y + t * (1 - y)) * bp)
    assert high.max_groups <= low.max_groups
    assert high.max_groups + high.min_broadcasters == n
    assert 1 <= high.max_groups <= n


def test_margin():
    assert classify(3, value_M=1.05, margin=0.1).max_groups == 3
    assert classify(3, value_M=1.2, margin=0.1).max_groups == 2
