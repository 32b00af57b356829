from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from msnonlocality.algebra import MSPolynomial, algebraic_bound, build_M, evaluate, ms_polynomial
from msnonlocality.optimize import (
    evaluate_settings,
    ghz_conjecture,
    maximize,
    sweep_ghz,
    sweep_w,
    value_function,
    w_asymptote,
)
from msnonlocality.quantum import (
    StateSpec,
    correlation_table_statevector,
    mermin_settings,
    w_identical_ms_value,
    w_limit_ms_value,
)

correlation_of = correlation_table_statevector


def test_budget_must_be_positive():
    with pytest.raises(ValueError):
        maximize(StateSpec.ghz(3), "M", budget=0)


def test_value_function_errors():
    with pytest.raises(ValueError):
        value_function(StateSpec.ghz(3), "Q")
    with pytest.raises(ValueError):
        value_function(StateSpec.ghz(3), build_M(4))


def test_ghz_maximal():
    res = maximize(StateSpec.ghz(3), build_M(3), budget=4, seed=0)
    assert res.best_value == pytest.approx(2.0, abs=1e-6)
    assert res.converged


def test_ghz_flat_branch_even_n():
    res = maximize(StateSpec.ghz(4, 0.1), "M", budget=6, seed=0)
    assert res.best_value == pytest.approx(1.0, abs=1e-6)


def test_ghz_flat_branch_odd_n_needs_trivial_observables():
    # Bloch-vector observables stay below the local bound here; answering +-1 reaches it
    rows = sweep_ghz(3, [0.1], "M", budget=6, seed=0)
    assert rows[0]["quantum_value"] < 1.0
    assert rows[0]["value"] == 1.0
    assert abs(rows[0]["residual"]) < 1e-12


def test_best_value_reproducible_from_settings():
    state = StateSpec.ghz(4, 0.5)
    res = maximize(state, "M+", budget=3, seed=3)
    value = evaluate(ms_polynomial("M+", 4), correlation_of(state, res.best_settings))
    assert abs(value) == pytest.approx(res.best_value, abs=1e-9)
    assert evaluate_settings(state, ms_polynomial("M+", 4), res.best_settings) == pytest.approx(res.signed_value)


def test_determinism():
    state = StateSpec.w(4)
    a = maximize(state, "M", budget=5, seed=11, keep_trace=True)
    b = maximize(state, "M", budget=5, seed=11, keep_trace=True)
    assert a.best_value == b.best_value
    assert a.trace == b.trace
    np.testing.assert_array_equal(a.best_settings.to_vector(), b.best_settings.to_vector())
    assert len(a.trace) == 5 and max(a.trace) == a.best_value


def test_reference_floor():
    state = StateSpec.ghz(5, 0.6)
    ref = mermin_settings(5, "M")
    floor = abs(evaluate(build_M(5), correlation_of(state, ref)))
    res = maximize(state, "M", budget=1, seed=0, reference=ref)
    assert res.best_value >= floor - 1e-12


@pytest.mark.parametrize("n", [3, 4, 5])
def test_never_above_algebraic_bound(n):
    for state in (StateSpec.ghz(n), StateSpec.w(n)):
        for kind in ("M", "M+"):
            res = maximize(state, kind, budget=3, seed=1)
            assert res.best_value <= float(algebraic_bound(kind, n)) + 1e-9


def test_custom_polynomial_path():
    p = build_M(3).with_label("custom")
    assert isinstance(p, MSPolynomial)
    res = maximize(StateSpec.ghz(3), p, budget=2, seed=0)
    assert res.best_value == pytest.approx(2.0, abs=1e-6)
    res_w = maximize(StateSpec.w(3), p, budget=2, seed=0, identical=True)
    assert res_w.best_value == pytest.approx(maximize(StateSpec.w(3), "M", budget=2, seed=0, identical=True).best_value,
                                             abs=1e-7)


def test_w3_mplus_regression_and_grid():
    res = maximize(StateSpec.w(3), "M+", budget=10, seed=0)
    assert res.best_value > math.sqrt(2)
    assert res.best_value == pytest.approx(1.5396, abs=1e-3)
    grid = np.linspace(0, math.pi, 13)
    phis = np.linspace(0, math.pi, 7)
    best = 0.0
    for t0, t1, dp in itertools.product(grid, grid, phis):
        best = max(best, abs(w_identical_ms_value(3, (t0, 0.0), (t1, dp), "M+")))
    assert best <= res.best_value + 1e-9
    assert best > res.best_value - 0.05


def test_sweep_ghz_rows():
    rows = sweep_ghz(4, [math.pi / 4, 0.3], "M", budget=3, seed=0)
    assert [r["theta"] for r in rows] == [math.pi / 4, 0.3]
    for r in rows:
        assert r["conjecture"] == ghz_conjecture(4, r["theta"], "M")
        assert abs(r["residual"]) < 1e-4
    with pytest.raises(ValueError):
        sweep_ghz(3, [0.1], "M'")


def test_sweep_w_identical_curve():
    rows = sweep_w(range(3, 20), "M+", budget=6, seed=0, general_limit=0)
    values = [r["identical"] for r in rows]
    assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))
    assert values[-1] < 2 * math.sqrt(2 / math.e)
    rows_m = sweep_w(range(3, 20), "M", budget=6, seed=0, general_limit=0)
    assert all(r["identical"] < 1.63 for r in rows_m)
    assert all(r["general"] is None for r in rows_m)


def test_sweep_w_general_small():
    rows = sweep_w([3, 4], "M", budget=6, seed=0)
    for r in rows:
        assert abs(r["difference"]) < 1e-4


def test_w_asymptote_plus():
    res = w_asymptote("M+", seed=0)
    assert res.converged
    assert res.limit == pytest.approx(2 * math.sqrt(2 / math.e), abs=1e-6)
    assert res.value_at_n == pytest.approx(res.limit, abs=1e-4)
    degenerate = max(abs(w_limit_ms_value(c, c, "M+")) for c in np.linspace(-3, 3, 601))
    assert degenerate < res.limit - 1e-3


def test_w_asymptote_m():
    res = w_asymptote("M", seed=1)
    assert res.limit == pytest.approx(1.62, abs=0.01)
    assert res.c0 >= 0
