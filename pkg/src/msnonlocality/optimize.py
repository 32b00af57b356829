"""Maximizing MS violations over measurement settings.

The search is a seeded multi-start Nelder-Mead ascent over all polar and
azimuthal angles (``4n`` parameters) or, with ``identical=True``, over the
four angles shared by every party.  Each restart is polished by restarting
the simplex from its own optimum until the value stops improving.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .algebra import MSPolynomial, algebraic_bound, evaluate, local_bound, ms_polynomial
from .quantum import (
    MeasurementSettings,
    StateSpec,
    correlation_ghz_closed,
    correlation_table_statevector,
    correlation_w_closed,
    generating_value,
    generating_value_flat,
    mermin_settings,
    ms_from_generating,
    w_identical_ms_value,
    w_limit_ms_value,
)

MS_KINDS = ("M", "M'", "M+", "M-")
VALUE_TOL = 1e-8
MAX_ROUNDS = 30


class ConvergenceError(RuntimeError):
    pass


@dataclass
class OptimizationResult:
    best_value: float
    best_settings: MeasurementSettings
    restarts: int
    converged: bool
    signed_value: float = 0.0
    trace: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "best_value": self.best_value,
            "signed_value": self.signed_value,
            "restarts": self.restarts,
            "converged": self.converged,
            "settings": self.best_settings.to_pairs(),
            "trace": self.trace,
        }


def _ms_kind(poly: MSPolynomial) -> str | None:
    if poly.label in MS_KINDS and poly.n <= 14 and poly == ms_polynomial(poly.label, poly.n):
        return poly.label
    return None


def value_function(state: StateSpec, poly: MSPolynomial | str, identical: bool = False):
    """Return ``f(x) -> value`` over the flat angle vector used by :func:`maximize`."""
    n = state.n
    if isinstance(poly, str):
        kind = poly
        if kind not in MS_KINDS:
            raise ValueError(f"unknown polynomial kind {kind!r}")
    else:
        if poly.n != n:
            raise ValueError(f"polynomial has {poly.n} parties, state has {n}")
        kind = _ms_kind(poly)

    def settings_of(x):
        if identical:
            return MeasurementSettings.identical(n, (x[0], x[1]), (x[2], x[3]))
        return MeasurementSettings.from_vector(x, n)

    if kind is not None:
        if identical and state.kind == "W":
            return lambda x: w_identical_ms_value(n, (x[0], x[1]), (x[2], x[3]), kind)
        if identical:
            return lambda x: ms_from_generating(generating_value(state, settings_of(x)), n, kind)
        return lambda x: ms_from_generating(generating_value_flat(state, x), n, kind)

    coeffs = poly.dense()

    def through_table(x):
        st = settings_of(x)
        if state.kind == "GHZ":
            table = correlation_ghz_closed(state.theta, st)
        elif state.kind == "W" and identical:
            table = correlation_w_closed(st)
        else:
            table = correlation_table_statevector(state, st)
        return float(coeffs @ table.values)

    return through_table


def _ascend(fun, x0: np.ndarray, tol: float = VALUE_TOL):
    """Repeated Nelder-Mead on ``-|fun|`` until a round gains less than ``tol``."""
    x = np.asarray(x0, dtype=float)
    best = abs(fun(x))
    dim = x.size
    converged = False
    for _ in range(MAX_ROUNDS):
        res = minimize(lambda y: -abs(fun(y)), x, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 400 * dim,
                                "maxfev": 400 * dim, "adaptive": dim > 4})
        gain = -res.fun - best
        if gain > 0:
            x, best = res.x, float(-res.fun)
        if gain < tol:
            converged = True
            break
    return x, best, converged


def _structured_seeds(state: StateSpec, identical: bool) -> list[np.ndarray]:
    n = state.n
    pairs = [
        ((math.pi / 2, 0.0), (math.pi / 2, math.pi / 2)),
        ((0.0, 0.0), (math.pi / 2, 0.0)),
        ((0.3, 0.0), (-0.3, 0.0)),
        ((1.0, 0.0), (-1.0, 0.0)),
    ]
    if identical:
        return [np.array([a[0], a[1], b[0], b[1]]) for a, b in pairs]
    seeds = [mermin_settings(n, "M").to_vector(), mermin_settings(n, "M+").to_vector()]
    seeds += [MeasurementSettings.identical(n, a, b).to_vector() for a, b in pairs]
    return seeds


def maximize(state: StateSpec, poly: MSPolynomial | str, budget: int = 50, seed: int = 0,
             identical: bool = False, reference: MeasurementSettings | None = None,
             tol: float = VALUE_TOL, keep_trace: bool = False) -> OptimizationResult:
    """Maximize ``|poly|`` on ``state`` over measurement settings.

    ``budget`` is the number of restarts.  The first restarts start from
    structured points (Mermin settings, planar and identical settings, plus
    ``reference`` if given, and for the full search the best identical-settings
    point); the rest start from uniformly random angles drawn with ``seed``.
    Ties between restarts go to the lowest restart index.
    """
    if budget < 1:
        raise ValueError("budget must be at least one restart")
    n = state.n
    fun = value_function(state, poly, identical)
    rng = np.random.default_rng(seed)

    seeds = []
    if reference is not None:
        if identical:
            seeds.append(np.array([reference.theta[0, 0], reference.phi[0, 0],
                                   reference.theta[0, 1], reference.phi[0, 1]]))
        else:
            seeds.append(reference.to_vector())
    seeds += _structured_seeds(state, identical)
    if not identical and budget > 1:
        sub = maximize(state, poly, budget=min(budget, 12), seed=seed, identical=True, tol=tol)
        seeds.append(sub.best_settings.to_vector())
    dim = 4 if identical else 4 * n

    best = None
    trace = []
    for r in range(budget):
        if r < len(seeds):
            x0 = seeds[r]
        else:
            x0 = np.empty(dim)
            x0[0::2] = rng.uniform(0, math.pi, dim // 2)
            x0[1::2] = rng.uniform(0, 2 * math.pi, dim // 2)
        x, val, conv = _ascend(fun, x0, tol)
        trace.append(float(val))
        if best is None or val > best[1]:
            best = (x, val, conv)

    x, val, conv = best
    settings = (MeasurementSettings.identical(n, (x[0], x[1]), (x[2], x[3])) if identical
                else MeasurementSettings.from_vector(x, n))
    signed = fun(x)
    return OptimizationResult(float(abs(signed)), settings, budget, conv, float(signed),
                              trace if keep_trace else [])


def _poly_kind(kind: str) -> str:
    if kind not in ("M", "M+"):
        raise ValueError("sweeps support the kinds 'M' and 'M+'")
    return kind


def ghz_conjecture(n: int, theta: float, kind: str) -> float:
    """``max{L, 2^{(n-1)/2} sin 2theta}`` with ``L`` = 1 for M and sqrt 2 for M+."""
    floor = 1.0 if kind == "M" else math.sqrt(2)
    return max(floor, 2 ** ((n - 1) / 2) * math.sin(2 * theta))


def sweep_ghz(n: int, thetas, kind: str = "M", budget: int = 8, seed: int = 0) -> list[dict]:
    """Optimized GHZ values over a grid of state angles, with residuals against the conjectured curve.

    ``quantum_value`` is the optimum over Bloch-vector observables.  Parties
    may also ignore their qubit and answer deterministically (observable
    +-1), which always reaches the local bound; ``value`` is the larger of
    the two.  For odd ``n`` below the threshold angle the Bloch-vector optimum
    is strictly below the local bound, so the distinction matters there.
    The conjecture is a regression target, not ground truth.
    """
    _poly_kind(kind)
    poly = ms_polynomial(kind, n)
    floor = float(local_bound(kind))
    rows = []
    for theta in thetas:
        res = maximize(StateSpec.ghz(n, float(theta)), poly, budget=budget, seed=seed)
        value = max(res.best_value, floor)
        ref = ghz_conjecture(n, float(theta), kind)
        rows.append({"n": n, "kind": kind, "theta": float(theta), "quantum_value": res.best_value,
                     "value": value, "conjecture": ref, "residual": value - ref,
                     "converged": res.converged})
    return rows


def sweep_w(ns, kind: str = "M", budget: int = 8, seed: int = 0, general_limit: int = 9) -> list[dict]:
    """W-state maxima per ``n``: identical settings always, the full search for ``n <= general_limit``."""
    _poly_kind(kind)
    rows = []
    for n in ns:
        state = StateSpec.w(n)
        ident = maximize(state, kind, budget=max(budget, 8), seed=seed, identical=True)
        row = {"n": n, "kind": kind, "identical": ident.best_value, "general": None, "difference": None}
        if n <= general_limit:
            full = maximize(state, kind, budget=budget, seed=seed)
            row["general"] = full.best_value
            row["difference"] = full.best_value - ident.best_value
        rows.append(row)
    return rows


@dataclass
class AsymptoteResult:
    kind: str
    c0: float
    c1: float
    value_at_n: float
    n: int
    limit: float
    converged: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def w_asymptote(kind: str = "M+", n: int = 10**5, restarts: int = 20, seed: int = 0) -> AsymptoteResult:
    """Optimize ``theta_x = c_x / sqrt(n)`` (planar settings) for W_n at large ``n``.

    Returns the optimal constants, the value at ``n`` and the ``n -> infinity``
    limit at those constants.  Raises :class:`ConvergenceError` if the ascent
    does not settle.
    """
    _poly_kind(kind)
    root = math.sqrt(n)

    def fun(c):
        return w_identical_ms_value(n, (c[0] / root, 0.0), (c[1] / root, 0.0), kind)

    rng = np.random.default_rng(seed)
    best = None
    for r in range(restarts):
        c0 = rng.uniform(-3, 3, size=2)
        x, val, conv = _ascend(fun, c0, tol=1e-12)
        if best is None or val > best[1]:
            best = (x, val, conv)
    x, val, conv = best
    if not conv:
        raise ConvergenceError(f"asymptote search for {kind} did not converge (best {val})")
    c0, c1 = (float(v) for v in x)
    if c0 < 0:
        c0, c1 = -c0, -c1
    limit = abs(w_limit_ms_value(c0, c1, kind))
    return AsymptoteResult(kind, c0, c1, float(val), n, limit, bool(conv))


def within_algebraic_bound(value: float, kind: str, n: int, slack: float = 1e-9) -> bool:
    return value <= float(algebraic_bound(kind, n)) + slack


def evaluate_settings(state: StateSpec, poly: MSPolynomial, settings: MeasurementSettings) -> float:
    """Value of ``poly`` at given settings, through the full correlation table."""
    if state.kind == "GHZ":
        table = correlation_ghz_closed(state.theta, settings)
    else:
        table = correlation_table_statevector(state, settings)
    return evaluate(poly, table)
