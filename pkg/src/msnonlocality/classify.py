"""Certificates of multipartite nonlocal content from observed MS values.

A value of ``S_n^m`` above ``2**((n-m)/2)`` rules out every grouping of the
parties into ``m`` (or more) groups and every broadcasting model with
``n - m`` (or fewer) broadcasters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .algebra import algebraic_bound, model_bound


@dataclass(frozen=True)
class NonlocalityCertificate:
    n: int
    value_M: float | None
    value_Mplus: float | None
    max_groups: int
    min_broadcasters: int
    violated: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "value_M": self.value_M,
            "value_Mplus": self.value_Mplus,
            "max_groups": self.max_groups,
            "min_broadcasters": self.min_broadcasters,
            "violated_m": list(self.violated),
        }


def classify(n: int, value_M: float | None = None, value_Mplus: float | None = None,
             margin: float = 0.0, tolerance: float = 1e-9) -> NonlocalityCertificate:
    """Largest group count (and smallest broadcaster count) compatible with the observed values.

    ``M_n`` tests the levels with ``n - m`` even, ``M^+_n`` those with ``n - m``
    odd.  A level counts as violated only if ``|value| > bound + margin``.
    Values above the algebraic bound (beyond ``tolerance``) are rejected.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if value_M is None and value_Mplus is None:
        raise ValueError("supply at least one of value_M, value_Mplus")
    if margin < 0:
        raise ValueError("margin must be non-negative")
    for name, kind, v in (("value_M", "M", value_M), ("value_Mplus", "M+", value_Mplus)):
        if v is None:
            continue
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite")
        if abs(v) > float(algebraic_bound(kind, n)) + tolerance:
            raise ValueError(f"|{name}| = {abs(v)} exceeds the algebraic bound "
                             f"{float(algebraic_bound(kind, n))} for n={n}; unphysical input")

    violated = []
    # m = 1 is never tested: its bound coincides with the algebraic bound
    for m in range(2, n + 1):
        v = value_M if (n - m) % 2 == 0 else value_Mplus
        if v is not None and abs(v) > float(model_bound(n, m)) + margin:
            violated.append(m)
    max_groups = min(violated) - 1 if violated else n
    return NonlocalityCertificate(n, value_M, value_Mplus, max_groups, n - max_groups, tuple(violated))


def theta_critical(m: int) -> float:
    """GHZ angle above which the ``m``-group bound is violated: ``sin 2t = 2**(-(m-1)/2)``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return 0.5 * math.asin(2 ** (-(m - 1) / 2))
