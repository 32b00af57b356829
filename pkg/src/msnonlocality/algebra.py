"""Exact Mermin-Svetlichny polynomials.

A correlation polynomial on ``n`` parties is stored as a map from input
assignments to exact coefficients.  An assignment is an integer ``s`` in
``[0, 2**n)`` whose bit ``i`` is the setting of party ``i + 1``: bit value 0
selects the unprimed output ``a_j``, bit value 1 the primed output ``a'_j``.
When an assignment is written as a bitstring, character ``j`` is the bit of
party ``j + 1`` (so party 1 comes first).

Every coefficient produced by the MS recursion is an integer times a
half-integer power of two, see :class:`Coefficient`.  Sums of such numbers
with mixed parity of the exponent (e.g. model maxima of arbitrary
polynomials) live in Q(sqrt 2) and are represented by :class:`Sqrt2Number`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache, total_ordering
from typing import Iterable, Mapping

import numpy as np

SQRT2 = math.sqrt(2.0)

LABELS = ("M", "M'", "M+", "M-", "custom")


class InvalidPartyCount(ValueError):
    pass


@total_ordering
class Sqrt2Number:
    """Exact number ``a + b*sqrt(2)`` with rational ``a`` and ``b``."""

    __slots__ = ("a", "b")

    def __init__(self, a=0, b=0):
        self.a = Fraction(a)
        self.b = Fraction(b)

    @classmethod
    def coerce(cls, x) -> "Sqrt2Number":
        if isinstance(x, Sqrt2Number):
            return x
        if isinstance(x, Coefficient):
            return x.to_sqrt2()
        if isinstance(x, (int, Fraction)):
            return cls(x, 0)
        raise TypeError(f"cannot convert {type(x).__name__} exactly")

    def sign(self) -> int:
        a, b = self.a, self.b
        if a >= 0 and b >= 0:
            return int(a > 0 or b > 0)
        if a <= 0 and b <= 0:
            return -1
        # opposite signs: |a| vs |b| sqrt 2, never equal since sqrt 2 is irrational
        if a * a > 2 * b * b:
            return 1 if a > 0 else -1
        return 1 if b > 0 else -1

    def __add__(self, other):
        try:
            o = Sqrt2Number.coerce(other)
        except TypeError:
            return NotImplemented
        return Sqrt2Number(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return Sqrt2Number(-self.a, -self.b)

    def __sub__(self, other):
        try:
            return self + (-Sqrt2Number.coerce(other))
        except TypeError:
            return NotImplemented

    def __rsub__(self, other):
        return Sqrt2Number.coerce(other) - self

    def __mul__(self, other):
        try:
            o = Sqrt2Number.coerce(other)
        except TypeError:
            return NotImplemented
        return Sqrt2Number(self.a * o.a + 2 * self.b * o.b, self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __eq__(self, other):
        try:
            o = Sqrt2Number.coerce(other)
        except TypeError:
            return NotImplemented
        return self.a == o.a and self.b == o.b

    def __lt__(self, other):
        try:
            o = Sqrt2Number.coerce(other)
        except TypeError:
            return NotImplemented
        return (self - o).sign() < 0

    def __hash__(self):
        return hash((self.a, self.b))

    def __float__(self):
        return float(self.a) + float(self.b) * SQRT2

    def __repr__(self):
        return f"Sqrt2Number({self.a}, {self.b})"

    def __str__(self):
        if self.b == 0:
            return str(self.a)
        if self.a == 0:
            return f"{self.b}*sqrt(2)"
        return f"{self.a} + {self.b}*sqrt(2)"


@total_ordering
class Coefficient:
    """Exact ``numerator * 2**(half_exponent / 2)``.

    Kept in canonical form: the numerator is odd, or zero with a zero
    exponent.  Addition is only defined between values whose exponents have
    the same parity (otherwise the sum is not a single such term) and raises
    :class:`ArithmeticError` otherwise; use :class:`Sqrt2Number` for general
    sums.
    """

    __slots__ = ("numerator", "half_exponent")

    def __init__(self, numerator: int, half_exponent: int = 0):
        numerator, half_exponent = int(numerator), int(half_exponent)
        if numerator == 0:
            half_exponent = 0
        else:
            while numerator % 2 == 0:
                numerator //= 2
                half_exponent += 2
        self.numerator = numerator
        self.half_exponent = half_exponent

    @classmethod
    def power_of_sqrt2(cls, k: int) -> "Coefficient":
        """``sqrt(2)**k``"""
        return cls(1, k)

    def is_zero(self) -> bool:
        return self.numerator == 0

    def __add__(self, other):
        if not isinstance(other, Coefficient):
            if isinstance(other, int):
                other = Coefficient(other)
            else:
                return NotImplemented
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        h1, h2 = self.half_exponent, other.half_exponent
        if (h1 - h2) % 2:
            raise ArithmeticError(f"{self} + {other} is not a single power-of-sqrt2 term")
        h = min(h1, h2)
        num = self.numerator * 2 ** ((h1 - h) // 2) + other.numerator * 2 ** ((h2 - h) // 2)
        return Coefficient(num, h)

    __radd__ = __add__

    def __neg__(self):
        return Coefficient(-self.numerator, self.half_exponent)

    def __sub__(self, other):
        if isinstance(other, int):
            other = Coefficient(other)
        if not isinstance(other, Coefficient):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, int):
            other = Coefficient(other)
        if not isinstance(other, Coefficient):
            return NotImplemented
        return Coefficient(self.numerator * other.numerator, self.half_exponent + other.half_exponent)

    __rmul__ = __mul__

    def div_sqrt2(self) -> "Coefficient":
        return Coefficient(self.numerator, self.half_exponent - 1)

    def __abs__(self):
        return Coefficient(abs(self.numerator), self.half_exponent)

    def to_sqrt2(self) -> Sqrt2Number:
        h = self.half_exponent
        if h % 2 == 0:
            return Sqrt2Number(self.numerator * Fraction(2) ** (h // 2), 0)
        return Sqrt2Number(0, self.numerator * Fraction(2) ** ((h - 1) // 2))

    def __float__(self):
        return self.numerator * 2.0 ** (self.half_exponent / 2)

    def __eq__(self, other):
        if isinstance(other, Coefficient):
            return (self.numerator, self.half_exponent) == (other.numerator, other.half_exponent)
        if isinstance(other, (int, Fraction, Sqrt2Number)):
            return self.to_sqrt2() == Sqrt2Number.coerce(other)
        return NotImplemented

    def __lt__(self, other):
        if isinstance(other, (Coefficient, int, Fraction, Sqrt2Number)):
            return self.to_sqrt2() < Sqrt2Number.coerce(other)
        return NotImplemented

    def __hash__(self):
        return hash((self.numerator, self.half_exponent))

    def __repr__(self):
        return f"Coefficient({self.numerator}, {self.half_exponent})"

    def __str__(self):
        if self.half_exponent == 0:
            return str(self.numerator)
        return f"{self.numerator}*2^({self.half_exponent}/2)"


def assignment_to_bits(s: int, n: int) -> str:
    return "".join(str((s >> j) & 1) for j in range(n))


def bits_to_assignment(bits: str) -> int:
    return sum(1 << j for j, ch in enumerate(bits) if ch == "1")


@dataclass(frozen=True, eq=False)
class MSPolynomial:
    """Correlation polynomial ``sum_s c(s) <a_1^{s_1} ... a_n^{s_n}>``.

    ``coeffs`` maps assignments to nonzero :class:`Coefficient` values.
    ``n == 0`` is allowed and denotes a constant (the result of fixing every
    input with :func:`restrict`).
    """

    n: int
    coeffs: Mapping[int, Coefficient]
    label: str = "custom"

    def __post_init__(self):
        if self.n < 0:
            raise InvalidPartyCount(f"party count must be >= 0, got {self.n}")
        if self.label not in LABELS:
            raise ValueError(f"unknown label {self.label!r}")
        clean = {}
        for s, c in self.coeffs.items():
            if not 0 <= s < 2**self.n:
                raise ValueError(f"assignment {s} out of range for n={self.n}")
            if not isinstance(c, Coefficient):
                c = Coefficient(c)
            if not c.is_zero():
                clean[int(s)] = c
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))

    def __eq__(self, other):
        if not isinstance(other, MSPolynomial):
            return NotImplemented
        return self.n == other.n and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.n, tuple(self.coeffs.items())))

    def __len__(self):
        return len(self.coeffs)

    def coefficient(self, s: int) -> Coefficient:
        return self.coeffs.get(s, Coefficient(0))

    def __neg__(self):
        return MSPolynomial(self.n, {s: -c for s, c in self.coeffs.items()})

    def __add__(self, other: "MSPolynomial"):
        _check_same_n(self, other)
        out = dict(self.coeffs)
        for s, c in other.coeffs.items():
            out[s] = out.get(s, Coefficient(0)) + c
        return MSPolynomial(self.n, out)

    def __sub__(self, other: "MSPolynomial"):
        return self + (-other)

    def scale(self, c: Coefficient) -> "MSPolynomial":
        return MSPolynomial(self.n, {s: v * c for s, v in self.coeffs.items()})

    def div_sqrt2(self) -> "MSPolynomial":
        return MSPolynomial(self.n, {s: c.div_sqrt2() for s, c in self.coeffs.items()})

    def with_label(self, label: str) -> "MSPolynomial":
        return MSPolynomial(self.n, self.coeffs, label)

    def abs_sum(self) -> Sqrt2Number:
        """Sum of |c(s)|, the largest value reachable with unrestricted +-1 correlators."""
        total = Sqrt2Number()
        for c in self.coeffs.values():
            total = total + abs(c)
        return total

    def dense(self) -> np.ndarray:
        """Float coefficient vector of length 2**n."""
        out = np.zeros(2**self.n)
        for s, c in self.coeffs.items():
            out[s] = float(c)
        return out

    def integer_parts(self) -> tuple[np.ndarray, np.ndarray, int]:
        """Return ``(A, B, K)`` with ``c(s) = (A[s] + B[s] sqrt 2) / 2**K`` exactly.

        Used by the enumeration code to do exact arithmetic with integer numpy
        arrays.
        """
        K = 0
        for c in self.coeffs.values():
            K = max(K, -(c.half_exponent // 2))
        A = np.zeros(2**self.n, dtype=np.int64)
        B = np.zeros(2**self.n, dtype=np.int64)
        for s, c in self.coeffs.items():
            h = c.half_exponent
            if h % 2 == 0:
                A[s] = c.numerator * 2 ** (h // 2 + K)
            else:
                B[s] = c.numerator * 2 ** ((h - 1) // 2 + K)
        if max(np.abs(A).max(initial=0), np.abs(B).max(initial=0)) > 2**40:
            raise OverflowError("coefficients too large for exact int64 enumeration")
        return A, B, K

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "label": self.label,
            "terms": [
                [assignment_to_bits(s, self.n), c.numerator, c.half_exponent]
                for s, c in self.coeffs.items()
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MSPolynomial":
        n = int(d["n"])
        coeffs = {}
        for bits, num, half in d["terms"]:
            if len(bits) != n:
                raise ValueError(f"assignment {bits!r} does not have {n} bits")
            coeffs[bits_to_assignment(bits)] = Coefficient(num, half)
        return cls(n, coeffs, d.get("label", "custom"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "MSPolynomial":
        return cls.from_dict(json.loads(text))

    def __str__(self):
        parts = []
        for s, c in self.coeffs.items():
            mono = " ".join(f"a{j + 1}'" if (s >> j) & 1 else f"a{j + 1}" for j in range(self.n))
            parts.append(f"({c}) {mono}")
        return " + ".join(parts) if parts else "0"


@dataclass(frozen=True, eq=False)
class CorrelationTable:
    """Correlators ``E(s)`` for all ``2**n`` joint input assignments."""

    n: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (2**self.n,):
            raise ValueError(f"expected {2**self.n} correlators, got shape {v.shape}")
        if np.any(np.abs(v) > 1 + 1e-12) or not np.all(np.isfinite(v)):
            raise ValueError("correlators must lie in [-1, 1]")
        v = np.clip(v, -1.0, 1.0)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __getitem__(self, s):
        return self.values[s]

    def to_csv_rows(self) -> list[tuple[str, float]]:
        return [(assignment_to_bits(s, self.n), float(e)) for s, e in enumerate(self.values)]


def _check_same_n(p, q):
    if p.n != q.n:
        raise ValueError(f"party count mismatch: {p.n} vs {q.n}")


def _check_n(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidPartyCount(f"party count must be a positive integer, got {n!r}")


@lru_cache(maxsize=None)
def _build_M_pair(n: int) -> tuple[MSPolynomial, MSPolynomial]:
    if n == 1:
        return (MSPolynomial(1, {0: Coefficient(1)}, "M"), MSPolynomial(1, {1: Coefficient(1)}, "M'"))
    M, Mp = _build_M_pair(n - 1)
    half = Coefficient(1, -2)
    hi = 1 << (n - 1)
    new_M, new_Mp = {}, {}
    for s in range(2 ** (n - 1)):
        x, y = M.coefficient(s), Mp.coefficient(s)
        # M_n  = 1/2 a_n (M + M') + 1/2 a'_n (M - M')
        # M'_n = 1/2 a'_n (M' + M) + 1/2 a_n (M' - M)
        new_M[s] = (x + y) * half
        new_M[s | hi] = (x - y) * half
        new_Mp[s | hi] = (y + x) * half
        new_Mp[s] = (y - x) * half
    return MSPolynomial(n, new_M, "M"), MSPolynomial(n, new_Mp, "M'")


def build_M(n: int) -> MSPolynomial:
    """The Mermin-Svetlichny polynomial ``M_n`` built by exact recursion from ``M_1 = a_1``."""
    _check_n(n)
    return _build_M_pair(n)[0]


def build_M_prime(n: int) -> MSPolynomial:
    _check_n(n)
    return _build_M_pair(n)[1]


def build_M_pm(n: int, sign: str | int = "+") -> MSPolynomial:
    """``M^+_n = (M_n + M'_n)/sqrt 2`` or ``M^-_n = (M_n - M'_n)/sqrt 2``."""
    _check_n(n)
    plus = _parse_sign(sign)
    M = build_M(n)
    Mp = prime(M)
    q = (M + Mp) if plus else (M - Mp)
    return q.div_sqrt2().with_label("M+" if plus else "M-")


def _parse_sign(sign) -> bool:
    if sign in ("+", 1, "plus"):
        return True
    if sign in ("-", -1, "minus"):
        return False
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def build_S(n: int, m: int) -> MSPolynomial:
    """``M_n`` if ``n - m`` is even, ``M^+_n`` otherwise."""
    _check_n(n)
    if not 1 <= m <= n:
        raise ValueError(f"group count m must satisfy 1 <= m <= n={n}, got {m}")
    return build_M(n) if (n - m) % 2 == 0 else build_M_pm(n, "+")


def ms_polynomial(kind: str, n: int) -> MSPolynomial:
    """Look up one of ``M``, ``M'``, ``M+``, ``M-`` by name."""
    kinds = {"M": build_M, "M'": build_M_prime,
             "M+": lambda k: build_M_pm(k, "+"), "M-": lambda k: build_M_pm(k, "-")}
    try:
        return kinds[kind](n)
    except KeyError:
        raise ValueError(f"unknown polynomial kind {kind!r}; expected one of {sorted(kinds)}") from None


_PRIME_LABEL = {"M": "M'", "M'": "M"}


def prime(p: MSPolynomial) -> MSPolynomial:
    """Exchange every primed and unprimed output (complement each assignment)."""
    full = 2**p.n - 1
    label = _PRIME_LABEL.get(p.label, "custom")
    return MSPolynomial(p.n, {s ^ full: c for s, c in p.coeffs.items()}, label)


def relabel_party(p: MSPolynomial, j: int) -> MSPolynomial:
    """Substitute ``a_j -> -a'_j`` and ``a'_j -> a_j`` for party ``j`` (1-based).

    The map has order four; applied twice it negates the polynomial.
    """
    if not 1 <= j <= p.n:
        raise IndexError(f"party index {j} out of range 1..{p.n}")
    bit = 1 << (j - 1)
    out = {}
    for s, c in p.coeffs.items():
        out[s ^ bit] = -c if not s & bit else c
    return MSPolynomial(p.n, out)


def permute_parties(p: MSPolynomial, perm: Iterable[int]) -> MSPolynomial:
    """Move party ``i + 1`` to position ``perm[i] + 1`` (0-based permutation)."""
    perm = list(perm)
    if sorted(perm) != list(range(p.n)):
        raise ValueError("not a permutation")
    out = {}
    for s, c in p.coeffs.items():
        t = 0
        for i, target in enumerate(perm):
            if (s >> i) & 1:
                t |= 1 << target
        out[t] = c
    return MSPolynomial(p.n, out, p.label)


def restrict(p: MSPolynomial, fixed: Mapping[int, int]) -> MSPolynomial:
    """Fix the inputs of some parties and return the polynomial on the others.

    ``fixed`` maps 1-based party indices to bits.  The remaining parties are
    renumbered 1..n-|fixed| in increasing order.
    """
    for j, b in fixed.items():
        if not 1 <= j <= p.n:
            raise ValueError(f"party index {j} out of range 1..{p.n}")
        if b not in (0, 1):
            raise ValueError(f"input of party {j} must be 0 or 1, got {b!r}")
    free = [j for j in range(p.n) if (j + 1) not in fixed]
    mask = sum(1 << (j - 1) for j in fixed)
    want = sum(1 << (j - 1) for j, b in fixed.items() if b)
    out = {}
    for s, c in p.coeffs.items():
        if s & mask != want:
            continue
        t = 0
        for new, old in enumerate(free):
            if (s >> old) & 1:
                t |= 1 << new
        out[t] = c
    return MSPolynomial(len(free), out)


def evaluate(p: MSPolynomial, t: CorrelationTable) -> float:
    """``sum_s c(s) E(s)`` in floating point."""
    if p.n != t.n:
        raise ValueError(f"party count mismatch: polynomial n={p.n}, table n={t.n}")
    return float(sum(float(c) * t.values[s] for s, c in p.coeffs.items()))


def evaluate_exact(p: MSPolynomial, signs) -> Sqrt2Number:
    """Exact value of ``p`` on an integer-valued table (e.g. a deterministic strategy)."""
    signs = np.asarray(signs)
    if signs.shape != (2**p.n,):
        raise ValueError(f"expected {2**p.n} correlators, got shape {signs.shape}")
    if not np.issubdtype(signs.dtype, np.integer):
        raise TypeError("exact evaluation needs an integer table")
    total = Sqrt2Number()
    for s, c in p.coeffs.items():
        v = int(signs[s])
        if v:
            total = total + c.to_sqrt2() * v
    return total


# -- bounds -----------------------------------------------------------------

def _kind(kind: str) -> str:
    if kind in ("M", "M'"):
        return "M"
    if kind in ("M+", "M-", "M±", "Mpm"):
        return "M±"
    raise ValueError(f"unknown polynomial kind {kind!r}")


def local_bound(kind: str) -> Coefficient:
    """1 for ``M_n``, sqrt 2 for ``M^±_n``."""
    return Coefficient(1, 0) if _kind(kind) == "M" else Coefficient(1, 1)


def algebraic_bound(kind: str, n: int) -> Coefficient:
    """``2**floor(n/2)`` for ``M_n``; ``2**(floor((n-1)/2) + 1/2)`` for ``M^±_n``."""
    _check_n(n)
    if _kind(kind) == "M":
        return Coefficient(1, 2 * (n // 2))
    return Coefficient(1, 2 * ((n - 1) // 2) + 1)


def model_bound(n: int, m: int) -> Coefficient:
    """Maximum of ``|S_n^m|`` for ``n`` parties split into ``m`` groups (or ``n - m`` broadcasters)."""
    _check_n(n)
    if not 1 <= m <= n:
        raise ValueError(f"group count m must satisfy 1 <= m <= n={n}, got {m}")
    return Coefficient(1, n - m)
