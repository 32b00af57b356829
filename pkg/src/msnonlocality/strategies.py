"""Exact maxima of correlation polynomials under classical communication models.

All maxima here are over deterministic strategies: a party (or group) outputs
a +-1 function of the inputs it knows, and the correlator of an assignment is
the product of all outputs.  Shared randomness cannot do better since the
objective is linear in the strategy mixture.

Values are exact (:class:`~msnonlocality.algebra.Sqrt2Number`).  Enumeration
uses integer numpy arrays from :meth:`MSPolynomial.integer_parts`.  In every
search the party or group with the largest information set is not enumerated:
given the others, its best response is the sign of its conditional sum, which
also takes care of the overall sign.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .algebra import (
    Coefficient,
    MSPolynomial,
    Sqrt2Number,
    build_M,
    build_M_pm,
    build_S,
    evaluate_exact,
    prime,
    restrict,
)

LOCAL_LIMIT = 8
NAIVE_LIMIT = 4
# cap on (number of enumerated strategy combinations) * 2**n
CELL_BUDGET = 2**25


class EnumerationLimitError(ValueError):
    """The requested search exceeds the configured enumeration budget."""


# -- topologies ---------------------------------------------------------------

@dataclass(frozen=True)
class Partition:
    """Disjoint groups of 1-based party indices covering ``1..n``."""

    groups: tuple[tuple[int, ...], ...]

    def __init__(self, groups: Iterable[Iterable[int]], n: int | None = None):
        gs = tuple(tuple(sorted(int(j) for j in g)) for g in groups)
        if any(len(g) == 0 for g in gs):
            raise ValueError("groups must be nonempty")
        flat = [j for g in gs for j in g]
        if len(set(flat)) != len(flat):
            raise ValueError("groups must be disjoint")
        size = len(flat) if n is None else n
        if sorted(flat) != list(range(1, size + 1)):
            raise ValueError(f"groups must cover parties 1..{size}")
        object.__setattr__(self, "groups", gs)

    @property
    def n(self) -> int:
        return sum(len(g) for g in self.groups)

    @property
    def m(self) -> int:
        return len(self.groups)

    @classmethod
    def parse(cls, text: str, n: int | None = None) -> "Partition":
        """Parse ``"1,2;3,4"`` (groups separated by ``;``)."""
        groups = [[int(x) for x in chunk.split(",") if x.strip()] for chunk in text.split(";")]
        return cls(groups, n)

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls([[j] for j in range(1, n + 1)])

    def __str__(self):
        return ";".join(",".join(map(str, g)) for g in self.groups)


def set_partitions(n: int) -> Iterator[Partition]:
    """Every partition of parties ``1..n`` (Bell-number many)."""
    def rec(items):
        if not items:
            yield []
            return
        first, rest = items[0], items[1:]
        for part in rec(rest):
            yield [[first]] + part
            for i in range(len(part)):
                yield part[:i] + [[first] + part[i]] + part[i + 1:]
    for groups in rec(list(range(1, n + 1))):
        yield Partition(groups, n)


@dataclass(frozen=True)
class BroadcastSet:
    """Parties (1-based) that announce their input to everyone."""

    broadcasters: frozenset[int]
    n: int

    def __init__(self, broadcasters: Iterable[int], n: int):
        b = frozenset(int(j) for j in broadcasters)
        if any(not 1 <= j <= n for j in b):
            raise ValueError(f"broadcasters must lie in 1..{n}")
        object.__setattr__(self, "broadcasters", b)
        object.__setattr__(self, "n", n)

    @property
    def k(self) -> int:
        return len(self.broadcasters)

    @classmethod
    def parse(cls, text: str, n: int) -> "BroadcastSet":
        return cls([int(x) for x in text.replace(";", ",").split(",") if x.strip()], n)


@dataclass(frozen=True)
class RestrainedConfig:
    """A distinguished subset of parties; every other party hears at most one of them.

    ``assignment`` maps outside parties to the subset member whose input they
    receive (missing or ``None`` means none).  Outside parties know each
    other's inputs; subset members know their own input and all outside inputs.
    """

    subset: frozenset[int]
    assignment: Mapping[int, int | None]
    n: int

    def __init__(self, subset: Iterable[int], assignment: Mapping[int, int | None] | None, n: int):
        sub = frozenset(int(j) for j in subset)
        if not sub or any(not 1 <= j <= n for j in sub):
            raise ValueError(f"subset must be a nonempty subset of 1..{n}")
        assignment = dict(assignment or {})
        for j, target in assignment.items():
            if j in sub or not 1 <= j <= n:
                raise ValueError(f"assignment key {j} must be a party outside the subset")
            if target is not None and target not in sub:
                raise ValueError(f"party {j} is assigned to {target}, which is not in the subset")
        object.__setattr__(self, "subset", sub)
        object.__setattr__(self, "assignment", assignment)
        object.__setattr__(self, "n", n)

    @property
    def m(self) -> int:
        return len(self.subset)

    def outside(self) -> list[int]:
        return [j for j in range(1, self.n + 1) if j not in self.subset]


@dataclass(frozen=True)
class GroupStrategy:
    """Deterministic output of a group as a function of its joint input.

    ``outputs[u]`` is the +-1 output for local assignment ``u``, where bit
    ``i`` of ``u`` is the input of ``group[i]`` (little-endian, like global
    assignments).  Only the product of a group's outputs enters correlators,
    so one output per group suffices.
    """

    group: tuple[int, ...]
    outputs: tuple[int, ...]

    def __post_init__(self):
        if len(self.outputs) != 2 ** len(self.group):
            raise ValueError("outputs must have one entry per joint input of the group")
        if any(v not in (1, -1) for v in self.outputs):
            raise ValueError("outputs must be +1 or -1")

    def lift(self, n: int) -> np.ndarray:
        """Table of this group's output over all global assignments."""
        idx = _local_index(n, [j - 1 for j in self.group])
        return np.asarray(self.outputs, dtype=np.int64)[idx]

    def to_dict(self) -> dict:
        return {"group": list(self.group), "outputs": list(self.outputs)}


def strategy_table(n: int, strategies: Sequence[GroupStrategy]) -> np.ndarray:
    """Correlation table (integer +-1) produced by independent group strategies."""
    t = np.ones(2**n, dtype=np.int64)
    for g in strategies:
        t = t * g.lift(n)
    return t


# -- enumeration engine -------------------------------------------------------

def _local_index(n: int, info: Sequence[int]) -> np.ndarray:
    """For each global assignment, the packed bits of the parties in ``info`` (0-based)."""
    s = np.arange(2**n)
    u = np.zeros(2**n, dtype=np.int64)
    for i, j in enumerate(info):
        u |= ((s >> j) & 1) << i
    return u


def _function_tables(n: int, info: Sequence[int], halve: bool = False) -> np.ndarray:
    """All +-1 functions of the inputs in ``info``, lifted to global assignments.

    Row ``f`` outputs ``-1`` at local assignment ``u`` iff bit ``u`` of ``f``
    is set.  With ``halve`` only functions with output +1 at ``u = 0`` are
    kept (one of each +-pair).
    """
    size = 2 ** len(info)
    fs = np.arange(0, 2**size, 2 if halve else 1, dtype=np.int64)
    outs = 1 - 2 * ((fs[:, None] >> np.arange(size)[None, :]) & 1)
    return outs[:, _local_index(n, info)]


def _exact_sign(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Sign of ``a + b sqrt 2`` for integer arrays, computed exactly."""
    same = np.sign(a + b)
    mixed = np.where(a * a > 2 * b * b, np.sign(a), np.sign(b))
    return np.where((a >= 0) == (b >= 0), same, mixed).astype(np.int64)


def _exact_argmax(a: np.ndarray, b: np.ndarray) -> int:
    """Index of the largest ``a + b sqrt 2``; lowest index among ties."""
    approx = a + b * np.sqrt(2.0)
    top = approx.max()
    cand = np.flatnonzero(approx >= top - 1e-9 * max(1.0, abs(top)))
    best = int(cand[0])
    best_val = Sqrt2Number(int(a[best]), int(b[best]))
    for i in cand[1:]:
        v = Sqrt2Number(int(a[i]), int(b[i]))
        if v > best_val:
            best, best_val = int(i), v
    return best


def _best_product(p: MSPolynomial, enum_infos: Sequence[Sequence[int]], closed_info: Sequence[int],
                  budget: int = CELL_BUDGET):
    """Maximize ``|sum_s c(s) prod_i f_i(s)|`` over +-1 functions ``f_i`` of the given info sets.

    ``enum_infos`` are enumerated; the function of ``closed_info`` is chosen
    optimally in closed form.  Returns ``(value, enum_function_indices,
    closed_outputs)``.
    """
    n = p.n
    A, B, K = p.integer_parts()
    counts = []
    for i, info in enumerate(enum_infos):
        size = 2 ** (2 ** len(info))
        counts.append(size // 2 if i == 0 else size)
    combos = int(np.prod(counts, dtype=object)) if counts else 1
    if combos * 2**n > budget:
        raise EnumerationLimitError(
            f"search needs {combos} strategy combinations over {2**n} assignments "
            f"(budget {budget} cells); reduce group sizes or raise the budget")

    T = np.ones((1, 2**n), dtype=np.int64)
    for i, info in enumerate(enum_infos):
        F = _function_tables(n, info, halve=(i == 0))
        T = (T[:, None, :] * F[None, :, :]).reshape(-1, 2**n)

    u = _local_index(n, closed_info)
    ind = np.zeros((2**n, 2 ** len(closed_info)), dtype=np.int64)
    ind[np.arange(2**n), u] = 1
    inner_a = (T * A) @ ind
    inner_b = (T * B) @ ind
    sg = _exact_sign(inner_a, inner_b)
    tot_a = (sg * inner_a).sum(axis=1)
    tot_b = (sg * inner_b).sum(axis=1)
    best = _exact_argmax(tot_a, tot_b)

    denom = Fraction(2**K)
    value = Sqrt2Number(Fraction(int(tot_a[best])) / denom, Fraction(int(tot_b[best])) / denom)
    idx = np.unravel_index(best, counts) if counts else ()
    enum_fs = [int(f) * 2 if i == 0 else int(f) for i, f in enumerate(idx)]
    closed = tuple(int(x) if x != 0 else 1 for x in sg[best])
    return value, enum_fs, closed


def _outputs_of(f: int, size: int) -> tuple[int, ...]:
    return tuple(1 - 2 * ((f >> u) & 1) for u in range(2**size))


# -- model maxima -------------------------------------------------------------

def grouping_max(p: MSPolynomial, part: Partition | Iterable[Iterable[int]],
                 budget: int = CELL_BUDGET) -> tuple[Sqrt2Number, list[GroupStrategy]]:
    """Exact maximum of ``|p|`` when the parties form the groups of ``part``.

    Each group outputs an arbitrary +-1 function of its joint input; groups do
    not communicate.  Returns the value and one maximizing strategy per group
    (in the order of ``part.groups``).
    """
    if not isinstance(part, Partition):
        part = Partition(part, p.n)
    if part.n != p.n:
        raise ValueError(f"partition covers {part.n} parties, polynomial has {p.n}")
    groups = list(part.groups)
    closed_pos = max(range(len(groups)), key=lambda i: (len(groups[i]), -i))
    enum_pos = [i for i in range(len(groups)) if i != closed_pos]
    value, fs, closed = _best_product(
        p, [[j - 1 for j in groups[i]] for i in enum_pos], [j - 1 for j in groups[closed_pos]], budget)
    strategies: list[GroupStrategy | None] = [None] * len(groups)
    for i, f in zip(enum_pos, fs):
        strategies[i] = GroupStrategy(groups[i], _outputs_of(f, len(groups[i])))
    strategies[closed_pos] = GroupStrategy(groups[closed_pos], closed)
    return value, strategies


def local_max(p: MSPolynomial, limit: int = LOCAL_LIMIT) -> tuple[Sqrt2Number, list[tuple[int, int]]]:
    """Exact local bound of ``p`` with a witness ``[(a_1, a'_1), ..., (a_n, a'_n)]``."""
    if p.n > limit:
        raise EnumerationLimitError(f"local enumeration limited to n <= {limit}, got n={p.n}")
    if p.n == 0:
        return abs(p.coefficient(0).to_sqrt2()), []
    value, strategies = grouping_max(p, Partition.singletons(p.n))
    return value, [tuple(g.outputs) for g in strategies]


def conditional_max(p: MSPolynomial, B: BroadcastSet | Iterable[int],
                    limit: int = LOCAL_LIMIT) -> tuple[Sqrt2Number, dict[str, list[tuple[int, int]]]]:
    """Broadcasting-model maximum: ``sum_b local_max(restrict(p, B=b))``.

    Once the broadcast inputs ``b`` are fixed, every party acts locally and
    the broadcasters' outputs only contribute a sign, so each ``b`` is
    optimized independently.  The witness maps each broadcast assignment
    (bitstring over ``sorted(B)``) to the local strategy of the other parties.
    """
    if not isinstance(B, BroadcastSet):
        B = BroadcastSet(B, p.n)
    if B.n != p.n:
        raise ValueError("broadcast set and polynomial disagree on n")
    bs = sorted(B.broadcasters)
    if p.n - len(bs) > limit:
        raise EnumerationLimitError(f"{p.n - len(bs)} non-broadcasting parties exceed limit {limit}")
    total = Sqrt2Number()
    witness = {}
    for bits in itertools.product((0, 1), repeat=len(bs)):
        q = restrict(p, dict(zip(bs, bits)))
        value, w = local_max(q, limit)
        total = total + value
        witness["".join(map(str, bits))] = w
    return total, witness


# -- naive oracles ------------------------------------------------------------

def _achievable_tables(n: int, infos: Sequence[Sequence[int]]) -> np.ndarray:
    """Every +-1 correlation table producible when party ``j`` knows the inputs ``infos[j]``.

    Products of +-1 functions correspond to sums of GF(2) vectors, so the
    achievable tables form the span of the per-party function spaces.  The
    span is computed by elimination and enumerated in full.
    """
    basis: list[int] = []  # reduced row echelon, as bitmasks over assignments
    pivots: list[int] = []
    for info in infos:
        u = _local_index(n, info)
        for val in range(2 ** len(info)):
            v = 0
            for s in np.flatnonzero(u == val):
                v |= 1 << int(s)
            for piv, row in zip(pivots, basis):
                if v >> piv & 1:
                    v ^= row
            if v:
                piv = v.bit_length() - 1
                for i, row in enumerate(basis):
                    if row >> piv & 1:
                        basis[i] = row ^ v
                basis.append(v)
                pivots.append(piv)
    d = len(basis)
    rows = np.array([[(r >> s) & 1 for s in range(2**n)] for r in basis], dtype=np.int64).reshape(d, 2**n)
    coeff = (np.arange(2**d)[:, None] >> np.arange(d)[None, :]) & 1
    bits = (coeff @ rows) % 2
    return 1 - 2 * bits


def _max_over_tables(p: MSPolynomial, tables: np.ndarray) -> Sqrt2Number:
    A, B, K = p.integer_parts()
    va, vb = tables @ A, tables @ B
    sg = _exact_sign(va, vb)
    best = _exact_argmax(sg * va, sg * vb)
    return Sqrt2Number(Fraction(int(sg[best] * va[best]), 2**K), Fraction(int(sg[best] * vb[best]), 2**K))


def broadcast_max_naive(p: MSPolynomial, B: BroadcastSet | Iterable[int]) -> Sqrt2Number:
    """Broadcasting maximum by enumerating every achievable deterministic table (n <= 4)."""
    if p.n > NAIVE_LIMIT:
        raise EnumerationLimitError(f"naive enumeration limited to n <= {NAIVE_LIMIT}")
    if not isinstance(B, BroadcastSet):
        B = BroadcastSet(B, p.n)
    bs = {j - 1 for j in B.broadcasters}
    infos = [sorted(bs | {j}) for j in range(p.n)]
    return _max_over_tables(p, _achievable_tables(p.n, infos))


def restrained_max_naive(p: MSPolynomial, cfg: RestrainedConfig) -> Sqrt2Number:
    """Restrained-subset maximum by enumerating every achievable deterministic table (n <= 4)."""
    if p.n > NAIVE_LIMIT:
        raise EnumerationLimitError(f"naive enumeration limited to n <= {NAIVE_LIMIT}")
    if cfg.n != p.n:
        raise ValueError("configuration and polynomial disagree on n")
    outside = {j - 1 for j in cfg.outside()}
    infos = []
    for j in range(1, p.n + 1):
        if j in cfg.subset:
            infos.append(sorted(outside | {j - 1}))
        else:
            target = cfg.assignment.get(j)
            extra = {target - 1} if target is not None else set()
            infos.append(sorted(outside | extra))
    return _max_over_tables(p, _achievable_tables(p.n, infos))


# -- tight strategies ---------------------------------------------------------

def _group_block(size: int) -> tuple[int, ...]:
    """Outputs reaching the algebraic bound of both polynomials of a group's pair.

    Odd groups use ``(M, M')``, even groups ``(M+, M-)``.  The two members of
    each pair have disjoint supports, so matching the sign of whichever
    coefficient is nonzero saturates both at once.
    """
    if size % 2:
        first = build_M(size)
        second = prime(first)
    else:
        first, second = build_M_pm(size, "+"), build_M_pm(size, "-")
    out = []
    for u in range(2**size):
        c = first.coefficient(u)
        if c.is_zero():
            c = second.coefficient(u)
        out.append(-1 if c < 0 else 1)
    return tuple(out)


def tight_strategy(n: int, part: Partition | Iterable[Iterable[int]]) -> list[GroupStrategy]:
    """Group strategies reaching ``|S_n^m| = 2**((n-m)/2)`` for the given partition."""
    if not isinstance(part, Partition):
        part = Partition(part, n)
    if part.n != n:
        raise ValueError(f"partition covers {part.n} parties, expected {n}")
    strategies = [GroupStrategy(g, _group_block(len(g))) for g in part.groups]
    target = Coefficient(1, n - part.m)
    value = evaluate_exact(build_S(n, part.m), strategy_table(n, strategies))
    if abs(value) != target:
        raise AssertionError(f"tight construction reached {value}, expected {target}")
    return strategies
