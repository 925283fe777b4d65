"""Compositions, integer partitions, set partitions and partially frozen partitions.

Set partitions are kept in canonical form: blocks sorted by least element,
elements ascending inside each block.  EPPF tables are keyed by integer
partitions (non-increasing tuples); compositions are sorted before lookup.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Dict, Iterable, Iterator, List, Mapping, Sequence, Tuple

from coalfreeze._numbers import Scalar, format_scalar, parse_scalar

Composition = Tuple[int, ...]
IntegerPartition = Tuple[int, ...]
Block = Tuple[int, ...]

#: exhaustive enumeration ceiling; Bell(12) = 4213597
MAX_ENUMERATION_N = 12


def as_composition(parts: Iterable[int]) -> Composition:
    parts = tuple(int(x) for x in parts)
    if not parts or any(x < 1 for x in parts):
        raise ValueError(f"composition parts must be positive and non-empty: {parts}")
    return parts


def as_partition(parts: Iterable[int]) -> IntegerPartition:
    """Sort a composition into the canonical non-increasing integer partition."""
    return tuple(sorted(as_composition(parts), reverse=True))


def integer_partitions(m: int) -> List[IntegerPartition]:
    """All integer partitions of ``m``, in reverse lexicographic order."""
    if m < 1:
        raise ValueError("m must be positive")
    return list(_partitions(m, m))


@lru_cache(maxsize=None)
def _partitions(m: int, largest: int) -> Tuple[IntegerPartition, ...]:
    if m == 0:
        return ((),)
    out = []
    for first in range(min(m, largest), 0, -1):
        for rest in _partitions(m - first, first):
            out.append((first,) + rest)
    return tuple(out)


def count_set_partitions(lam: Sequence[int]) -> int:
    """Number of set partitions of [m] whose shape is ``lam``."""
    lam = as_partition(lam)
    count = factorial(sum(lam))
    for part in lam:
        count //= factorial(part)
    for mult in Counter(lam).values():
        count //= factorial(mult)
    return count


def bell(n: int) -> int:
    return sum(count_set_partitions(lam) for lam in integer_partitions(n))


def _canonical_blocks(blocks: Iterable[Iterable[int]]) -> Tuple[Block, ...]:
    out = [tuple(sorted(int(x) for x in b)) for b in blocks]
    out.sort(key=lambda b: b[0] if b else 0)
    return tuple(out)


@dataclass(frozen=True)
class SetPartition:
    """A partition of ``{1, ..., n}`` into non-empty disjoint blocks."""

    blocks: Tuple[Block, ...]
    n: int = field(default=-1)

    def __post_init__(self):
        blocks = _canonical_blocks(self.blocks)
        if any(len(b) == 0 for b in blocks):
            raise ValueError("empty block")
        elements = [x for b in blocks for x in b]
        n = len(elements) if self.n < 0 else self.n
        if sorted(elements) != list(range(1, n + 1)):
            raise ValueError(f"blocks {blocks} do not partition [{n}]")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "n", n)

    @classmethod
    def singletons(cls, n: int) -> "SetPartition":
        return cls(tuple((i,) for i in range(1, n + 1)))

    @classmethod
    def one_block(cls, n: int) -> "SetPartition":
        return cls((tuple(range(1, n + 1)),))

    def __len__(self) -> int:
        return len(self.blocks)

    def to_json(self) -> List[List[int]]:
        return [list(b) for b in self.blocks]

    def __str__(self) -> str:
        return "{" + ",".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks) + "}"


@dataclass(frozen=True)
class PartiallyFrozenPartition:
    """A set partition whose blocks each carry an active/frozen flag."""

    blocks: Tuple[Block, ...]
    frozen: Tuple[bool, ...]

    def __post_init__(self):
        if len(self.blocks) != len(self.frozen):
            raise ValueError("one status flag per block is required")
        pairs = sorted(
            ((tuple(sorted(b)), bool(f)) for b, f in zip(self.blocks, self.frozen)),
            key=lambda bf: bf[0][0] if bf[0] else 0,
        )
        SetPartition(tuple(b for b, _ in pairs))  # validates
        object.__setattr__(self, "blocks", tuple(b for b, _ in pairs))
        object.__setattr__(self, "frozen", tuple(f for _, f in pairs))

    @classmethod
    def all_active_singletons(cls, n: int) -> "PartiallyFrozenPartition":
        """The start state with every element an active singleton."""
        return cls(tuple((i,) for i in range(1, n + 1)), (False,) * n)

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def active(self) -> Tuple[Block, ...]:
        return tuple(b for b, f in zip(self.blocks, self.frozen) if not f)

    @property
    def frozen_blocks(self) -> Tuple[Block, ...]:
        return tuple(b for b, f in zip(self.blocks, self.frozen) if f)

    def induced(self) -> SetPartition:
        return SetPartition(self.blocks)

    def restrict(self, m: int) -> "PartiallyFrozenPartition":
        if not 1 <= m <= self.n:
            raise ValueError(f"restriction size {m} out of range 1..{self.n}")
        blocks, flags = [], []
        for b, f in zip(self.blocks, self.frozen):
            kept = tuple(x for x in b if x <= m)
            if kept:
                blocks.append(kept)
                flags.append(f)
        return PartiallyFrozenPartition(tuple(blocks), tuple(flags))

    def to_json(self) -> List[dict]:
        return [{"block": list(b), "frozen": f} for b, f in zip(self.blocks, self.frozen)]


def shape(sp: SetPartition) -> IntegerPartition:
    return tuple(sorted((len(b) for b in sp.blocks), reverse=True))


def restrict(sp: SetPartition, m: int) -> SetPartition:
    """Delete the elements ``m+1, ..., n`` and drop emptied blocks."""
    if not 1 <= m <= sp.n:
        raise ValueError(f"restriction size {m} out of range 1..{sp.n}")
    kept = (tuple(x for x in b if x <= m) for b in sp.blocks)
    return SetPartition(tuple(b for b in kept if b))


def _restricted_growth(n: int) -> Iterator[List[int]]:
    labels = [0] * n
    maxima = [0] * n

    def rec(i: int):
        if i == n:
            yield labels
            return
        for lab in range(maxima[i - 1] + 2):
            labels[i] = lab
            maxima[i] = max(maxima[i - 1], lab)
            yield from rec(i + 1)

    if n == 0:
        return
    yield from rec(1)


def iter_set_partitions(n: int) -> Iterator[SetPartition]:
    if not 1 <= n <= MAX_ENUMERATION_N:
        raise ValueError(f"exhaustive enumeration supports 1 <= n <= {MAX_ENUMERATION_N}, got {n}")
    for labels in _restricted_growth(n):
        blocks: Dict[int, List[int]] = {}
        for element, lab in enumerate(labels, start=1):
            blocks.setdefault(lab, []).append(element)
        yield SetPartition(tuple(tuple(b) for b in blocks.values()))


def enumerate_set_partitions(n: int) -> List[SetPartition]:
    """All Bell(n) set partitions of [n] in restricted-growth-string order."""
    return list(iter_set_partitions(n))


class EppfTable:
    """EPPF values on integer partitions of every ``m <= n_max``.

    Values may be exact rationals or floats.  Lookups accept any composition;
    it is sorted to the canonical key first.
    """

    def __init__(self, n_max: int, values: Mapping[Sequence[int], Scalar]):
        self.n_max = int(n_max)
        self.values: Dict[IntegerPartition, Scalar] = {as_partition(k): v for k, v in values.items()}

    def __getitem__(self, parts: Sequence[int]) -> Scalar:
        return self.values[as_partition(parts)]

    def __contains__(self, parts) -> bool:
        return as_partition(parts) in self.values

    def __eq__(self, other) -> bool:
        if not isinstance(other, EppfTable):
            return NotImplemented
        return self.n_max == other.n_max and self.values == other.values

    def __repr__(self) -> str:
        return f"EppfTable(n_max={self.n_max}, {len(self.values)} entries)"

    def missing(self) -> List[IntegerPartition]:
        return [lam for m in range(1, self.n_max + 1) for lam in integer_partitions(m) if lam not in self.values]

    def level(self, m: int) -> Dict[IntegerPartition, Scalar]:
        return {lam: self.values[lam] for lam in integer_partitions(m)}

    def shape_law(self, m: int) -> Dict[IntegerPartition, Scalar]:
        """Probability that the random partition of [m] has each shape."""
        return {lam: count_set_partitions(lam) * p for lam, p in self.level(m).items()}

    def normalization_defects(self) -> Dict[int, Scalar]:
        """``sum over set partitions of [m] of p(shape) - 1`` for each level m."""
        return {m: sum(self.shape_law(m).values()) - 1 for m in range(1, self.n_max + 1)}

    def to_json(self) -> dict:
        return {
            "n_max": self.n_max,
            "values": [
                {"partition": list(lam), "p": format_scalar(self.values[lam])}
                for m in range(1, self.n_max + 1)
                for lam in integer_partitions(m)
                if lam in self.values
            ],
        }

    @classmethod
    def from_json(cls, data, exact: bool = True) -> "EppfTable":
        if isinstance(data, str):
            data = json.loads(data)
        values = {tuple(entry["partition"]): parse_scalar(entry["p"], exact) for entry in data["values"]}
        return cls(int(data["n_max"]), values)

    def csv_rows(self) -> List[List[str]]:
        rows = []
        for m in range(1, self.n_max + 1):
            for lam in integer_partitions(m):
                if lam not in self.values:
                    continue
                v = self.values[lam]
                exact = str(v) if isinstance(v, Fraction) else ""
                rows.append(["+".join(map(str, lam)), str(m), exact, repr(float(v))])
        return rows


@dataclass
class AdditionRuleReport:
    ok: bool
    violations: List[Tuple[IntegerPartition, Scalar, Scalar]]

    def __bool__(self) -> bool:
        return self.ok


def check_addition_rule(p: EppfTable, n: int | None = None, tol: float = 0) -> AdditionRuleReport:
    """Check ``p(lam) = p(lam, 1) + sum_i p(lam + e_i)`` for every partition of every m < n.

    Each violation is reported as ``(lam, lhs, rhs)``.  ``tol`` should be 0 for
    exact tables.
    """
    n = p.n_max if n is None else n
    if n > p.n_max:
        raise ValueError(f"table only covers m <= {p.n_max}")
    missing = [lam for lam in p.missing() if sum(lam) <= n]
    if missing:
        raise ValueError(f"EPPF table incomplete, missing e.g. {missing[0]}")
    violations = []
    for m in range(1, n):
        for lam in integer_partitions(m):
            rhs = p[lam + (1,)]
            for i in range(len(lam)):
                bumped = list(lam)
                bumped[i] += 1
                rhs += p[bumped]
            lhs = p[lam]
            if (lhs != rhs) if tol == 0 else abs(lhs - rhs) > tol:
                violations.append((lam, lhs, rhs))
    return AdditionRuleReport(not violations, violations)
