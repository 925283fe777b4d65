"""EPPF engines.

Both forward recursions are written once over a generic coefficient ring, so
the same code fills a numeric table from a concrete decrement matrix and a
symbolic table whose entries are polynomials in the formal variables q(b:k).
"""
from __future__ import annotations

from fractions import Fraction
from itertools import permutations
from math import comb, factorial, prod
from typing import Callable, Dict, Iterable, Mapping, Sequence, Tuple

from coalfreeze._numbers import Scalar, multinomial
from coalfreeze.decrement import DecrementMatrix
from coalfreeze.partitions import (
    EppfTable,
    IntegerPartition,
    as_composition,
    as_partition,
    integer_partitions,
)

SYMBOLIC_MAX_N = 6
EXPLICIT_MAX_PARTS = 8

Monomial = Tuple[Tuple[int, int], ...]


class QPolynomial:
    """Polynomial in the variables q(b:k) with rational coefficients.

    A monomial is a tuple of ``(b, k)`` factors sorted by decreasing ``b``,
    which is also how the terms print, e.g. ``1/6 q(4:2)q(3:2)q(2:1)``.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        self.terms: Dict[Monomial, Fraction] = {m: Fraction(c) for m, c in (terms or {}).items() if c != 0}

    @classmethod
    def constant(cls, c) -> "QPolynomial":
        return cls({(): Fraction(c)})

    @classmethod
    def var(cls, b: int, k: int) -> "QPolynomial":
        return cls({((b, k),): Fraction(1)})

    @classmethod
    def parse_monomial(cls, factors: Iterable[Tuple[int, int]]) -> Monomial:
        return tuple(sorted(factors, key=lambda f: (-f[0], -f[1])))

    def __add__(self, other) -> "QPolynomial":
        other = other if isinstance(other, QPolynomial) else QPolynomial.constant(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return QPolynomial(out)

    __radd__ = __add__

    def __mul__(self, other) -> "QPolynomial":
        if not isinstance(other, QPolynomial):
            return QPolynomial({m: c * other for m, c in self.terms.items()})
        out: Dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = self.parse_monomial(m1 + m2)
                out[m] = out.get(m, Fraction(0)) + c1 * c2
        return QPolynomial(out)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, QPolynomial):
            other = QPolynomial.constant(other)
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def evaluate(self, q: Callable[[int, int], Scalar]) -> Scalar:
        return sum((c * prod((q(b, k) for b, k in m), start=1) for m, c in self.terms.items()), Fraction(0))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        pieces = []
        for m in sorted(self.terms, key=lambda m: tuple((-b, -k) for b, k in m)):
            c = self.terms[m]
            mono = "".join(f"q({b}:{k})" for b, k in m)
            if not mono:
                pieces.append(str(c))
            elif c == 1:
                pieces.append(mono)
            else:
                pieces.append(f"{c} {mono}")
        return " + ".join(pieces)

    __repr__ = __str__


def _replace(lam: IntegerPartition, j: int, new: int | None) -> IntegerPartition:
    parts = list(lam)
    if new is None:
        del parts[j]
    else:
        parts[j] = new
    return tuple(sorted(parts, reverse=True))


def _mohle_values(n: int, entry: Callable[[int, int], object], one) -> Dict[IntegerPartition, object]:
    p: Dict[IntegerPartition, object] = {(1,): one}
    for m in range(2, n + 1):
        for lam in integer_partitions(m):
            singles = sum(p[_replace(lam, j, None)] for j, part in enumerate(lam) if part == 1)
            total = entry(m, 1) * Fraction(1, m) * singles if singles else 0 * one
            for k in range(2, m + 1):
                inner = 0 * one
                for j, part in enumerate(lam):
                    if part >= k:
                        inner = inner + Fraction(comb(part, k), comb(m, k)) * p[_replace(lam, j, part - k + 1)]
                if inner != 0 * one:
                    total = total + entry(m, k) * inner
            p[lam] = total
    return p


def _regenerative_values(n: int, entry: Callable[[int, int], object], one) -> Dict[IntegerPartition, object]:
    p: Dict[IntegerPartition, object] = {(): one}
    for m in range(1, n + 1):
        for lam in integer_partitions(m):
            total = 0 * one
            for j, part in enumerate(lam):
                total = total + Fraction(1, comb(m, part)) * entry(m, part) * p[_replace(lam, j, None)]
            p[lam] = total
    del p[()]
    return p


def _check_rows(q: DecrementMatrix, n: int, flavor: str) -> None:
    if q.flavor != flavor:
        raise ValueError(f"this engine needs a {flavor}-flavor matrix, got {q.flavor}")
    if q.n_max < n:
        raise ValueError(f"decrement matrix has rows up to {q.n_max}, need {n}")


def _one_for(q: DecrementMatrix):
    return Fraction(1) if q.exact else 1.0


def mohle_eppf(q: DecrementMatrix, n: int) -> EppfTable:
    """EPPF solving the merge-or-freeze forward recursion, on all partitions of m <= n."""
    _check_rows(q, n, "mohle")
    return EppfTable(n, _mohle_values(n, q, _one_for(q)))


def regenerative_eppf(q: DecrementMatrix, n: int) -> EppfTable:
    """EPPF of the regenerative recursion ``p(lam) = sum_j q(m:lam_j) p(lam - lam_j) / C(m, lam_j)``."""
    _check_rows(q, n, "regenerative")
    one = _one_for(q)
    entry = lambda b, k: one if b == 1 else q(b, k)
    return EppfTable(n, _regenerative_values(n, entry, one))


def _symbolic_entry(b: int, k: int) -> QPolynomial:
    # q(1:1) = 1 for every decrement matrix
    return QPolynomial.constant(1) if b == 1 else QPolynomial.var(b, k)


def symbolic_mohle(n: int) -> Dict[IntegerPartition, QPolynomial]:
    if not 1 <= n <= SYMBOLIC_MAX_N:
        raise ValueError(f"symbolic expansion supports 1 <= n <= {SYMBOLIC_MAX_N}")
    return _mohle_values(n, _symbolic_entry, QPolynomial.constant(1))


def symbolic_regenerative(n: int) -> Dict[IntegerPartition, QPolynomial]:
    if not 1 <= n <= SYMBOLIC_MAX_N:
        raise ValueError(f"symbolic expansion supports 1 <= n <= {SYMBOLIC_MAX_N}")
    return _regenerative_values(n, _symbolic_entry, QPolynomial.constant(1))


def regenerative_eppf_explicit(q: DecrementMatrix, composition: Sequence[int]) -> Scalar:
    """Closed form: sum over orderings of the parts of products of q(tail sum : part)."""
    if q.flavor != "regenerative":
        raise ValueError("explicit formula applies to regenerative matrices")
    parts = as_composition(composition)
    if len(parts) > EXPLICIT_MAX_PARTS:
        raise ValueError(f"at most {EXPLICIT_MAX_PARTS} parts (the sum has l! terms)")
    n = sum(parts)
    if n > q.n_max:
        raise ValueError(f"matrix has rows up to {q.n_max}, composition needs {n}")
    total = 0 * _one_for(q)
    for order in permutations(parts):
        term = _one_for(q)
        tail = n
        for part in order:
            term = term * q(tail, part)
            tail -= part
        total = total + term
    return total / multinomial(parts)


def ewens_eppf(theta, n: int) -> EppfTable:
    """Ewens sampling formula ``theta^l prod (n_j - 1)! / (theta)_m`` on every m <= n."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    values = {}
    for m in range(1, n + 1):
        rising = prod((theta + i for i in range(m)), start=Fraction(1) if isinstance(theta, (int, Fraction)) else 1.0)
        for lam in integer_partitions(m):
            values[lam] = theta ** len(lam) * prod(factorial(x - 1) for x in lam) / rising
    return EppfTable(n, values)


def recover_decrement(p: EppfTable, n: int | None = None) -> DecrementMatrix:
    """Invert the forward recursion: read q back off the hook-shaped EPPF values.

    ``q(b:1)`` is the ratio of consecutive all-singleton values; for
    ``2 <= m <= b-1`` the value ``p(m, 1, ..., 1)`` of b determines ``q(b:m)``
    given the lower entries of the same row; ``q(b:b)`` closes the row.
    """
    n = p.n_max if n is None else n
    if n > p.n_max:
        raise ValueError(f"EPPF table only covers m <= {p.n_max}")
    if n >= 2 and p[(1, 1)] == 0:
        raise ValueError("p(1,1) = 0: the one-block regime, q cannot be recovered")
    ones = lambda r: (1,) * r
    one = p[(1,)] * 0 + 1
    rows = [(one,)]
    for b in range(2, n + 1):
        if p[ones(b - 1)] == 0:
            raise ValueError(f"p of {b - 1} singletons is 0; row {b} cannot be recovered")
        row = {1: p[ones(b)] / p[ones(b - 1)]}
        for m in range(2, b):
            rhs = p[(m,) + ones(b - m)]
            rhs -= row[1] * Fraction(b - m, b) * p[(m,) + ones(b - m - 1)]
            for k in range(2, m):
                rhs -= row[k] * Fraction(comb(m, k), comb(b, k)) * p[(m - k + 1,) + ones(b - m)]
            row[m] = rhs * comb(b, m) / p[ones(b - m + 1)]
        row[b] = one - sum(row.values())
        rows.append(tuple(row[k] for k in range(1, b + 1)))
    return DecrementMatrix(tuple(rows), "mohle")
