"""Decrement matrices: triangular stochastic arrays q(b:k), 1 <= k <= b <= n.

Two flavors share the container.  ``mohle`` matrices drive freeze-and-merge
chains (k == 1 is a freeze, k >= 2 a k-fold merge); ``regenerative`` matrices
drive chains in which k active blocks merge straight into one frozen block.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import List, Sequence, Tuple

from coalfreeze._numbers import Scalar, format_scalar, is_exact, parse_scalar
from coalfreeze.measures import FreezeMeasure, phi, phi_total

FLAVORS = ("mohle", "regenerative")
ROW_TOL = 1e-12
CONSISTENCY_TOL = 1e-10


@dataclass(frozen=True)
class DecrementMatrix:
    rows: Tuple[Tuple[Scalar, ...], ...]
    flavor: str = "mohle"

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise ValueError(f"flavor must be one of {FLAVORS}, got {self.flavor!r}")
        rows = tuple(tuple(r) for r in self.rows)
        if not rows:
            raise ValueError("a decrement matrix needs at least one row")
        for b, row in enumerate(rows, start=1):
            if len(row) != b:
                raise ValueError(f"row {b} must have {b} entries, has {len(row)}")
            if any(x < 0 for x in row):
                raise ValueError(f"row {b} has a negative entry")
            total = sum(row)
            if (total != 1) if all(is_exact(x) for x in row) else abs(total - 1) > ROW_TOL:
                raise ValueError(f"row {b} sums to {total}, not 1")
        object.__setattr__(self, "rows", rows)

    @property
    def n_max(self) -> int:
        return len(self.rows)

    @property
    def exact(self) -> bool:
        return all(is_exact(x) for row in self.rows for x in row)

    def __call__(self, b: int, k: int) -> Scalar:
        if not 1 <= k <= b <= self.n_max:
            raise IndexError(f"q({b}:{k}) outside the matrix (n_max={self.n_max})")
        return self.rows[b - 1][k - 1]

    def row(self, b: int) -> Tuple[Scalar, ...]:
        return self.rows[b - 1]

    def truncate(self, n: int) -> "DecrementMatrix":
        if not 1 <= n <= self.n_max:
            raise ValueError(f"cannot truncate to {n} rows")
        return DecrementMatrix(self.rows[:n], self.flavor)

    def to_float(self) -> "DecrementMatrix":
        return DecrementMatrix(tuple(tuple(float(x) for x in r) for r in self.rows), self.flavor)

    def to_json(self) -> dict:
        return {"flavor": self.flavor, "rows": [[format_scalar(x) for x in r] for r in self.rows]}

    @classmethod
    def from_json(cls, data, exact: bool = True) -> "DecrementMatrix":
        if isinstance(data, str):
            data = json.loads(data)
        exact = exact and data.get("exact", True)
        rows = tuple(tuple(parse_scalar(x, exact) for x in r) for r in data["rows"])
        return cls(rows, data.get("flavor", "mohle"))

    def csv_rows(self) -> List[List[str]]:
        return [[str(b), str(k), format_scalar(self(b, k))] for b in range(1, self.n_max + 1) for k in range(1, b + 1)]


def from_measure(m: FreezeMeasure, n: int) -> DecrementMatrix:
    """``q(b:k) = Phi(b:k) / Phi(b)``; row 1 is always ``(1,)``."""
    if n < 1:
        raise ValueError("n must be positive")
    if m.is_zero and m.rho == 0:
        raise ValueError("degenerate measure: (Lambda, rho) = (0, 0)")
    rows = [(Fraction(1),)]
    for b in range(2, n + 1):
        total = phi_total(m, b)
        if total == 0:
            raise ValueError(f"degenerate measure: Phi({b}) = 0")
        rows.append(tuple(phi(m, b, k) / total for k in range(1, b + 1)))
    return DecrementMatrix(tuple(rows), "mohle")


def regenerative_from_measure(m: FreezeMeasure, n: int) -> DecrementMatrix:
    """Regenerative decrement matrix ``Phi(b:k) = C(b,k) int x^(k-1) (1-x)^(b-k) Lambda(dx)``.

    Only Lambda enters; ``m.rho`` is ignored.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if m.total_mass <= 0:
        raise ValueError("degenerate measure: regenerative rates need Lambda != 0")
    rows = []
    for b in range(1, n + 1):
        parts = [comb(b, k) * m.integrate_monomial(k - 1, b - k) for k in range(1, b + 1)]
        total = sum(parts)
        rows.append(tuple(x / total for x in parts))
    return DecrementMatrix(tuple(rows), "regenerative")


def _previous_row(nxt: Sequence[Scalar], flavor: str) -> Tuple[Scalar, ...]:
    """Row b from row b+1 by solving the backward identities for q(b:.)."""
    b1 = len(nxt)
    b = b1 - 1
    q = lambda k: nxt[k - 1] if 1 <= k <= b1 else 0
    if b == 1:
        return (type(nxt[0])(1),)
    if flavor == "mohle":
        denom = b1 - q(1) - 2 * q(2)
        assert denom > 0, f"non-positive denominator {denom} at b={b}"
        row = [b * q(1) / denom]
        row += [((k + 1) * q(k + 1) + (b1 - k) * q(k)) / denom for k in range(2, b + 1)]
    else:
        denom = b1 - q(1)
        assert denom > 0, f"non-positive denominator {denom} at b={b}"
        row = [((k + 1) * q(k + 1) + (b1 - k) * q(k)) / denom for k in range(1, b + 1)]
    return tuple(row)


def extend_backward(row_n: Sequence, flavor: str = "mohle") -> DecrementMatrix:
    """The unique consistent matrix whose last row is ``row_n``."""
    row = tuple(Fraction(x) if isinstance(x, (int, str)) else x for x in row_n)
    if flavor not in FLAVORS:
        raise ValueError(f"unknown flavor {flavor!r}")
    if not row:
        raise ValueError("empty row")
    rows = [row]
    while len(rows[-1]) > 1:
        rows.append(_previous_row(rows[-1], flavor))
    return DecrementMatrix(tuple(reversed(rows)), flavor)


@dataclass
class ConsistencyReport:
    ok: bool
    violation: Tuple[int, int, Scalar, Scalar] | None = None

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        if self.ok:
            return "consistent"
        b, k, lhs, rhs = self.violation
        return f"q({b}:{k}) = {format_scalar(lhs)} but the backward identity gives {format_scalar(rhs)}"


def check_consistency(q: DecrementMatrix, tol: float = CONSISTENCY_TOL) -> ConsistencyReport:
    """Verify the backward identities linking rows b and b+1 for every b < n_max."""
    exact = q.exact
    for b in range(1, q.n_max):
        b1 = b + 1
        nxt = lambda k: q(b1, k) if k <= b1 else 0
        for k in range(1, b + 1):
            lhs = q(b, k)
            if q.flavor == "mohle":
                if k == 1:
                    rhs = Fraction(b, b1) * nxt(1)
                else:
                    rhs = Fraction(k + 1, b1) * nxt(k + 1) + Fraction(b1 - k, b1) * nxt(k)
                rhs += Fraction(1, b1) * nxt(1) * lhs + Fraction(2, b1) * nxt(2) * lhs
            else:
                rhs = Fraction(k + 1, b1) * nxt(k + 1) + Fraction(b1 - k, b1) * nxt(k) + Fraction(1, b1) * nxt(1) * lhs
            if (lhs != rhs) if exact else abs(lhs - rhs) > tol:
                return ConsistencyReport(False, (b, k, lhs, rhs))
    return ConsistencyReport(True)


@dataclass
class PhiLadder:
    """Rates Phi(b) and Phi(b:k) for b = 1..n, up to one positive factor.

    ``phi[b-1]`` is Phi(b) and ``phi_parts[b-1][k-1]`` is Phi(b:k).
    """

    rho: Scalar
    phi: Tuple[Scalar, ...]
    phi_parts: Tuple[Tuple[Scalar, ...], ...]
    degenerate: bool = False
    notes: List[str] = field(default_factory=list)

    @property
    def n_max(self) -> int:
        return len(self.phi)

    def pascal_defects(self) -> List[Tuple[int, int, Scalar]]:
        """Entries violating ``Phi(n:k) = ((k+1)Phi(n+1:k+1) + (n+1-k)Phi(n+1:k)) / (n+1)``, k >= 2."""
        part = lambda b, k: self.phi_parts[b - 1][k - 1] if k <= b else 0
        out = []
        for n in range(2, self.n_max):
            for k in range(2, n + 1):
                rhs = Fraction(k + 1, n + 1) * part(n + 1, k + 1) + Fraction(n + 1 - k, n + 1) * part(n + 1, k)
                if part(n, k) != rhs:
                    out.append((n, k, part(n, k) - rhs))
        return out

    def freeze_rates(self) -> List[Scalar]:
        """``Phi(n) q(n:1) / n`` for each n; constant and equal to rho when consistent."""
        return [self.phi_parts[b - 1][0] / b for b in range(1, self.n_max + 1)]

    def decrement_matrix(self) -> DecrementMatrix:
        rows = [(Fraction(1),)]
        for b in range(2, self.n_max + 1):
            rows.append(tuple(x / self.phi[b - 1] for x in self.phi_parts[b - 1]))
        return DecrementMatrix(tuple(rows), "mohle")


def recover_phi_ladder(q: DecrementMatrix, rho_seed: Scalar = Fraction(1)) -> PhiLadder:
    """Rebuild the rate ladder of a consistent matrix from the ratio recursion.

    ``Phi(n) / Phi(n+1) = 1 - q(n+1:1)/(n+1) - 2 q(n+1:2)/(n+1)`` anchored at
    ``Phi(1) = rho_seed``.  When ``q(2:2) == 1`` the freeze rate is 0; the
    ladder is then anchored at ``Phi(2) = rho_seed`` and flagged degenerate.
    """
    if q.flavor != "mohle":
        raise ValueError("Phi ladders are defined for mohle-flavor matrices")
    if rho_seed <= 0:
        raise ValueError("rho_seed must be positive")
    n = q.n_max
    entry = lambda b, k: q(b, k) if k <= b else 0
    degenerate = n >= 2 and q(2, 2) == 1
    phis: List[Scalar] = [rho_seed]
    notes = []
    if degenerate:
        phis = [0 * rho_seed, rho_seed]
        notes.append("q(2:2) = 1: freeze rate is 0, ladder anchored at Phi(2)")
    for b in range(len(phis), n):
        ratio = 1 - Fraction(1, b + 1) * entry(b + 1, 1) - Fraction(2, b + 1) * entry(b + 1, 2)
        if ratio <= 0:
            raise ValueError(f"ratio Phi({b})/Phi({b + 1}) is {ratio}; matrix is not consistent")
        phis.append(phis[-1] / ratio)
    phis = phis[:n]
    parts = tuple(tuple(q(b, k) * phis[b - 1] for k in range(1, b + 1)) for b in range(1, n + 1))
    rho = 0 * rho_seed if degenerate else phis[0] * q(1, 1)
    return PhiLadder(rho, tuple(phis), parts, degenerate, notes)


def _nabla(seq, j: int, start: int):
    """``j``-th backward difference of ``seq`` (a callable) at ``start``."""
    return sum((-1) ** i * comb(j, i) * seq(start + i) for i in range(j + 1))


@dataclass
class PositivityReport:
    ladder: PhiLadder
    negative_entries: List[Tuple[int, int, Scalar]]
    row_sum_defects: List[Tuple[int, Scalar]]

    @property
    def ok(self) -> bool:
        return not self.negative_entries and not self.row_sum_defects

    def __bool__(self) -> bool:
        return self.ok

    @property
    def matrix(self) -> DecrementMatrix | None:
        return self.ladder.decrement_matrix() if self.ok else None


def phi_from_sequence(phis: Sequence, rho) -> PositivityReport:
    """Build Phi(n:m) from a single sequence Phi(1..N) with backward differences.

    With ``bar(n) = Phi(n) - rho n`` and ``psi(n) = (bar(n) - bar(n+1)) / n``,
    ``Phi(n:1) = rho n`` and ``Phi(n:m) = -C(n, m) nabla^(m-2) psi(n-m+1)``.
    The report lists every negative entry and every row whose parts fail to
    add up to Phi(n).
    """
    values = tuple(parse_scalar(x) if isinstance(x, str) else x for x in phis)
    rho = parse_scalar(rho) if isinstance(rho, str) else rho
    if rho <= 0:
        raise ValueError("rho must be positive")
    if any(v <= 0 for v in values):
        raise ValueError("every Phi(n) must be positive")
    N = len(values)
    bar = lambda k: values[k - 1] - rho * k
    psi = lambda k: Fraction(1, k) * (bar(k) - bar(k + 1))
    parts = []
    negatives, defects = [], []
    for n in range(1, N + 1):
        row = [rho * n]
        for m in range(2, n + 1):
            row.append(-comb(n, m) * _nabla(psi, m - 2, n - m + 1))
        parts.append(tuple(row))
        negatives.extend((n, m, v) for m, v in enumerate(row, start=1) if v < 0)
        gap = values[n - 1] - sum(row)
        if (gap != 0) if is_exact(gap) else abs(gap) > CONSISTENCY_TOL:
            defects.append((n, gap))
    ladder = PhiLadder(rho, values, tuple(parts))
    return PositivityReport(ladder, negatives, defects)
