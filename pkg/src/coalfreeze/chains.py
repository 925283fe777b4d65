"""Freeze-and-merge (FM) and sample-and-add (SA) chains.

Random draws come from :class:`RngStream`, a seeded Mersenne Twister
(``random.Random``), so a seed fixes every trajectory bit for bit.  Exact
laws are computed with rational arithmetic by enumerating every outcome.
"""
from __future__ import annotations

import math
import random
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import comb
from typing import Dict, Iterable, List, Sequence, Tuple

from coalfreeze._numbers import Scalar, is_exact
from coalfreeze.decrement import DecrementMatrix
from coalfreeze.partitions import (
    Block,
    EppfTable,
    IntegerPartition,
    PartiallyFrozenPartition,
    SetPartition,
    as_partition,
    count_set_partitions,
    enumerate_set_partitions,
    integer_partitions,
    shape,
)

SA_MAX_N = 8
EXACT_JUMP_MAX_N = 5
JUMP_MAX_N = 10

Distribution = Dict[SetPartition, Scalar]


class RngStream(random.Random):
    """Seeded ``random.Random`` that remembers its seed."""

    algorithm = "MT19937 (Python random.Random)"

    def __init__(self, seed: int | None = None):
        if seed is None:
            seed = random.SystemRandom().getrandbits(63)
        self.seed_value = int(seed)
        super().__init__(self.seed_value)

    def spawn(self, index: int) -> "RngStream":
        """An independent stream keyed by ``(seed, index)``."""
        return RngStream(hash((self.seed_value, index)) & (2**63 - 1))


def as_rng(rng) -> random.Random:
    if isinstance(rng, random.Random):
        return rng
    return RngStream(rng)


def _cumulative(row: Sequence[Scalar]) -> List[float]:
    out, acc = [], 0.0
    for x in row:
        acc += float(x)
        out.append(acc)
    out[-1] = 1.0
    return out


@lru_cache(maxsize=64)
def _cumulative_rows(q: DecrementMatrix) -> Tuple[Tuple[float, ...], ...]:
    return tuple(tuple(_cumulative(r)) for r in q.rows)


def draw_k(cum: Sequence[float], rng: random.Random) -> int:
    """Sample k in 1..len(cum) from a cumulative probability vector."""
    k = bisect_right(cum, rng.random()) + 1
    return min(k, len(cum))


# ---------------------------------------------------------------------------
# freeze-and-merge


def fm_step(state: PartiallyFrozenPartition, q: DecrementMatrix, rng) -> PartiallyFrozenPartition:
    """One freeze-and-merge step on the active blocks of ``state``."""
    rng = as_rng(rng)
    active = list(state.active)
    b = len(active)
    if b == 0:
        return state
    k = 1 if b == 1 else draw_k(_cumulative_rows(q)[b - 1], rng)
    frozen = list(state.frozen_blocks)
    if k == 1:
        frozen.append(active.pop(rng.randrange(b)))
    else:
        chosen = set(rng.sample(range(b), k))
        merged = tuple(x for i in sorted(chosen) for x in active[i])
        active = [blk for i, blk in enumerate(active) if i not in chosen] + [merged]
    return PartiallyFrozenPartition(tuple(active) + tuple(frozen), (False,) * len(active) + (True,) * len(frozen))


@dataclass
class FMRun:
    partition: SetPartition
    steps: int


def fm_run(n: int, q: DecrementMatrix, rng) -> FMRun:
    """Iterate FM from all-active singletons until every block is frozen."""
    if q.flavor != "mohle":
        raise ValueError("the FM chain needs a mohle-flavor matrix")
    if q.n_max < n:
        raise ValueError(f"matrix covers b <= {q.n_max}, need {n}")
    rng = as_rng(rng)
    cum = _cumulative_rows(q)
    active: List[List[int]] = [[i] for i in range(1, n + 1)]
    frozen: List[List[int]] = []
    steps = 0
    while active:
        b = len(active)
        k = 1 if b == 1 else draw_k(cum[b - 1], rng)
        if k == 1:
            i = rng.randrange(b)
            active[i], active[-1] = active[-1], active[i]
            frozen.append(active.pop())
        else:
            chosen = sorted(rng.sample(range(b), k), reverse=True)
            merged = []
            for i in chosen:
                merged.extend(active[i])
                active[i] = active[-1]
                active.pop()
            active.append(merged)
        steps += 1
    assert steps <= 2 * n - 1, "FM run exceeded its step bound"
    return FMRun(SetPartition(tuple(tuple(b) for b in frozen)), steps)


def _fm_final_shape(n: int, cum, rng: random.Random) -> IntegerPartition:
    # sizes only; exchangeability makes labels irrelevant for shape estimation
    active = [1] * n
    frozen = []
    while active:
        b = len(active)
        k = 1 if b == 1 else draw_k(cum[b - 1], rng)
        if k == 1:
            i = rng.randrange(b)
            active[i], active[-1] = active[-1], active[i]
            frozen.append(active.pop())
        else:
            chosen = sorted(rng.sample(range(b), k), reverse=True)
            size = 0
            for i in chosen:
                size += active[i]
                active[i] = active[-1]
                active.pop()
            active.append(size)
    return tuple(sorted(frozen, reverse=True))


@dataclass
class EmpiricalEppf:
    """Monte Carlo estimate of the EPPF on partitions of ``n``."""

    n: int
    samples: int
    seed: int | None
    counts: Dict[IntegerPartition, int]
    method: str = "fm"

    def frequency(self, lam) -> float:
        return self.counts.get(as_partition(lam), 0) / self.samples

    def p_hat(self, lam) -> float:
        return self.frequency(lam) / count_set_partitions(lam)

    def stderr(self, lam) -> float:
        f = self.frequency(lam)
        return math.sqrt(f * (1 - f) / self.samples) / count_set_partitions(lam)

    def null_stderr(self, lam, p_exact) -> float:
        """Standard error of ``p_hat`` if the true EPPF value is ``p_exact``."""
        f = float(p_exact) * count_set_partitions(lam)
        return math.sqrt(max(f * (1 - f), 0.0) / self.samples) / count_set_partitions(lam)

    def compare(self, exact: EppfTable, sigmas: float = 4.0) -> List[dict]:
        """Per-shape rows with z-scores against exact values, using null standard errors."""
        rows = []
        for lam in integer_partitions(self.n):
            p = exact[lam]
            se = self.null_stderr(lam, p)
            diff = self.p_hat(lam) - float(p)
            z = diff / se if se > 0 else (0.0 if diff == 0 else math.inf)
            rows.append({"shape": lam, "p_hat": self.p_hat(lam), "p_exact": p, "stderr": se, "z": z, "ok": abs(z) <= sigmas})
        return rows

    def report(self, exact: EppfTable | None = None) -> dict:
        rows = []
        for lam in integer_partitions(self.n):
            row = {
                "shape": list(lam),
                "count": self.counts.get(lam, 0),
                "p_hat": self.p_hat(lam),
                "stderr": self.stderr(lam),
            }
            if exact is not None:
                row["p_exact"] = str(exact[lam])
            rows.append(row)
        return {"n": self.n, "samples": self.samples, "seed": self.seed, "method": self.method, "rows": rows}


def fm_estimate_eppf(n: int, q: DecrementMatrix, samples: int, seed: int | None = None) -> EmpiricalEppf:
    if samples < 1:
        raise ValueError("samples must be positive")
    if q.n_max < n:
        raise ValueError(f"matrix covers b <= {q.n_max}, need {n}")
    rng = RngStream(seed)
    cum = _cumulative_rows(q)
    counts = Counter(_fm_final_shape(n, cum, rng) for _ in range(samples))
    return EmpiricalEppf(n, samples, rng.seed_value, dict(counts), "fm")


def fm_one_step_law(state: PartiallyFrozenPartition, q: DecrementMatrix) -> Dict[PartiallyFrozenPartition, Scalar]:
    """Exact law of one FM step from ``state``."""
    active = state.active
    b = len(active)
    if b == 0:
        return {state: Fraction(1)}
    if b > q.n_max:
        raise ValueError(f"state has {b} active blocks but the matrix stops at {q.n_max}")
    frozen = state.frozen_blocks
    law: Dict[PartiallyFrozenPartition, Scalar] = {}

    def add(blocks, flags, pr):
        if pr == 0:
            return
        nxt = PartiallyFrozenPartition(tuple(blocks), tuple(flags))
        law[nxt] = law.get(nxt, 0) + pr

    qb = lambda k: Fraction(1) if b == 1 else q(b, k)
    for i in range(b):
        rest = active[:i] + active[i + 1:]
        add(rest + frozen + (active[i],), (False,) * len(rest) + (True,) * (len(frozen) + 1), qb(1) / b)
    for k in range(2, b + 1):
        pr = q(b, k) / comb(b, k)
        if pr == 0:
            continue
        for chosen in combinations(range(b), k):
            merged = tuple(x for i in chosen for x in active[i])
            rest = tuple(blk for i, blk in enumerate(active) if i not in chosen) + (merged,)
            add(rest + frozen, (False,) * len(rest) + (True,) * len(frozen), pr)
    return law


def fm_final_law(n: int, q: DecrementMatrix) -> Distribution:
    """Exact law of the final partition of the FM chain started from all-active singletons."""
    if q.flavor != "mohle":
        raise ValueError("the FM chain needs a mohle-flavor matrix")
    memo: Dict[PartiallyFrozenPartition, Distribution] = {}

    def final(state: PartiallyFrozenPartition) -> Distribution:
        if state in memo:
            return memo[state]
        if not state.active:
            out = {state.induced(): Fraction(1)}
        else:
            out = {}
            for nxt, pr in fm_one_step_law(state, q).items():
                for sp, pr2 in final(nxt).items():
                    out[sp] = out.get(sp, 0) + pr * pr2
        memo[state] = out
        return out

    return final(PartiallyFrozenPartition.all_active_singletons(n))


def shape_law(dist: Distribution) -> Dict[IntegerPartition, Scalar]:
    out: Dict[IntegerPartition, Scalar] = {}
    for sp, pr in dist.items():
        lam = shape(sp)
        out[lam] = out.get(lam, 0) + pr
    return out


# ---------------------------------------------------------------------------
# sample-and-add


def _row(q_row) -> Tuple[Scalar, ...]:
    row = tuple(q_row)
    total = sum(row)
    if any(x < 0 for x in row) or ((total != 1) if all(is_exact(x) for x in row) else abs(total - 1) > 1e-12):
        raise ValueError("q row must be a probability vector")
    return row


def _sa_apply(state: SetPartition, moved: Iterable[int], target: int | None) -> SetPartition:
    """Remove ``moved`` balls; put them in ``target``'s box, or in a new box when None."""
    moved = set(moved)
    boxes = [[x for x in b if x not in moved] for b in state.blocks]
    if target is None:
        boxes.append(sorted(moved))
    else:
        for box in boxes:
            if target in box:
                box.extend(moved)
                break
    return SetPartition(tuple(tuple(b) for b in boxes if b))


def sa_step(state: SetPartition, q_row: Sequence[Scalar], rng) -> SetPartition:
    """One sample-and-add step with ``K ~ q_row``."""
    rng = as_rng(rng)
    n = state.n
    if len(q_row) != n:
        raise ValueError(f"q row has length {len(q_row)}, partition is of [{n}]")
    k = draw_k(_cumulative(q_row), rng)
    if k == 1:
        return _sa_apply(state, [rng.randint(1, n)], None)
    order = rng.sample(range(1, n + 1), n)
    moved, rest = order[: k - 1], order[k - 1:]
    return _sa_apply(state, moved, rng.choice(rest))


def sa_one_step_law(state: SetPartition, q_row: Sequence[Scalar]) -> Distribution:
    """Exact SA transition law from ``state``: each (moved set, marked ball) pair is equally likely."""
    row = _row(q_row)
    n = state.n
    law: Distribution = {}
    balls = range(1, n + 1)
    if row[0]:
        for d in balls:
            nxt = _sa_apply(state, [d], None)
            law[nxt] = law.get(nxt, 0) + row[0] / n
    for k in range(2, n + 1):
        if not row[k - 1]:
            continue
        pr = row[k - 1] / (comb(n, k - 1) * (n - k + 1))
        for moved in combinations(balls, k - 1):
            mset = set(moved)
            for mark in balls:
                if mark in mset:
                    continue
                nxt = _sa_apply(state, moved, mark)
                law[nxt] = law.get(nxt, 0) + pr
    return law


@dataclass
class TransitionMatrix:
    states: List[SetPartition]
    rows: List[List[Scalar]]

    def index(self, sp: SetPartition) -> int:
        return self.states.index(sp)


def sa_transition_matrix(n: int, q_row: Sequence[Scalar]) -> TransitionMatrix:
    if not 1 <= n <= SA_MAX_N:
        raise ValueError(f"SA transition matrix supports n <= {SA_MAX_N}")
    row = _row(q_row)
    if len(row) != n:
        raise ValueError("q row length must equal n")
    states = enumerate_set_partitions(n)
    where = {sp: i for i, sp in enumerate(states)}
    zero = 0 * row[0]
    rows = []
    for sp in states:
        out = [zero] * len(states)
        for nxt, pr in sa_one_step_law(sp, row).items():
            out[where[nxt]] += pr
        rows.append(out)
    return TransitionMatrix(states, rows)


def solve_stationary(P: Sequence[Sequence[Scalar]]) -> List[Scalar]:
    """Stationary vector of a stochastic matrix with a unique invariant law.

    Gaussian elimination on ``pi (P - I) = 0`` with one equation replaced by
    ``sum(pi) = 1``; exact when the entries are rationals.
    """
    N = len(P)
    one = P[0][0] * 0 + 1
    A = [[P[j][i] - (one if i == j else 0) for j in range(N)] for i in range(N)]
    rhs = [0 * one] * N
    A[-1] = [one] * N
    rhs[-1] = one
    exact = is_exact(one)
    for col in range(N):
        if exact:
            pivot = next((r for r in range(col, N) if A[r][col] != 0), None)
        else:
            pivot = max(range(col, N), key=lambda r: abs(A[r][col]))
        if pivot is None or A[pivot][col] == 0:
            raise ValueError("stationary distribution is not unique")
        A[col], A[pivot] = A[pivot], A[col]
        rhs[col], rhs[pivot] = rhs[pivot], rhs[col]
        inv = one / A[col][col]
        for r in range(N):
            if r != col and A[r][col] != 0:
                f = A[r][col] * inv
                A[r] = [a - f * c for a, c in zip(A[r], A[col])]
                rhs[r] -= f * rhs[col]
    return [rhs[i] / A[i][i] for i in range(N)]


def _lumped_shape_chain(n: int, row) -> Tuple[List[IntegerPartition], List[List[Scalar]]]:
    shapes = integer_partitions(n)
    where = {lam: i for i, lam in enumerate(shapes)}
    zero = 0 * row[0]
    P = []
    for lam in shapes:
        blocks, start = [], 1
        for part in lam:
            blocks.append(tuple(range(start, start + part)))
            start += part
        out = [zero] * len(shapes)
        for nxt, pr in sa_one_step_law(SetPartition(tuple(blocks)), row).items():
            out[where[shape(nxt)]] += pr
        P.append(out)
    return shapes, P


def sa_stationary(n: int, q_row: Sequence[Scalar], method: str = "lumped") -> Distribution:
    """Unique stationary law of SA_n over set partitions of [n].

    ``method="lumped"`` solves the chain projected onto shapes and spreads each
    shape's mass evenly over its set partitions; ``method="full"`` solves the
    whole set-partition chain directly.
    """
    if not 1 <= n <= SA_MAX_N:
        raise ValueError(f"SA stationary solve supports n <= {SA_MAX_N}")
    row = _row(q_row)
    if len(row) != n:
        raise ValueError("q row length must equal n")
    one = row[0] * 0 + 1
    if row[0] == 1:
        return {SetPartition.singletons(n): one}
    if row[0] == 0:
        return {SetPartition.one_block(n): one}
    if method == "full":
        tm = sa_transition_matrix(n, row)
        pi = solve_stationary(tm.rows)
        return {sp: p for sp, p in zip(tm.states, pi) if p != 0}
    if method != "lumped":
        raise ValueError(f"unknown method {method!r}")
    shapes, P = _lumped_shape_chain(n, row)
    pi = solve_stationary(P)
    out: Distribution = {}
    for sp in enumerate_set_partitions(n):
        p = pi[shapes.index(shape(sp))] / count_set_partitions(shape(sp))
        if p != 0:
            out[sp] = p
    return out


def sa_estimate_shapes(n: int, q_row, steps: int, burn_in: int, seed: int | None = None) -> EmpiricalEppf:
    """Ergodic-average shape law of a single SA run (approximate)."""
    rng = RngStream(seed)
    state = SetPartition.singletons(n)
    for _ in range(burn_in):
        state = sa_step(state, q_row, rng)
    counts: Counter = Counter()
    for _ in range(steps):
        state = sa_step(state, q_row, rng)
        counts[shape(state)] += 1
    return EmpiricalEppf(n, steps, rng.seed_value, dict(counts), "sa")


# ---------------------------------------------------------------------------
# restriction consistency of FM operators


@dataclass
class JumpStateResult:
    state: PartiallyFrozenPartition
    tv: float
    change_probability: Scalar | None = None


@dataclass
class JumpConsistencyReport:
    n: int
    m: int
    mode: str
    max_tv: Scalar
    worst_state: PartiallyFrozenPartition | None
    results: List[JumpStateResult] = field(default_factory=list)
    samples: int = 0
    seed: int | None = None
    noise_floor: float = 0.0

    @property
    def consistent(self) -> bool:
        if self.mode == "exact":
            return self.max_tv == 0
        return self.max_tv <= 4 * self.noise_floor

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "mode": self.mode,
            "max_tv": float(self.max_tv),
            "max_tv_exact": str(self.max_tv) if isinstance(self.max_tv, Fraction) else None,
            "worst_state": self.worst_state.to_json() if self.worst_state else None,
            "states_checked": len(self.results),
            "samples_per_state": self.samples,
            "seed": self.seed,
            "noise_floor": self.noise_floor,
            "consistent": self.consistent,
        }


def all_partially_frozen(n: int) -> List[PartiallyFrozenPartition]:
    out = []
    for sp in enumerate_set_partitions(n):
        for mask in range(2 ** len(sp)):
            flags = tuple(bool(mask >> i & 1) for i in range(len(sp)))
            out.append(PartiallyFrozenPartition(sp.blocks, flags))
    return out


def _tv(a: Dict, b: Dict) -> Scalar:
    keys = set(a) | set(b)
    return sum(abs(a.get(k, 0) - b.get(k, 0)) for k in keys) / 2


def _restricted_conditional_law(state, q, m):
    base = state.restrict(m)
    law: Dict[PartiallyFrozenPartition, Scalar] = {}
    stay = 0
    for nxt, pr in fm_one_step_law(state, q).items():
        r = nxt.restrict(m)
        if r == base:
            stay += pr
        else:
            law[r] = law.get(r, 0) + pr
    change = 1 - stay
    if change == 0:
        return {}, change
    return {k: v / change for k, v in law.items()}, change


def check_jump_consistency(
    q: DecrementMatrix,
    n: int,
    m: int,
    samples: int = 20000,
    seed: int | None = None,
    exact: bool | None = None,
    battery: int = 12,
) -> JumpConsistencyReport:
    """Compare FM_m on a restricted state with FM_n's step seen through the restriction.

    The FM_n step is conditioned on changing the restricted state (a merge or
    freeze that leaves it as it was is excluded).  Exact mode enumerates every
    partially frozen partition of [n]; Monte Carlo mode uses ``battery`` random
    start states plus the all-active singletons and ``samples`` conditional
    draws per state.
    """
    if not 1 <= m <= n <= JUMP_MAX_N:
        raise ValueError(f"need 1 <= m <= n <= {JUMP_MAX_N}")
    if q.n_max < n:
        raise ValueError(f"matrix covers b <= {q.n_max}, need {n}")
    if exact is None:
        exact = n <= EXACT_JUMP_MAX_N
    if exact and n > EXACT_JUMP_MAX_N:
        raise ValueError(f"exact mode supports n <= {EXACT_JUMP_MAX_N}")
    if m == n:
        return JumpConsistencyReport(n, m, "exact" if exact else "monte-carlo", Fraction(0) if exact else 0.0, None)

    if exact:
        results = []
        for state in all_partially_frozen(n):
            base = state.restrict(m)
            if not base.active:
                continue
            cond, change = _restricted_conditional_law(state, q, m)
            target = fm_one_step_law(base, q)
            tv = _tv(cond, target) if change != 0 else Fraction(1)
            results.append(JumpStateResult(state, tv, change))
        worst = max(results, key=lambda r: r.tv)
        return JumpConsistencyReport(n, m, "exact", worst.tv, worst.state, results)

    rng = RngStream(seed)
    states = [PartiallyFrozenPartition.all_active_singletons(n)]
    while len(states) < battery + 1:
        labels = [rng.randrange(n) for _ in range(n)]
        groups: Dict[int, List[int]] = {}
        for x, g in enumerate(labels, start=1):
            groups.setdefault(g, []).append(x)
        blocks = tuple(tuple(g) for g in groups.values())
        flags = tuple(rng.random() < 0.3 for _ in blocks)
        st = PartiallyFrozenPartition(blocks, flags)
        if st.restrict(m).active:
            states.append(st)
    results = []
    floor = 0.0
    for state in states:
        base = state.restrict(m)
        target = {k: float(v) for k, v in fm_one_step_law(base, q).items()}
        counts: Counter = Counter()
        accepted = attempts = 0
        while accepted < samples and attempts < 200 * samples:
            attempts += 1
            r = fm_step(state, q, rng).restrict(m)
            if r != base:
                counts[r] += 1
                accepted += 1
        if accepted == 0:
            results.append(JumpStateResult(state, 1.0))
            continue
        emp = {k: c / accepted for k, c in counts.items()}
        tv = float(_tv(emp, target))
        # expected TV of an exact-law sample of this size
        noise = 0.5 * sum(math.sqrt(2 * p * (1 - p) / (math.pi * accepted)) for p in target.values())
        floor = max(floor, noise)
        results.append(JumpStateResult(state, tv))
    worst = max(results, key=lambda r: r.tv)
    return JumpConsistencyReport(n, m, "monte-carlo", worst.tv, worst.state, results, samples, rng.seed_value, floor)
