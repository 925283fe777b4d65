"""Continuous-time coalescent with freeze on [n].

With ``b`` active blocks the next event comes after an Exponential(Phi(b))
holding time and is a k-merge (probability ``Phi(b:k)/Phi(b)``) or a freeze
(``k = 1``).  The jump chain is therefore the FM chain of
``from_measure(m, n)``.
"""
from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from statistics import mean
from typing import Dict, List, Sequence, Tuple

from coalfreeze.chains import EmpiricalEppf, RngStream, as_rng, draw_k
from coalfreeze.measures import FreezeMeasure, mu_moment, phi, phi_total
from coalfreeze.partitions import Block, IntegerPartition, PartiallyFrozenPartition, SetPartition

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Event:
    time: float
    kind: str  # "merge" or "freeze"
    blocks: Tuple[Block, ...]
    n_active: int

    def to_json(self) -> dict:
        return {"t": self.time, "kind": self.kind, "blocks": [list(b) for b in self.blocks], "n_active": self.n_active}


@dataclass
class Trajectory:
    n: int
    events: List[Event]
    final: PartiallyFrozenPartition
    taus: Dict[int, float]
    complete: bool

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "complete": self.complete,
            "events": [e.to_json() for e in self.events],
            "final": self.final.to_json(),
        }


@dataclass(frozen=True)
class RateTable:
    totals: Tuple[float, ...]  # totals[b] = Phi(b), index 0 unused
    cumulative: Tuple[Tuple[float, ...], ...]  # cumulative[b] over k = 1..b


@lru_cache(maxsize=32)
def rate_table(m: FreezeMeasure, n: int) -> RateTable:
    totals = [0.0]
    cums: List[Tuple[float, ...]] = [()]
    for b in range(1, n + 1):
        parts = [phi(m, b, k) for k in range(1, b + 1)]
        total = sum(parts)
        totals.append(float(total))
        if total == 0:
            cums.append(())
            continue
        acc, cum = 0, []
        for x in parts:
            acc += x
            cum.append(float(acc / total))
        cums.append(tuple(cum))
    return RateTable(tuple(totals), tuple(cums))


def _holding_time(rate: float, rng) -> float:
    while True:
        dt = rng.expovariate(rate)
        if dt > 0:
            return dt
        log.warning("zero holding time drawn; redrawing")


def simulate(n: int, m: FreezeMeasure, rng, horizon: float | None = None, record: bool = True) -> Trajectory:
    """Simulate the coalescent with freeze started from ``n`` active singletons.

    Runs until every block is frozen, or until ``horizon`` if given.  A horizon
    is required when ``rho == 0`` since the process then never finishes.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if m.rho == 0 and horizon is None:
        raise ValueError("rho = 0 never freezes everything; pass a time horizon")
    rng = as_rng(rng)
    table = rate_table(m, n)
    active: List[List[int]] = [[i] for i in range(1, n + 1)]
    frozen: List[List[int]] = []
    taus: Dict[int, float] = {}
    events: List[Event] = []
    t = 0.0
    while active:
        b = len(active)
        rate = table.totals[b]
        if rate == 0:
            break
        dt = _holding_time(rate, rng)
        if horizon is not None and t + dt > horizon:
            break
        t += dt
        k = draw_k(table.cumulative[b], rng)
        if k == 1:
            i = rng.randrange(b)
            active[i], active[-1] = active[-1], active[i]
            blk = active.pop()
            frozen.append(blk)
            for x in blk:
                taus[x] = t
            if record:
                events.append(Event(t, "freeze", (tuple(sorted(blk)),), len(active)))
        else:
            chosen = sorted(rng.sample(range(b), k), reverse=True)
            parts = []
            for i in chosen:
                parts.append(active[i])
                active[i] = active[-1]
                active.pop()
            active.append([x for p in parts for x in p])
            if record:
                events.append(Event(t, "merge", tuple(sorted(tuple(sorted(p)) for p in parts)), len(active)))
    final = PartiallyFrozenPartition(
        tuple(tuple(b) for b in active) + tuple(tuple(b) for b in frozen),
        (False,) * len(active) + (True,) * len(frozen),
    )
    traj = Trajectory(n, events, final, taus, not active)
    if traj.complete:
        _assert_taus_match_blocks(traj)
    return traj


def _assert_taus_match_blocks(traj: Trajectory) -> None:
    seen: Dict[float, Block] = {}
    for blk in traj.final.blocks:
        values = {traj.taus[x] for x in blk}
        assert len(values) == 1, "freezing time not constant on a final block"
        (tau,) = values
        assert tau not in seen, "two final blocks share a freezing time"
        seen[tau] = blk


def freezing_times(traj: Trajectory) -> Dict[int, float]:
    """``j -> tau_j``, the time the active block holding ``j`` was frozen."""
    if not traj.complete:
        raise ValueError("trajectory stopped before every block froze")
    return dict(traj.taus)


@dataclass
class OrderedPartition:
    """Final blocks listed oldest first, i.e. by decreasing freezing time."""

    blocks: List[Block]
    times: List[float]
    n: int

    @property
    def frequencies(self) -> List[float]:
        return [len(b) / self.n for b in self.blocks]

    def intervals(self) -> List[Tuple[float, float]]:
        """``(a_j, b_j)`` per block: ``a_j`` is the fraction of elements frozen strictly earlier."""
        out = []
        for blk, tau in zip(self.blocks, self.times):
            below = sum(len(other) for other, t in zip(self.blocks, self.times) if t < tau)
            out.append((below / self.n, (below + len(blk)) / self.n))
        return out


def age_order(traj: Trajectory) -> OrderedPartition:
    taus = freezing_times(traj)
    by_time: Dict[float, List[int]] = {}
    for x, t in taus.items():
        by_time.setdefault(t, []).append(x)
    times = sorted(by_time, reverse=True)
    return OrderedPartition([tuple(sorted(by_time[t])) for t in times], times, traj.n)


def block_count_curve(traj: Trajectory) -> List[Tuple[float, int]]:
    """Number of active blocks after each event, starting at ``(0, n)``."""
    return [(0.0, traj.n)] + [(e.time, e.n_active) for e in traj.events]


def coalescent_estimate_eppf(n: int, m: FreezeMeasure, samples: int, seed: int | None = None) -> EmpiricalEppf:
    if m.rho <= 0:
        raise ValueError("rho must be positive")
    rng = RngStream(seed)
    counts: Counter = Counter()
    for _ in range(samples):
        traj = simulate(n, m, rng, record=False)
        counts[tuple(sorted((len(b) for b in traj.final.blocks), reverse=True))] += 1
    return EmpiricalEppf(n, samples, rng.seed_value, dict(counts), "coalescent")


@dataclass
class HoldingTimeStats:
    b: int
    visits: int
    mean: float
    expected: float
    stderr: float

    @property
    def z(self) -> float:
        return (self.mean - self.expected) / self.stderr if self.stderr else 0.0


def holding_time_stats(m: FreezeMeasure, n: int, visits: int, seed: int | None = None) -> Dict[int, HoldingTimeStats]:
    """Mean observed holding time per active-block count over runs until ``visits`` visits at ``b = n``."""
    rng = RngStream(seed)
    samples: Dict[int, List[float]] = {}
    while len(samples.get(n, ())) < visits:
        traj = simulate(n, m, rng)
        prev_t, prev_b = 0.0, n
        for e in traj.events:
            samples.setdefault(prev_b, []).append(e.time - prev_t)
            prev_t, prev_b = e.time, e.n_active
    table = rate_table(m, n)
    out = {}
    for b, xs in sorted(samples.items()):
        expected = 1 / table.totals[b]
        # holding times are exponential, so their sd equals the mean
        out[b] = HoldingTimeStats(b, len(xs), mean(xs), expected, expected / math.sqrt(len(xs)))
    return out


# ---------------------------------------------------------------------------
# coupled freezing rates


def simulate_coupled(n: int, m: FreezeMeasure, rhos: Sequence, rng) -> Dict[object, SetPartition]:
    """Final partitions for several freezing rates from one shared randomness source.

    Lineages of the coalescent without freeze are marked at rate ``max(rhos)``,
    each mark carrying a uniform label ``U``.  At rate ``rho`` a mark counts if
    ``U < rho / max(rhos)``, and element ``j`` freezes at the first counted mark
    on its line of descent.  Lineages whose elements are frozen at every rate
    are dropped, which does not change the law of the rest.  A higher rate
    keeps a superset of marks, so its partition refines every lower one; this
    is asserted on each run.
    """
    levels = sorted(set(rhos))
    if not levels or levels[0] <= 0:
        raise ValueError("rates must be positive")
    rng = as_rng(rng)
    top = levels[-1]
    thresholds = [float(r / top) for r in levels]
    table = rate_table(m.with_rho(top), n)
    lineages: List[List[int]] = [[i] for i in range(1, n + 1)]
    # label[level][element] = mark id of the freeze that captured it
    label: List[Dict[int, int]] = [{} for _ in levels]
    marks = 0
    while lineages:
        b = len(lineages)
        rng.expovariate(table.totals[b])
        k = draw_k(table.cumulative[b], rng)
        if k == 1:
            i = rng.randrange(b)
            u = rng.random()
            marks += 1
            done = True
            for lv, thr in enumerate(thresholds):
                if u < thr:
                    for x in lineages[i]:
                        label[lv].setdefault(x, marks)
                done = done and all(x in label[lv] for x in lineages[i])
            if done:
                lineages[i] = lineages[-1]
                lineages.pop()
        else:
            chosen = sorted(rng.sample(range(b), k), reverse=True)
            merged = []
            for i in chosen:
                merged.extend(lineages[i])
                lineages[i] = lineages[-1]
                lineages.pop()
            lineages.append(merged)
    out = {}
    for r, lab in zip(levels, label):
        groups: Dict[int, List[int]] = {}
        for x, mark in lab.items():
            groups.setdefault(mark, []).append(x)
        out[r] = SetPartition(tuple(tuple(g) for g in groups.values()))
    for lo, hi in zip(levels, levels[1:]):
        assert refines(out[hi], out[lo]), "coupled partitions are not nested"
    return out


def refines(fine: SetPartition, coarse: SetPartition) -> bool:
    where = {x: i for i, blk in enumerate(coarse.blocks) for x in blk}
    return all(len({where[x] for x in blk}) == 1 for blk in fine.blocks)


# ---------------------------------------------------------------------------
# paintbox and singleton diagnostics (finite-n approximations)


@dataclass
class PaintboxRun:
    intervals: List[Tuple[float, float]]  # non-singleton blocks, oldest first
    singleton_mass: float  # fraction of [n] in singleton blocks
    oldest_frequency: float


@dataclass
class PaintboxEstimate:
    n: int
    seed: int
    runs: List[PaintboxRun]

    @property
    def mean_singleton_mass(self) -> float:
        return mean(r.singleton_mass for r in self.runs)

    @property
    def mean_oldest_frequency(self) -> float:
        return mean(r.oldest_frequency for r in self.runs)

    def interval_count_histogram(self) -> Dict[int, int]:
        return dict(sorted(Counter(len(r.intervals) for r in self.runs).items()))

    def summary(self) -> dict:
        counts = [len(r.intervals) for r in self.runs]
        return {
            "n": self.n,
            "runs": len(self.runs),
            "seed": self.seed,
            "mean_singleton_mass": self.mean_singleton_mass,
            "mean_interval_count": mean(counts),
            "max_interval_count": max(counts),
            "interval_count_histogram": self.interval_count_histogram(),
            "mean_oldest_frequency": self.mean_oldest_frequency,
            "note": "finite-n approximation",
        }


def paintbox_estimate(m: FreezeMeasure, n: int, runs: int, seed: int | None = None) -> PaintboxEstimate:
    rng = RngStream(seed)
    out = []
    for _ in range(runs):
        order = age_order(simulate(n, m, rng, record=False))
        ivs = order.intervals()
        keep = [iv for blk, iv in zip(order.blocks, ivs) if len(blk) > 1]
        single = sum(1 for blk in order.blocks if len(blk) == 1) / n
        out.append(PaintboxRun(keep, single, order.frequencies[0]))
    return PaintboxEstimate(n, rng.seed_value, out)


@dataclass
class SingletonLevel:
    n: int
    runs: int
    element_fraction: float  # mean fraction of [n] lying in singleton blocks
    block_fraction: float  # mean fraction of blocks that are singletons
    runs_with_singletons: float


@dataclass
class SingletonReport:
    mu_minus_one: object
    levels: List[SingletonLevel]
    seed: int

    @property
    def prediction(self) -> str:
        return "persist" if self.mu_minus_one != math.inf else "vanish"

    @property
    def decreasing(self) -> bool:
        fr = [lv.element_fraction for lv in self.levels]
        return all(a > b for a, b in zip(fr, fr[1:]))

    @property
    def verdict(self) -> str:
        fr = [lv.element_fraction for lv in self.levels]
        if self.prediction == "persist":
            return "consistent" if min(fr) > 0.01 else "inconclusive"
        return "consistent" if self.decreasing else "inconclusive"

    def rows(self) -> List[dict]:
        return [vars(lv) for lv in self.levels]


def singleton_report(m: FreezeMeasure, ns: Sequence[int], runs: int, seed: int | None = None) -> SingletonReport:
    """Singleton diagnostics at several sample sizes.

    A finite measure ``int x**-1 Lambda(dx)`` predicts a singleton fraction that
    stays positive as ``n`` grows; an infinite one predicts it tends to 0.
    This is a trend diagnostic, not a sharp test.
    """
    if m.rho <= 0:
        raise ValueError("rho must be positive")
    rng = RngStream(seed)
    levels = []
    for n in ns:
        el = bl = hit = 0.0
        for _ in range(runs):
            blocks = simulate(n, m, rng, record=False).final.blocks
            s = sum(1 for blk in blocks if len(blk) == 1)
            el += s / n
            bl += s / len(blocks)
            hit += s > 0
        levels.append(SingletonLevel(n, runs, el / runs, bl / runs, hit / runs))
    return SingletonReport(mu_moment(m, -1), levels, rng.seed_value)
