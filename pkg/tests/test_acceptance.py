"""Acceptance criteria, one test and one printed PASS/FAIL line each.

Run ``pytest tests/test_acceptance.py -v`` (the lines appear in the terminal
summary) or ``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import math
import sys
import time
from fractions import Fraction as F
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from coalfreeze import (
    DecrementMatrix,
    FreezeMeasure,
    check_consistency,
    check_jump_consistency,
    coalescent_estimate_eppf,
    ewens_eppf,
    extend_backward,
    fm_estimate_eppf,
    fm_final_law,
    from_measure,
    mohle_eppf,
    phi,
    phi_from_sequence,
    phi_total,
    recover_decrement,
    recover_phi_ladder,
    regenerative_eppf,
    regenerative_eppf_explicit,
    regenerative_from_measure,
    sa_stationary,
    singleton_report,
    symbolic_mohle,
    symbolic_regenerative,
)
from coalfreeze.chains import shape_law
from coalfreeze.partitions import integer_partitions

from conftest import ARBITRARY_ROWS, builtin_measures
from displays import MOHLE_DISPLAY, REGENERATIVE_DISPLAY, parse

RESULTS: dict = {}


def record(number, title, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}" + (f" -- {detail}" if detail else "")
    RESULTS[number] = line
    print(line)
    return ok


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


# 1 ---------------------------------------------------------------------------


def criterion_1():
    (sym_m, sym_r), secs = timed(lambda: (symbolic_mohle(4), symbolic_regenerative(4)))
    bad_m = [lam for lam, text in MOHLE_DISPLAY.items() if sym_m[lam] != parse(text)]
    bad_r = [lam for lam, text in REGENERATIVE_DISPLAY.items() if sym_r[lam] != parse(text)]
    ok = not bad_m and not bad_r and secs < 1
    detail = f"mohle mismatches {bad_m or 'none'}; regenerative mismatches {bad_r or 'none'}; {secs:.3f}s"
    if bad_m:
        detail += "; computed " + "; ".join(f"p{lam} = {sym_m[lam]}" for lam in bad_m)
    return record(1, "symbolic expansions equal the displayed tables", ok, detail)


def test_criterion_1():
    assert criterion_1()


# 2 ---------------------------------------------------------------------------


def acceptance_measures():
    return builtin_measures()


def criterion_2():
    def run():
        fails = []
        for m in acceptance_measures():
            q = from_measure(m, 8)
            if not check_consistency(q, tol=0):
                fails.append((m.name, "consistency"))
            if extend_backward(q.row(8)) != q:
                fails.append((m.name, "extend_backward"))
        return fails

    fails, secs = timed(run)
    return record(2, "consistency round trip at n=8", not fails and secs < 1, f"failures {fails or 'none'}; {secs:.3f}s")


def test_criterion_2():
    assert criterion_2()


# 3 ---------------------------------------------------------------------------


def criterion_3():
    def run():
        bad = []
        for rho in (F(1, 2), F(1), F(5, 2)):
            if mohle_eppf(from_measure(FreezeMeasure.kingman(rho), 8), 8) != ewens_eppf(2 * rho, 8):
                bad.append(rho)
        return bad

    bad, secs = timed(run)
    return record(3, "Kingman EPPF equals Ewens(2 rho), m <= 8", not bad and secs < 5, f"mismatched rho {bad or 'none'}; {secs:.3f}s")


def test_criterion_3():
    assert criterion_3()


# 4 ---------------------------------------------------------------------------


def criterion_4():
    p = mohle_eppf(from_measure(FreezeMeasure.hook(F(1)), 8), 8)
    off = [lam for m in range(1, 9) for lam in integer_partitions(m) if any(x != 1 for x in lam[1:]) and p[lam] != 0]
    return record(4, "hook measure is supported on hook shapes, m <= 8", not off, f"nonzero non-hook shapes {off or 'none'}")


def test_criterion_4():
    assert criterion_4()


# 5 ---------------------------------------------------------------------------


def criterion_5():
    bad = []
    secs_by_n = {}
    for n in (2, 3, 4, 5):
        t0 = time.perf_counter()
        rows = [from_measure(m, n).row(n) for m in acceptance_measures()] + ARBITRARY_ROWS[n]
        for i, row in enumerate(rows):
            q = extend_backward(row)
            eppf = {lam: v for lam, v in mohle_eppf(q, n).shape_law(n).items() if v != 0}
            fm = shape_law(fm_final_law(n, q))
            sa = shape_law(sa_stationary(n, row))
            if not (sa == fm == eppf):
                bad.append((n, i))
        secs_by_n[n] = time.perf_counter() - t0
    ok = not bad and secs_by_n[5] < 30
    return record(5, "SA stationary = FM final law = EPPF, n = 2..5", ok, f"mismatches {bad or 'none'}; n=5 took {secs_by_n[5]:.2f}s")


def test_criterion_5():
    assert criterion_5()


# 6 ---------------------------------------------------------------------------


def criterion_6(seed=20240601):
    n, runs = 5, 100_000
    m = FreezeMeasure.uniform(F(1))
    q = from_measure(m, n)
    exact = mohle_eppf(q, n)
    (fm, t_fm) = timed(lambda: fm_estimate_eppf(n, q, runs, seed=seed))
    (co, t_co) = timed(lambda: coalescent_estimate_eppf(n, m, runs, seed=seed + 1))
    parts = []
    ok = t_fm < 30 and t_co < 30
    for name, est in (("fm", fm), ("coalescent", co)):
        rows = est.compare(exact, sigmas=4.0)
        worst = max(abs(r["z"]) for r in rows)
        ok = ok and all(r["ok"] for r in rows)
        parts.append(f"{name} max |z| {worst:.2f}")
    detail = ", ".join(parts) + f"; {t_fm:.1f}s + {t_co:.1f}s; 7 cells each, 4 sigma (no Bonferroni correction)"
    return record(6, "Monte Carlo shape laws within 4 sigma, n=5, 1e5 runs", ok, detail)


def test_criterion_6():
    assert criterion_6()


# 7 ---------------------------------------------------------------------------


def criterion_7():
    worst = F(0)
    for m in acceptance_measures():
        q = from_measure(m, 5)
        for n in range(2, 6):
            for k in range(1, n):
                worst = max(worst, check_jump_consistency(q, n, k, exact=True).max_tv)
    uniform_rows = DecrementMatrix(tuple(tuple(F(1, b) for _ in range(b)) for b in range(1, 4)))
    bad = check_jump_consistency(uniform_rows, 3, 2, exact=True).max_tv
    ok = worst == 0 and bad > 0
    return record(7, "jump consistency: 0 for consistent q, > 0 for uniform rows", ok, f"max TV consistent {worst}; uniform rows (n=3,m=2) {bad}")


def test_criterion_7():
    assert criterion_7()


# 8 ---------------------------------------------------------------------------


def criterion_8():
    bad = []
    for m in acceptance_measures():
        rep = phi_from_sequence([phi_total(m, n) for n in range(1, 9)], m.rho)
        want = [[phi(m, n, k) for k in range(1, n + 1)] for n in range(1, 9)]
        if [list(r) for r in rep.ladder.phi_parts] != want:
            bad.append(m.name)
    neg = phi_from_sequence([n + n * n for n in range(1, 9)], F(1))
    ok = not bad and bool(neg.negative_entries)
    detail = (
        f"measure reproduction failures {bad or 'none'}; Phi(n)=n+n^2: "
        f"{len(neg.negative_entries)} negative entries, {len(neg.row_sum_defects)} row-sum defects"
    )
    return record(8, "positivity construction reproduces rates; flags n+n^2 by a negative entry", ok, detail)


def test_criterion_8():
    assert criterion_8()


# 9 ---------------------------------------------------------------------------


def criterion_9():
    bad = []
    for m in (FreezeMeasure.uniform(), FreezeMeasure.atom(F(1, 3)), FreezeMeasure.beta_density(2, 3)):
        q = regenerative_from_measure(m, 8)
        p = regenerative_eppf(q, 8)
        bad += [(m.name, lam) for k in range(1, 9) for lam in integer_partitions(k) if regenerative_eppf_explicit(q, lam) != p[lam]]
    return record(9, "regenerative explicit formula equals recursion, m <= 8", not bad, f"mismatches {bad or 'none'}")


def test_criterion_9():
    assert criterion_9()


# 10 --------------------------------------------------------------------------


def criterion_10():
    mats = [from_measure(m, 6) for m in acceptance_measures()]
    mats += [extend_backward(r) for r in ARBITRARY_ROWS[5] if r[0] > 0]
    mats.append(DecrementMatrix(tuple(tuple(F(1, b) for _ in range(b)) for b in range(1, 7))))
    bad_recover = [i for i, q in enumerate(mats) if recover_decrement(mohle_eppf(q, q.n_max)) != q]
    bad_ladder = []
    for i, q in enumerate(mats[:-1]):
        ladder = recover_phi_ladder(q)
        if ladder.pascal_defects() or len(set(ladder.freeze_rates())) != 1:
            bad_ladder.append(i)
    ok = not bad_recover and not bad_ladder
    return record(10, "q recovered from p exactly; Phi ladder Pascal + constant freeze rate", ok,
                  f"{len(mats)} matrices; recovery failures {bad_recover or 'none'}; ladder failures {bad_ladder or 'none'}")


def test_criterion_10():
    assert criterion_10()


# 11 --------------------------------------------------------------------------


def criterion_11(seed=11):
    ns = [50, 100, 200]
    persist = singleton_report(FreezeMeasure.atom(F(1, 2), rho=F(1)), ns, 1000, seed=seed)
    vanish = singleton_report(FreezeMeasure.kingman(F(1)), ns, 1000, seed=seed)
    a = [lv.element_fraction for lv in persist.levels]
    b = [lv.element_fraction for lv in vanish.levels]
    ok = min(a) > 0.01 and vanish.decreasing
    detail = "singleton fraction atom(1/2): " + ", ".join(f"{x:.4f}" for x in a) + "; kingman: " + ", ".join(f"{x:.4f}" for x in b)
    return record(11, "singleton trend (diagnostic)", ok, detail)


def test_criterion_11():
    assert criterion_11()


if __name__ == "__main__":
    outcomes = []
    for fn in (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9, criterion_10, criterion_11):
        outcomes.append(fn())
    sys.exit(0 if all(outcomes) else 1)
