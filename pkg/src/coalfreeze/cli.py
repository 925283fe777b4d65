"""Command-line front end: ``coalfreeze <command> [options]``.

Exit codes: 0 success or check passed, 1 check failed, 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import sys
from fractions import Fraction
from typing import List, Sequence

from coalfreeze import chains, coalescent
from coalfreeze._numbers import format_scalar, parse_scalar
from coalfreeze.decrement import (
    DecrementMatrix,
    check_consistency,
    extend_backward,
    from_measure,
    phi_from_sequence,
    recover_phi_ladder,
    regenerative_from_measure,
)
from coalfreeze.eppf import ewens_eppf, mohle_eppf, recover_decrement, regenerative_eppf
from coalfreeze.measures import FreezeMeasure
from coalfreeze.partitions import EppfTable, check_addition_rule, integer_partitions, shape

FORMAT_TAG = "coalfreeze-v1"


class UsageError(Exception):
    """Bad flags or unreadable input; exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- input parsing ----------------------------------------------------------


def _load_json(source: str, what: str):
    try:
        if os.path.exists(source):
            with open(source) as fh:
                return json.load(fh)
        return json.loads(source)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {what} {source!r}: {exc}") from exc


def parse_measure(source: str, rho: str | None = None) -> FreezeMeasure:
    """A named measure (kingman, hook, uniform), a JSON file, or inline JSON."""
    if not source:
        raise UsageError("--measure is required")
    try:
        if source in ("kingman", "hook", "uniform"):
            m = FreezeMeasure.named(source)
        else:
            m = FreezeMeasure.from_json(_load_json(source, "measure"))
        if rho is not None:
            m = m.with_rho(parse_scalar(rho))
        return m
    except UsageError:
        raise
    except (ValueError, TypeError, KeyError, ZeroDivisionError) as exc:
        raise UsageError(f"bad measure {source!r}: {exc}") from exc


def _matrix_from_args(args, n: int | None = None, flavor: str = "mohle") -> DecrementMatrix:
    n = args.n if n is None else n
    if getattr(args, "matrix", None):
        try:
            q = DecrementMatrix.from_json(_load_json(args.matrix, "matrix"))
        except (ValueError, TypeError, KeyError, ZeroDivisionError) as exc:
            raise UsageError(f"bad matrix: {exc}") from exc
        if n is not None and q.n_max < n:
            raise UsageError(f"matrix covers b <= {q.n_max}, need {n}")
        return q.truncate(n) if n is not None else q
    if not getattr(args, "measure", None):
        raise UsageError("need --measure or --matrix")
    if n is None:
        raise UsageError("--n is required with --measure")
    m = parse_measure(args.measure, args.rho)
    return regenerative_from_measure(m, n) if flavor == "regenerative" else from_measure(m, n)


def _eppf_from_args(args) -> EppfTable:
    try:
        return EppfTable.from_json(_load_json(args.eppf, "EPPF table"))
    except (ValueError, TypeError, KeyError, ZeroDivisionError) as exc:
        raise UsageError(f"bad EPPF table: {exc}") from exc


# -- output -----------------------------------------------------------------


class Output:
    def __init__(self, args, stream, errors=None):
        self.fmt = args.format
        self.exact = args.exact
        self.command = args.command
        self.seed = getattr(args, "seed", None)
        self.stream = stream
        self.errors = errors or sys.stderr

    def warn(self, message: str) -> None:
        print(f"warning: {message}", file=self.errors)

    def emit(self, header: Sequence[str], rows: List[Sequence], payload: dict, extra: dict | None = None):
        meta = {"format": FORMAT_TAG, "command": self.command, "seed": self.seed}
        meta.update(extra or {})
        if self.fmt == "json":
            meta.update(payload)
            json.dump(meta, self.stream, indent=2, default=str)
            self.stream.write("\n")
            return
        info = " ".join(f"{k}={v}" for k, v in meta.items() if k != "format")
        self.stream.write(f"# {FORMAT_TAG} {info}\n")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        self.stream.write(buf.getvalue())


def _value_cols(v, exact: bool) -> List[str]:
    if exact:
        return [format_scalar(v)]
    return [str(v) if isinstance(v, Fraction) else "", repr(float(v))]


def _value_header(name: str, exact: bool) -> List[str]:
    return [name] if exact else [f"{name}_exact", f"{name}_float"]


# -- commands ---------------------------------------------------------------


def cmd_decrement(args, out: Output) -> int:
    q = _matrix_from_args(args, flavor=args.flavor)
    rows = [[b, k] + _value_cols(q(b, k), args.exact) for b in range(1, q.n_max + 1) for k in range(1, b + 1)]
    out.emit(["b", "k"] + _value_header("q", args.exact), rows, q.to_json())
    return 0


def cmd_eppf(args, out: Output) -> int:
    if args.engine == "ewens":
        if args.theta is None:
            raise UsageError("--engine ewens needs --theta")
        p = ewens_eppf(parse_scalar(args.theta), args.n)
    elif args.matrix:
        q = _matrix_from_args(args)
        if q.flavor != args.engine:
            raise UsageError(f"engine {args.engine} does not match a {q.flavor}-flavor matrix")
        p = mohle_eppf(q, args.n) if args.engine == "mohle" else regenerative_eppf(q, args.n)
    else:
        q = _matrix_from_args(args, flavor=args.engine)
        p = mohle_eppf(q, args.n) if args.engine == "mohle" else regenerative_eppf(q, args.n)
    rows = [
        ["+".join(map(str, lam)), m] + _value_cols(p[lam], args.exact)
        for m in range(1, args.n + 1)
        for lam in integer_partitions(m)
    ]
    out.emit(["partition", "m"] + _value_header("p", args.exact), rows, p.to_json(), {"engine": args.engine})
    return 0


def _empirical_rows(e: chains.EmpiricalEppf, exact_table: EppfTable | None):
    rep = e.report(exact_table)
    header = ["shape", "count", "p_hat", "stderr"] + (["p_exact"] if exact_table else [])
    rows = [
        ["+".join(map(str, r["shape"])), r["count"], repr(r["p_hat"]), repr(r["stderr"])]
        + ([r["p_exact"]] if exact_table else [])
        for r in rep["rows"]
    ]
    return header, rows, rep


def cmd_simulate(args, out: Output) -> int:
    if args.exact and not args.exact_stationary:
        raise UsageError("--exact is not available for Monte Carlo simulation")
    m = parse_measure(args.measure, args.rho)
    if args.exact_stationary:
        if args.mode != "sa":
            raise UsageError("--exact-stationary applies to --mode sa")
        q = from_measure(m, args.n)
        dist = chains.sa_stationary(args.n, q.row(args.n))
        law = chains.shape_law(dist)
        rows = [["+".join(map(str, lam))] + _value_cols(law.get(lam, Fraction(0)), args.exact) for lam in integer_partitions(args.n)]
        payload = {"distribution": [{"partition": sp.to_json(), "p": format_scalar(p)} for sp, p in dist.items()]}
        out.emit(["shape"] + _value_header("p", args.exact), rows, payload, {"mode": "sa-exact"})
        return 0
    if args.mode == "fm":
        q = from_measure(m, args.n)
        e = chains.fm_estimate_eppf(args.n, q, args.runs, args.seed)
        header, rows, rep = _empirical_rows(e, mohle_eppf(q, args.n))
    elif args.mode == "coalescent":
        if args.runs == 1:
            traj = coalescent.simulate(args.n, m, chains.RngStream(args.seed))
            events = [e.to_json() for e in traj.events]
            rows = [[repr(e["t"]), e["kind"], ";".join(" ".join(map(str, b)) for b in e["blocks"]), e["n_active"]] for e in events]
            out.emit(["t", "kind", "blocks", "n_active"], rows, traj.to_json(), {"mode": "coalescent"})
            return 0
        e = coalescent.coalescent_estimate_eppf(args.n, m, args.runs, args.seed)
        header, rows, rep = _empirical_rows(e, mohle_eppf(from_measure(m, args.n), args.n))
    else:
        out.warn("SA mode reports an ergodic average after burn-in; it is approximate")
        q = from_measure(m, args.n)
        e = chains.sa_estimate_shapes(args.n, q.row(args.n), args.runs, args.burn_in, args.seed)
        e_rows = e.report()
        header = ["shape", "count", "frequency"]
        rows = [["+".join(map(str, r["shape"])), r["count"], repr(r["count"] / e.samples)] for r in e_rows["rows"]]
        rep = e_rows
    out.emit(header, rows, rep, {"mode": args.mode})
    return 0


def cmd_check(args, out: Output) -> int:
    tol = 0 if args.exact else args.tol
    if args.target == "consistency":
        q = _matrix_from_args(args)
        rep = check_consistency(q, tol=tol)
        ok = bool(rep)
        detail = {"ok": ok, "violation": None if ok else [str(x) for x in rep.violation]}
        rows = [["consistency", "pass" if ok else "fail", "" if ok else str(rep)]]
    elif args.target == "addition":
        if not args.eppf:
            raise UsageError("check addition needs --eppf")
        rep = check_addition_rule(_eppf_from_args(args), tol=tol)
        ok = bool(rep)
        detail = {"ok": ok, "violations": [[list(lam), str(a), str(b)] for lam, a, b in rep.violations]}
        rows = [["addition", "pass" if ok else "fail", f"{len(rep.violations)} violations"]]
    elif args.target == "jump":
        if args.m is None:
            raise UsageError("check jump needs --m")
        q = _matrix_from_args(args)
        rep = chains.check_jump_consistency(q, args.n, args.m, samples=args.samples, seed=args.seed)
        ok = rep.consistent
        detail = rep.to_json()
        rows = [["jump", "pass" if ok else "fail", f"max_tv={format_scalar(rep.max_tv) if rep.mode == 'exact' else rep.max_tv}"]]
    else:
        if not args.phi or args.rho is None:
            raise UsageError("check positivity needs --phi and --rho")
        phis = [parse_scalar(x) for x in args.phi.split(",")]
        rep = phi_from_sequence(phis, parse_scalar(args.rho))
        ok = rep.ok
        detail = {
            "ok": ok,
            "phi_parts": [[str(x) for x in row] for row in rep.ladder.phi_parts],
            "negative_entries": [[n, k, str(v)] for n, k, v in rep.negative_entries],
            "row_sum_defects": [[n, str(v)] for n, v in rep.row_sum_defects],
        }
        rows = [["positivity", "pass" if ok else "fail", f"{len(rep.negative_entries)} negative, {len(rep.row_sum_defects)} row-sum defects"]]
    out.emit(["check", "result", "detail"], rows, detail, {"target": args.target})
    return 0 if ok else 1


def cmd_recover(args, out: Output) -> int:
    p = _eppf_from_args(args)
    q = recover_decrement(p, args.n)
    if args.ladder:
        ladder = recover_phi_ladder(q)
        rows = [[b] + _value_cols(ladder.phi[b - 1], args.exact) for b in range(1, ladder.n_max + 1)]
        payload = {
            "rho": str(ladder.rho),
            "phi": [str(x) for x in ladder.phi],
            "phi_parts": [[str(x) for x in r] for r in ladder.phi_parts],
            "degenerate": ladder.degenerate,
            "notes": ladder.notes,
        }
        out.emit(["b"] + _value_header("phi", args.exact), rows, payload)
        return 0
    rows = [[b, k] + _value_cols(q(b, k), args.exact) for b in range(1, q.n_max + 1) for k in range(1, b + 1)]
    out.emit(["b", "k"] + _value_header("q", args.exact), rows, q.to_json())
    return 0


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed (random and printed if omitted)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--exact", action="store_true", help="exact rationals only; rejected for Monte Carlo")

    source = _Parser(add_help=False)
    source.add_argument("--measure", help="kingman | hook | uniform | JSON file | inline JSON")
    source.add_argument("--rho", default=None, help="freezing rate, e.g. 1/2")
    source.add_argument("--matrix", help="decrement matrix JSON file or inline JSON")

    parser = _Parser(prog="coalfreeze", description="Coalescents with freeze: decrement matrices, EPPFs, chains.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("decrement", parents=[common, source], help="decrement matrix of a measure")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--flavor", choices=("mohle", "regenerative"), default="mohle")
    p.set_defaults(func=cmd_decrement)

    p = sub.add_parser("eppf", parents=[common, source], help="EPPF table")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--engine", choices=("mohle", "regenerative", "ewens"), default="mohle")
    p.add_argument("--theta", default=None)
    p.set_defaults(func=cmd_eppf)

    p = sub.add_parser("simulate", parents=[common, source], help="Monte Carlo simulation")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mode", choices=("fm", "coalescent", "sa"), default="fm")
    p.add_argument("--runs", type=int, default=10000)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--exact-stationary", action="store_true", help="exact SA stationary law (n <= 8)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", parents=[common, source], help="run a checker")
    p.add_argument("target", choices=("consistency", "addition", "jump", "positivity"))
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--eppf", help="EPPF table JSON file or inline JSON")
    p.add_argument("--phi", help="comma-separated Phi(1), Phi(2), ...")
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("recover", parents=[common], help="recover q (and optionally Phi) from an EPPF")
    p.add_argument("--eppf", required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--ladder", action="store_true", help="print the Phi ladder instead of q")
    p.set_defaults(func=cmd_recover)
    return parser


def main(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        needs_seed = args.command == "simulate" and not args.exact_stationary
        needs_seed = needs_seed or (args.command == "check" and args.target == "jump")
        if needs_seed and args.seed is None:
            args.seed = random.SystemRandom().getrandbits(32)
            print(f"seed: {args.seed}", file=stderr)
        return args.func(args, Output(args, stdout, stderr))
    except UsageError as exc:
        print(f"error: {exc}", file=stderr)
        return 2
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
