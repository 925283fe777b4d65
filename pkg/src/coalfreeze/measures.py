"""Freeze data (Lambda, rho) and the integral rates derived from it.

Lambda is a finite sum of weighted point masses at rational locations and
weighted Beta(a, b) densities with integer parameters.  Every rate below is
then an exact rational.  The integrand convention is ``0**0 == 1``, so a point
mass at 0 only feeds binary merges and a point mass at 1 only feeds full
merges.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Tuple

from coalfreeze._numbers import Scalar, beta_int, format_scalar, parse_scalar


@dataclass(frozen=True)
class Atom:
    x: Fraction
    w: Fraction


@dataclass(frozen=True)
class BetaComponent:
    """``w`` times the Beta(a, b) probability density."""

    a: int
    b: int
    w: Fraction


@dataclass(frozen=True)
class FreezeMeasure:
    atoms: Tuple[Atom, ...] = ()
    beta: Tuple[BetaComponent, ...] = ()
    rho: Fraction = Fraction(0)
    name: str = field(default="", compare=False)

    def __post_init__(self):
        for atom in self.atoms:
            if not 0 <= atom.x <= 1:
                raise ValueError(f"atom location {atom.x} outside [0, 1]")
            if atom.w <= 0:
                raise ValueError("atom weights must be positive")
        for comp in self.beta:
            if int(comp.a) != comp.a or int(comp.b) != comp.b or comp.a < 1 or comp.b < 1:
                raise ValueError("Beta parameters must be positive integers")
            if comp.w <= 0:
                raise ValueError("Beta component weights must be positive")
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")

    # -- constructors -----------------------------------------------------
    @classmethod
    def kingman(cls, rho=Fraction(1, 2)) -> "FreezeMeasure":
        return cls(atoms=(Atom(Fraction(0), Fraction(1)),), rho=Fraction(rho), name="kingman")

    @classmethod
    def hook(cls, rho=Fraction(1)) -> "FreezeMeasure":
        return cls(atoms=(Atom(Fraction(1), Fraction(1)),), rho=Fraction(rho), name="hook")

    @classmethod
    def uniform(cls, rho=Fraction(1)) -> "FreezeMeasure":
        return cls(beta=(BetaComponent(1, 1, Fraction(1)),), rho=Fraction(rho), name="uniform")

    @classmethod
    def atom(cls, x, w=Fraction(1), rho=Fraction(1)) -> "FreezeMeasure":
        return cls(atoms=(Atom(Fraction(x), Fraction(w)),), rho=Fraction(rho), name=f"atom({x})")

    @classmethod
    def beta_density(cls, a: int, b: int, w=Fraction(1), rho=Fraction(1)) -> "FreezeMeasure":
        return cls(beta=(BetaComponent(a, b, Fraction(w)),), rho=Fraction(rho), name=f"beta({a},{b})")

    @classmethod
    def named(cls, name: str, rho=None) -> "FreezeMeasure":
        factories = {"kingman": cls.kingman, "hook": cls.hook, "uniform": cls.uniform}
        if name not in factories:
            raise ValueError(f"unknown measure {name!r}; choose from {sorted(factories)}")
        return factories[name]() if rho is None else factories[name](Fraction(rho))

    def with_rho(self, rho) -> "FreezeMeasure":
        return FreezeMeasure(self.atoms, self.beta, Fraction(rho), self.name)

    def scaled(self, c) -> "FreezeMeasure":
        """Multiply Lambda and rho by ``c > 0``; the decrement matrix is unchanged."""
        c = Fraction(c)
        if c <= 0:
            raise ValueError("scale factor must be positive")
        return FreezeMeasure(
            tuple(Atom(a.x, a.w * c) for a in self.atoms),
            tuple(BetaComponent(b.a, b.b, b.w * c) for b in self.beta),
            self.rho * c,
            self.name,
        )

    # -- properties -------------------------------------------------------
    @property
    def total_mass(self) -> Fraction:
        return sum((a.w for a in self.atoms), Fraction(0)) + sum((c.w for c in self.beta), Fraction(0))

    @property
    def is_zero(self) -> bool:
        return not self.atoms and not self.beta

    def integrate_monomial(self, i: int, j: int) -> Fraction:
        """``int x**i (1-x)**j Lambda(dx)`` for integers ``i, j >= 0``."""
        total = Fraction(0)
        for atom in self.atoms:
            total += atom.w * _pow(atom.x, i) * _pow(1 - atom.x, j)
        for comp in self.beta:
            total += comp.w * beta_int(comp.a + i, comp.b + j) / beta_int(comp.a, comp.b)
        return total

    # -- JSON -------------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "atoms": [{"x": str(a.x), "w": str(a.w)} for a in self.atoms],
            "beta": [{"a": c.a, "b": c.b, "w": str(c.w)} for c in self.beta],
            "rho": str(self.rho),
        }

    @classmethod
    def from_json(cls, data) -> "FreezeMeasure":
        if isinstance(data, str):
            data = json.loads(data)
        if not isinstance(data, dict):
            raise ValueError("measure spec must be a JSON object")
        unknown = set(data) - {"atoms", "beta", "rho", "exact", "name"}
        if unknown:
            raise ValueError(f"unknown measure fields: {sorted(unknown)}")
        # floats are converted to their shortest decimal rational either way
        atoms = tuple(Atom(parse_scalar(a["x"]), parse_scalar(a["w"])) for a in data.get("atoms", []))
        beta = tuple(
            BetaComponent(int(c["a"]), int(c["b"]), parse_scalar(c.get("w", 1))) for c in data.get("beta", [])
        )
        return cls(atoms, beta, parse_scalar(data.get("rho", 0)), data.get("name", ""))


def _pow(x: Fraction, e: int) -> Fraction:
    # 0**0 == 1 is exactly what Python's Fraction does; kept explicit for clarity
    return Fraction(1) if e == 0 else x**e


def lambda_rate(m: FreezeMeasure, b: int, k: int) -> Fraction:
    """Rate at which one given k-tuple among b blocks merges."""
    if not 2 <= k <= b:
        raise ValueError(f"lambda_rate needs 2 <= k <= b, got b={b}, k={k}")
    return m.integrate_monomial(k - 2, b - k)


def phi(m: FreezeMeasure, b: int, k: int) -> Fraction:
    """Total rate of k-merges (k >= 2) or of freezes (k == 1) among b active blocks."""
    if not 1 <= k <= b:
        raise ValueError(f"phi needs 1 <= k <= b, got b={b}, k={k}")
    if k == 1:
        return m.rho * b
    return comb(b, k) * lambda_rate(m, b, k)


def phi_total(m: FreezeMeasure, b: int) -> Fraction:
    if b < 1:
        raise ValueError("b must be positive")
    return sum((phi(m, b, k) for k in range(1, b + 1)), Fraction(0))


def _merge_kernel(x: float, b: int) -> float:
    # (1 - (1-x)^b - b x (1-x)^(b-1)) / x^2; the closed form cancels badly when
    # b x is small, so there the expansion sum_j (-1)^j (j+1) C(b, j+2) x^j is summed
    if b < 2:
        return 0.0
    if b * x < 0.1:
        total, term_x = 0.0, 1.0
        for j in range(b - 1):
            term = (-1) ** j * (j + 1) * comb(b, j + 2) * term_x
            total += term
            if abs(term) < 1e-18 * abs(total):
                break
            term_x *= x
        return total
    return (1 - (1 - x) ** b - b * x * (1 - x) ** (b - 1)) / (x * x)


def phi_total_integral(m: FreezeMeasure, b: int) -> float:
    """Total event rate from the single-integral closed form, by quadrature.

    Independent of :func:`phi_total`; the two must agree.
    """
    from scipy import integrate

    total = float(m.rho) * b
    for atom in m.atoms:
        total += float(atom.w) * _merge_kernel(float(atom.x), b)
    for comp in m.beta:
        norm = float(beta_int(comp.a, comp.b))

        def density(x, a=comp.a, bb=comp.b):
            return x ** (a - 1) * (1 - x) ** (bb - 1) / norm

        value, _ = integrate.quad(lambda x: _merge_kernel(x, b) * density(x), 0.0, 1.0, epsabs=1e-13, epsrel=1e-12)
        total += float(comp.w) * value
    return total


def mu_moment(m: FreezeMeasure, r: int) -> Scalar:
    """``int x**r Lambda(dx)`` for ``r >= -1``; ``math.inf`` when it diverges."""
    if r < -1:
        raise ValueError("only r >= -1 is supported")
    if r >= 0:
        return m.integrate_monomial(r, 0)
    total = Fraction(0)
    for atom in m.atoms:
        if atom.x == 0:
            return math.inf
        total += atom.w / atom.x
    for comp in m.beta:
        if comp.a == 1:
            return math.inf
        total += comp.w * beta_int(comp.a - 1, comp.b) / beta_int(comp.a, comp.b)
    return total


@dataclass
class MergeConsistencyReport:
    ok: bool
    violation: Tuple[int, int] | None = None

    def __bool__(self) -> bool:
        return self.ok


def check_merge_consistency(m, n: int) -> MergeConsistencyReport:
    """Check ``lambda(b,k) = lambda(b+1,k) + lambda(b+1,k+1)`` for 2 <= k <= b < n.

    ``m`` is either a :class:`FreezeMeasure` or a callable ``rate(b, k)``, so a
    hand-built rate array can be tested too.
    """
    rate = m if callable(m) else (lambda b, k: lambda_rate(m, b, k))
    for b in range(2, n):
        for k in range(2, b + 1):
            if rate(b, k) != rate(b + 1, k) + rate(b + 1, k + 1):
                return MergeConsistencyReport(False, (b, k))
    return MergeConsistencyReport(True)


def describe(m: FreezeMeasure) -> str:
    parts = [f"{a.w}*delta({a.x})" for a in m.atoms]
    parts += [f"{c.w}*Beta({c.a},{c.b})" for c in m.beta]
    return (" + ".join(parts) or "0") + f", rho={format_scalar(m.rho)}"
