"""Expansion tables for n <= 4, transcribed by hand, plus a tiny parser."""
from __future__ import annotations

import re
from fractions import Fraction

from coalfreeze.eppf import QPolynomial

_TERM = re.compile(r"^\s*(?:(\d+/\d+|\d+)\s*)?((?:q\(\d+:\d+\))*)\s*$")
_FACTOR = re.compile(r"q\((\d+):(\d+)\)")


def parse(text: str) -> QPolynomial:
    """Parse e.g. ``"1/3 q(3:2)q(2:1) + 1/3 q(3:1)q(2:2)"``."""
    total = QPolynomial()
    for piece in text.split("+"):
        m = _TERM.match(piece)
        if not m:
            raise ValueError(f"cannot parse term {piece!r}")
        coeff = Fraction(m.group(1)) if m.group(1) else Fraction(1)
        factors = [(int(b), int(k)) for b, k in _FACTOR.findall(m.group(2))]
        total = total + QPolynomial({QPolynomial.parse_monomial(factors): coeff})
    return total


MOHLE_DISPLAY = {
    (1,): "1",
    (2,): "q(2:2)",
    (1, 1): "q(2:1)",
    (3,): "q(3:3) + q(3:2)q(2:2)",
    (2, 1): "1/3 q(3:2)q(2:1) + 1/3 q(3:1)q(2:2)",
    (1, 1, 1): "q(3:1)q(2:1)",
    (4,): "q(4:4) + q(4:3)q(2:2) + q(4:2)q(3:3) + q(4:2)q(3:2)q(2:2)",
    (3, 1): "1/4 q(4:3)q(2:1) + 1/6 q(4:2)q(3:2)q(2:1) + 1/2 q(4:2)q(3:1)q(2:2) + 1/4 q(4:1)q(3:3)"
    " + 1/12 q(4:1)q(3:2)q(2:2)",
    (2, 1, 1): "1/6 q(4:2)q(3:1)q(2:1) + 1/6 q(4:1)q(3:2)q(2:1) + 1/6 q(4:1)q(3:1)q(2:2)",
    (1, 1, 1, 1): "q(4:1)q(3:1)q(2:1)",
}

# (3,1) as produced by the forward recursion; the display above differs in two coefficients
MOHLE_31_RECURSION = (
    "1/4 q(4:3)q(2:1) + 1/6 q(4:2)q(3:2)q(2:1) + 1/6 q(4:2)q(3:1)q(2:2) + 1/4 q(4:1)q(3:3)"
    " + 1/4 q(4:1)q(3:2)q(2:2)"
)

REGENERATIVE_DISPLAY = {
    (1,): "1",
    (2,): "q(2:2)",
    (1, 1): "q(2:1)",
    (3,): "q(3:3)",
    (2, 1): "1/3 q(3:2) + 1/3 q(3:1)q(2:2)",
    (1, 1, 1): "q(3:1)q(2:1)",
    (4,): "q(4:4)",
    (3, 1): "1/4 q(4:3) + 1/4 q(4:1)q(3:3)",
    (2, 1, 1): "1/6 q(4:2)q(2:1) + 1/6 q(4:1)q(3:2) + 1/6 q(4:1)q(3:1)q(2:2)",
    (1, 1, 1, 1): "q(4:1)q(3:1)q(2:1)",
}
