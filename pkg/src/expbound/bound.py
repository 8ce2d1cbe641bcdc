"""Symbolic bounds: extraction from LP solutions and rendering."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal, localcontext
from fractions import Fraction

from .potential import (ONE, atom_endpoints, atom_str, base_order_key,
                        eval_base, make_base)


@dataclass(frozen=True)
class Bound:
    """A non-negative combination of base functions."""

    terms: tuple  # ((monomial, Fraction), ...) in canonical order

    @staticmethod
    def from_coeffs(coeffs) -> "Bound":
        """``coeffs`` maps monomials (tuples of atoms) to coefficients."""
        merged = {}
        for m, c in (coeffs.items() if isinstance(coeffs, dict) else coeffs):
            m = make_base(m)
            merged[m] = merged.get(m, 0) + Fraction(c)
        items = [(m, c) for m, c in merged.items() if c != 0]
        items.sort(key=lambda t: base_order_key(t[0]))
        return Bound(tuple(items))

    def as_dict(self) -> dict:
        return dict(self.terms)

    def degree(self) -> int:
        return max((len(m) for m, _ in self.terms), default=0)

    def eval(self, env) -> Fraction:
        env = {k: Fraction(v) for k, v in env.items()}
        return sum((c * eval_base(m, env) for m, c in self.terms), Fraction(0))

    def is_zero(self) -> bool:
        return not self.terms

    def text(self, decimal: bool = False) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.terms:
            cs = format_decimal(c) if decimal else str(c)
            if not m:
                parts.append(cs)
                continue
            mono = []
            for a, grp in itertools.groupby(m):
                n = len(list(grp))
                mono.append(atom_str(a) + (f"^{n}" if n > 1 else ""))
            body = "·".join(mono)
            parts.append(body if c == 1 else f"{cs}·{body}")
        return " + ".join(parts)

    def __str__(self):
        return self.text()

    def to_json(self) -> dict:
        terms = []
        for m, c in self.terms:
            atoms = [dict(zip(("lo", "hi"), atom_endpoints(a))) for a in m]
            terms.append({"coeff": f"{c.numerator}/{c.denominator}", "atoms": atoms})
        return {"terms": terms}

    def json(self) -> str:
        return json.dumps(self.to_json())


def format_decimal(q: Fraction, digits: int = 6) -> str:
    """Round half up to ``digits`` significant digits, without trailing
    zeros: 91/11 -> 8.27273."""
    if q == 0:
        return "0"
    with localcontext() as ctx:
        ctx.prec = 60
        d = Decimal(q.numerator) / Decimal(q.denominator)
        exp = d.adjusted() - digits + 1
        r = d.quantize(Decimal(1).scaleb(exp), rounding=ROUND_HALF_UP)
    s = format(r, "f")
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    return s


def extract_bound(B, values) -> Bound:
    """Bound from root coefficients ``values`` indexed like ``B``."""
    return Bound.from_coeffs({B[i]: v for i, v in enumerate(values) if v != 0})


def parse_bound(text: str) -> Bound:
    """Inverse of :meth:`Bound.text` for exact coefficients."""
    from .potential import parse_poly
    if text.strip() == "0":
        return Bound(())
    return Bound.from_coeffs(parse_poly(text))


__all__ = ["Bound", "ONE", "extract_bound", "format_decimal", "parse_bound"]
