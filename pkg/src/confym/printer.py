"""Deterministic text and LaTeX rendering of expressions.

Terms are printed in the order of their factor tuples, so two expressions
with the same canonical terms print identically.  Factors inside a term
keep their stored order; after canonicalization that order is sorted by
symbol name and then by index pattern.
"""

from __future__ import annotations

from fractions import Fraction

from .coeff import RatFunc, format_coef, format_poly, latex_coef
from .expr import Expr, Factor, Index, Term


def _idx_text(i: Index) -> str:
    return ("^" if i.up else "") + i.name


def factor_text(f: Factor) -> str:
    body = f"{f.symbol}[{','.join(_idx_text(i) for i in f.slots)}]"
    if f.derivs:
        return f"nd[{','.join(_idx_text(i) for i in f.derivs)}]({body})"
    return body


def _coef_text(c) -> tuple[str, str]:
    """Return ``(sign, magnitude)``; an empty magnitude means unit."""
    if isinstance(c, RatFunc):
        if c.den == (Fraction(1),):
            return "+", f"({format_poly(c.num)})"
        return "+", format_coef(c)
    q = Fraction(c)
    sign = "-" if q < 0 else "+"
    q = abs(q)
    if q == 1:
        return sign, ""
    return sign, format_coef(q)


def term_text(t: Term) -> tuple[str, str]:
    sign, mag = _coef_text(t.coef)
    facs = "*".join(factor_text(f) for f in t.factors)
    if not facs:
        return sign, mag or "1"
    return sign, f"{mag}*{facs}" if mag else facs


def sort_terms(e: Expr) -> list[Term]:
    return sorted(e.terms, key=lambda t: t.factors)


def to_text(e: Expr) -> str:
    """Render ``e`` in the expression language (``"0"`` for the empty sum)."""
    ts = sort_terms(e)
    if not ts:
        return "0"
    out = []
    for k, t in enumerate(ts):
        sign, body = term_text(t)
        if k == 0:
            out.append(("-" if sign == "-" else "") + body)
        else:
            out.append(f" {sign} {body}")
    return "".join(out)


_LATEX_NAMES = {
    "Ups": r"\Upsilon",
    "Ups1": r"\Upsilon",
    "Omega": r"\Omega",
    "Ric": r"\mathrm{Ric}",
    "Sc": r"\mathrm{Sc}",
    "om": r"\omega",
    "omc": r"\omega",
    "eta": r"\eta",
    "g": r"\bar{g}",
    "h": r"h",
    "sec": r"s",
}


def _latex_indices(indices) -> str:
    if not indices:
        return ""
    out = []
    cur_up = None
    run: list[str] = []

    def flush():
        if run:
            out.append(("^{" if cur_up else "_{") + "".join(run) + "}")

    for i in indices:
        name = i.name.lstrip("%")
        if cur_up is not None and i.up != cur_up:
            flush()
            run = []
            out.append("{}")
        cur_up = i.up
        run.append(name)
    flush()
    return "".join(out)


def factor_latex(f: Factor) -> str:
    name = _LATEX_NAMES.get(f.symbol, f.symbol)
    body = name + _latex_indices(f.slots)
    if f.derivs:
        nablas = "".join(r"\nabla" + ("^{" if d.up else "_{") + d.name + "}" for d in f.derivs)
        return nablas + body if len(f.derivs) and f.slots == () else f"{nablas}{body}"
    return body


def to_latex(e: Expr) -> str:
    """Render ``e`` as a LaTeX formula body."""
    ts = sort_terms(e)
    if not ts:
        return "0"
    parts = []
    for k, t in enumerate(ts):
        c = t.coef
        neg = (not isinstance(c, RatFunc)) and Fraction(c) < 0
        mag = -c if neg else c
        coef = "" if mag == 1 else latex_coef(mag)
        if isinstance(mag, RatFunc):
            coef = r"\left(" + coef + r"\right)"
        facs = " ".join(factor_latex(f) for f in t.factors) or ("1" if not coef else "")
        body = f"{coef} {facs}".strip()
        if k == 0:
            parts.append(("-" if neg else "") + body)
        else:
            parts.append((" - " if neg else " + ") + body)
    return "".join(parts)
