"""Covariant differentiation, commutators and definition substitution.

These are the local rewrite primitives shared by the rule system, the
tractor algebra and the operators.  All functions act on
``{factors: coefficient}`` dictionaries or :class:`Expr` values and never
canonicalize implicitly, except where noted.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable

from .coeff import Coefficient
from .expr import (GAUGE, SPACETIME, TRACTOR, Expr, Factor, Index, Term, dummy_names, free_of,
                   fresh_names, rename_apart, rename_factors, term_indices)
from .symbols import TABLE

# ---------------------------------------------------------------------------
# Leibniz rule


def _used_names(factors: Iterable[Factor]) -> set:
    return {i.name for i in term_indices(factors)}


def nabla_term(factors: tuple, index: Index) -> list[tuple[int, tuple]]:
    """Apply ``∇_index`` to a monomial via the Leibniz rule.

    Returns a list of ``(sign, factors)`` contributions (sign is always +1;
    the tuple form matches :func:`commutator`).  Parallel symbols (metrics)
    are skipped.  ``index`` must not clash with a dummy of ``factors``.
    """
    out = []
    for k, f in enumerate(factors):
        if TABLE[f.symbol].parallel:
            continue
        nf = Factor(f.symbol, (index,) + f.derivs, f.slots)
        out.append((1, factors[:k] + (nf,) + factors[k + 1:]))
    return out


def nabla(e: Expr, index: Index | str) -> Expr:
    """``∇_index e`` by the Leibniz rule (no canonicalization)."""
    if isinstance(index, str):
        from .expr import idx
        index = idx(index)
    out = []
    for t in e.terms:
        facs = t.factors
        if index.name in dummy_names(facs):
            facs = rename_apart(facs, {index.name})
        for s, nf in nabla_term(facs, index):
            out.append(Term(t.coef * s, nf))
    return Expr(out)


def nabla_chain(factors: tuple, derivs: tuple, coef: Coefficient = Fraction(1)) -> list[Term]:
    """Apply ``∇_{d1}…∇_{dk}`` (``derivs``, outermost first) to a monomial."""
    terms = [Term(coef, factors)]
    for d in reversed(derivs):
        nxt = []
        for t in terms:
            facs = t.factors
            if d.name in dummy_names(facs):
                facs = rename_apart(facs, {d.name})
            for s, nf in nabla_term(facs, d):
                nxt.append(Term(t.coef * s, nf))
        terms = nxt
    return terms


# ---------------------------------------------------------------------------
# curvature action of a commutator


def _fresh(avoid: set, family) -> str:
    return next(fresh_names(family, avoid))


def commutator_action(x: Index, y: Index, s: Factor, avoid: set) -> list[Term]:
    """``[∇_x, ∇_y]`` acting on the factor ``s`` (its derivs included).

    Spacetime indices pick up Riemann terms, gauge indices the gauge
    curvature ``F`` and tractor indices the tractor curvature ``Omega``;
    densities contribute nothing.
    """
    out = []
    idxs = s.derivs + s.slots
    nd = len(s.derivs)
    used = set(avoid) | {i.name for i in idxs} | {x.name, y.name}
    for pos, u in enumerate(idxs):
        w = _fresh(used, u.family)
        if u.family == SPACETIME:
            curv = "R"
        elif u.family == GAUGE:
            curv = "F"
        else:
            curv = "Omega"
        if u.up:
            cf = Factor(curv, (), (x, y, u, Index(w, u.family, False)))
            new_u = Index(w, u.family, True)
            sign = 1
        else:
            cf = Factor(curv, (), (x, y, Index(w, u.family, True), u))
            new_u = Index(w, u.family, False)
            sign = -1
        if pos < nd:
            ns = Factor(s.symbol, s.derivs[:pos] + (new_u,) + s.derivs[pos + 1:], s.slots)
        else:
            j = pos - nd
            ns = Factor(s.symbol, s.derivs, s.slots[:j] + (new_u,) + s.slots[j + 1:])
        out.append(Term(Fraction(sign), (cf, ns)))
    return out


def swap_relation(factors: tuple, fi: int, pos: int) -> list[Term]:
    """Terms of ``∇..∇_x∇_y S − ∇..∇_y∇_x S − ∇..[∇_x,∇_y]S`` (which vanish).

    ``fi`` selects the factor and ``pos`` the derivative position of ``x``;
    ``y`` is at ``pos + 1``.
    """
    f = factors[fi]
    d = f.derivs
    x, y = d[pos], d[pos + 1]
    rest = factors[:fi] + factors[fi + 1:]
    swapped = Factor(f.symbol, d[:pos] + (y, x) + d[pos + 2:], f.slots)
    out = [Term(Fraction(1), factors), Term(Fraction(-1), rest + (swapped,))]
    for t in commuted_correction(factors, fi, pos):
        out.append(Term(-t.coef, t.factors))
    return out


def commuted_correction(factors: tuple, fi: int, pos: int) -> list[Term]:
    """``∇_{outer}([∇_x,∇_y] S)`` times the other factors of the monomial."""
    f = factors[fi]
    d = f.derivs
    x, y = d[pos], d[pos + 1]
    outer = d[:pos]
    inner = Factor(f.symbol, d[pos + 2:], f.slots)
    rest = factors[:fi] + factors[fi + 1:]
    avoid = _used_names(factors)
    out = []
    for t in commutator_action(x, y, inner, avoid):
        for t2 in nabla_chain(t.factors, outer, t.coef):
            out.append(Term(t2.coef, rest + t2.factors))
    return out


def commute_to_order(e: Expr, key: Callable[[Index], object] | None = None) -> Expr:
    """Sort every derivative string by ``key`` (default: index name).

    Each adjacent inversion ``∇_x∇_y`` with ``key(x) > key(y)`` is replaced
    by ``∇_y∇_x`` plus the curvature correction; correction terms carry two
    fewer derivatives, so the process terminates.
    """
    key = key or (lambda i: i.name)
    work = list(e.terms)
    done = []
    while work:
        t = work.pop()
        hit = None
        for fi, f in enumerate(t.factors):
            for p in range(len(f.derivs) - 1):
                if key(f.derivs[p]) > key(f.derivs[p + 1]):
                    hit = (fi, p)
                    break
            if hit:
                break
        if hit is None:
            done.append(t)
            continue
        fi, p = hit
        f = t.factors[fi]
        d = f.derivs
        swapped = Factor(f.symbol, d[:p] + (d[p + 1], d[p]) + d[p + 2:], f.slots)
        work.append(Term(t.coef, t.factors[:fi] + (swapped,) + t.factors[fi + 1:]))
        for c in commuted_correction(t.factors, fi, p):
            work.append(Term(t.coef * c.coef, c.factors))
    return Expr(done)


# ---------------------------------------------------------------------------
# definition substitution


class Definition:
    """A symbol definition ``symbol[placeholders] := body``.

    Placeholders are the free indices of ``body``, written in the natural
    position of the corresponding slot of ``symbol``.  Instantiating at a factor maps placeholders to the
    factor's slot indices, moving positions as needed, renames the body's
    dummies apart and applies the factor's derivatives by Leibniz.
    """

    def __init__(self, symbol: str, placeholders: tuple, body: Expr, note: str = ""):
        self.symbol = symbol
        self.placeholders = tuple(placeholders)
        self.body = body
        self.note = note

    def instantiate(self, f: Factor, avoid: set) -> list[Term]:
        mapping = {}
        natural = {}
        for (fam, nat_up), ph, actual in zip(TABLE[self.symbol].slots, self.placeholders, f.slots):
            mapping[ph] = actual
            natural[ph] = nat_up
        out = []
        for t in self.body.terms:
            facs = rename_apart(t.factors, avoid | {i.name for i in f.slots} | {i.name for i in f.derivs})
            new = []
            for g in facs:
                def m(i: Index) -> Index:
                    a = mapping.get(i.name)
                    if a is None:
                        return i
                    # placeholders are written in the slot's natural position
                    up = i.up != (a.up != natural[i.name])
                    return Index(a.name, a.family, up)
                new.append(Factor(g.symbol, tuple(m(i) for i in g.derivs), tuple(m(i) for i in g.slots)))
            out.extend(nabla_chain(tuple(new), f.derivs, t.coef))
        return out


def substitute(e: Expr, defs: dict[str, Definition], max_rounds: int = 10) -> Expr:
    """Replace every factor whose symbol has a definition, repeatedly."""
    terms = list(e.terms)
    for _ in range(max_rounds):
        changed = False
        nxt = []
        for t in terms:
            pos = next((k for k, f in enumerate(t.factors) if f.symbol in defs), None)
            if pos is None:
                nxt.append(t)
                continue
            changed = True
            f = t.factors[pos]
            rest = t.factors[:pos] + t.factors[pos + 1:]
            avoid = _used_names(t.factors)
            for b in defs[f.symbol].instantiate(f, avoid):
                nxt.append(Term(t.coef * b.coef, rest + b.factors))
        terms = nxt
        if not changed:
            return Expr(terms)
    # definitions may be nested more deeply than max_rounds in theory
    return substitute(Expr(terms), defs, max_rounds)


def ensure_apart(factors: tuple, names: set) -> tuple:
    return rename_apart(factors, names)


__all__ = [
    "nabla", "nabla_term", "nabla_chain", "commutator_action", "swap_relation",
    "commuted_correction", "commute_to_order", "Definition", "substitute", "free_of",
    "rename_factors", "TRACTOR",
]
