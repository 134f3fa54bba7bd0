"""Canonical forms of tensor monomials and expressions.

A monomial is brought to canonical form in three steps:

1. metric elimination: ``g``/``h`` factors contracted with anything are
   absorbed by re-positioning the partner index, full traces become ``n``
   or ``n + 2``, and derivatives of the metrics vanish;
2. zero tests: a trace over a declared trace-free slot pair kills the term;
3. lexicographic minimisation over factor orderings (within ties of symbol
   name and derivative count) and over each factor's slot-symmetry group,
   with dummy indices numbered by first appearance.  The search keeps all
   tied prefixes; two tied states with identical future but opposite sign
   prove the monomial is zero.

Dummy pairs of the spacetime and tractor families are normalised to
"first occurrence up, second down"; gauge dummies keep the position fixed by
their slots.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable

from .coeff import N, Coefficient
from .expr import (GAUGE, SPACETIME, TRACTOR, Expr, ExprError, Factor, Index, Term, free_of,
                   fresh_names, term_indices)
from .symbols import TABLE

_TRACE = {SPACETIME: N, TRACTOR: N + 2}
_METRICS = {"g": SPACETIME, "h": TRACTOR}


def metric_normalize_monomial(factors: tuple) -> tuple[Coefficient, tuple] | None:
    """Eliminate contracted metric factors from one monomial.

    Returns ``(multiplier, factors)`` or ``None`` when the monomial vanishes
    (a differentiated metric).
    """
    facs = list(factors)
    mult: Coefficient = Fraction(1)
    for f in facs:
        if f.symbol in _METRICS and f.derivs:
            return None
    changed = True
    while changed:
        changed = False
        occ: dict[str, list[tuple[int, int]]] = {}
        for fi, f in enumerate(facs):
            for k, i in enumerate(f.derivs + f.slots):
                occ.setdefault(i.name, []).append((fi, k))
        for fi, f in enumerate(facs):
            if f.symbol not in _METRICS:
                continue
            a, b = f.slots
            if a.name == b.name:
                mult = mult * _TRACE[_METRICS[f.symbol]]
                del facs[fi]
                changed = True
                break
            for keep, kill in ((a, b), (b, a)):
                partners = [p for p in occ[kill.name] if p[0] != fi]
                if not partners:
                    continue
                pfi, pk = partners[0]
                pf = facs[pfi]
                new = Index(keep.name, keep.family, keep.up)
                nd = len(pf.derivs)
                if pk < nd:
                    derivs = pf.derivs[:pk] + (new,) + pf.derivs[pk + 1:]
                    facs[pfi] = Factor(pf.symbol, derivs, pf.slots)
                else:
                    j = pk - nd
                    facs[pfi] = Factor(pf.symbol, pf.derivs, pf.slots[:j] + (new,) + pf.slots[j + 1:])
                del facs[fi]
                changed = True
                break
            if changed:
                break
    return mult, tuple(facs)


def _has_tracefree_trace(f: Factor) -> bool:
    decl = TABLE[f.symbol]
    tf = decl.symmetry.tracefree_pairs
    if not tf:
        return False
    s = f.slots
    for p, q in tf:
        if s[p].name == s[q].name:
            return True
    return False


def _images(f: Factor):
    """Distinct signed slot images of a factor under its symmetry group."""
    decl = TABLE[f.symbol]
    grp = decl.group
    if len(grp) == 1:
        return ((f.slots, 1),)
    seen = {}
    for perm, sign in grp:
        sl = tuple(f.slots[p] for p in perm)
        if sl in seen:
            continue
        seen[sl] = sign
    return tuple(seen.items())


def _encode(f: Factor, slots: tuple, dmap: dict, dummies: set):
    """Encode a factor image; returns ``(code, new_dmap)``."""
    codes = []
    nm = dmap
    copied = False
    for i in f.derivs + slots:
        if i.name in dummies:
            k = nm.get(i.name)
            if k is None:
                if not copied:
                    nm = dict(nm)
                    copied = True
                k = len(nm)
                nm[i.name] = k
            codes.append((1, k, "", False))
        else:
            codes.append((0, 0, i.name, i.up))
    return (f.symbol, len(f.derivs), tuple(codes)), nm


_CACHE: dict = {}
_CACHE_LIMIT = 2_000_000


def clear_cache() -> None:
    _CACHE.clear()


def canonical_monomial(factors: tuple) -> tuple[Coefficient, tuple] | None:
    """Canonical form of a monomial.

    Returns ``(multiplier, canonical_factors)`` where ``multiplier`` collects
    the symmetry sign and any metric-trace factors, or ``None`` if the
    monomial is identically zero.
    """
    hit = _CACHE.get(factors)
    if hit is not None or factors in _CACHE:
        return hit
    res = _canonical_monomial(factors)
    if len(_CACHE) > _CACHE_LIMIT:
        _CACHE.clear()
    _CACHE[factors] = res
    return res


def _canonical_monomial(factors: tuple):
    mn = metric_normalize_monomial(factors)
    if mn is None:
        return None
    mult, facs = mn
    for f in facs:
        if _has_tracefree_trace(f):
            return None
    if not facs:
        return mult, ()
    counts: dict[str, int] = {}
    for i in term_indices(facs):
        counts[i.name] = counts.get(i.name, 0) + 1
    dummies = {k for k, v in counts.items() if v == 2}
    free_names = {k for k, v in counts.items() if v == 1}

    order = sorted(range(len(facs)), key=lambda j: (facs[j].symbol, len(facs[j].derivs)))
    types = [(facs[j].symbol, len(facs[j].derivs)) for j in order]
    images = [_images(f) for f in facs]

    # state: (remaining frozenset, dmap, sign, chosen list of (factor idx, slots))
    states = [(frozenset(range(len(facs))), {}, 1, ())]
    for step, typ in enumerate(types):
        best = None
        cands = []
        for rem, dmap, sign, chosen in states:
            for j in rem:
                f = facs[j]
                if (f.symbol, len(f.derivs)) != typ:
                    continue
                for slots, s in images[j]:
                    code, nm = _encode(f, slots, dmap, dummies)
                    if best is None or code < best:
                        best = code
                        cands = [(rem - {j}, nm, sign * s, chosen + ((j, slots),))]
                    elif code == best:
                        cands.append((rem - {j}, nm, sign * s, chosen + ((j, slots),)))
        uniq: dict = {}
        for rem, nm, sign, chosen in cands:
            key = (rem, tuple(sorted(nm.items())))
            old = uniq.get(key)
            if old is None:
                uniq[key] = (rem, nm, sign, chosen)
            elif old[2] != sign:
                return None
        states = list(uniq.values())
    _, dmap, sign, chosen = states[0]
    # all surviving states share the full encoding; signs must agree
    for st in states[1:]:
        if st[2] != sign:
            return None
    return mult * sign, _rename_canonical(facs, chosen, dmap, free_names)


def _rename_canonical(facs, chosen, dmap, free_names) -> tuple:
    fam_of: dict[str, object] = {}
    for f in facs:
        for i in f.derivs + f.slots:
            fam_of[i.name] = i.family
    gens = {fam: fresh_names(fam, set(free_names)) for fam in (SPACETIME, TRACTOR, GAUGE)}
    names = {}
    for orig, _k in sorted(dmap.items(), key=lambda kv: kv[1]):
        names[orig] = next(gens[fam_of[orig]])
    seen_once: set = set()
    out = []
    for j, slots in chosen:
        f = facs[j]

        def fix(i: Index) -> Index:
            if i.name not in names:
                return i
            nm = names[i.name]
            if i.family == GAUGE:
                return Index(nm, i.family, i.up)
            first = nm not in seen_once
            seen_once.add(nm)
            return Index(nm, i.family, first)

        derivs = tuple(fix(i) for i in f.derivs)
        sl = tuple(fix(i) for i in slots)
        out.append(Factor(f.symbol, derivs, sl))
    return tuple(out)


def canonicalize_terms(terms: Iterable[Term]) -> dict:
    """Canonicalize and collect; returns ``{factors: coefficient}``."""
    acc: dict = {}
    for t in terms:
        r = canonical_monomial(t.factors)
        if r is None:
            continue
        m, cf = r
        c = t.coef * m
        acc[cf] = acc.get(cf, 0) + c
    return {k: v for k, v in acc.items() if v != 0}


def canonicalize_dict(d: dict) -> dict:
    return canonicalize_terms(Term(c, k) for k, c in d.items())


def canonicalize(e: Expr) -> Expr:
    """Canonical form of ``e``: every term canonical, like terms collected.

    The result is a fixed point of ``canonicalize``.
    """
    return Expr.from_dict(dict(sorted(canonicalize_terms(e.terms).items())))


def metric_normalize(e: Expr) -> Expr:
    """Absorb contracted metrics and evaluate metric traces, nothing else."""
    out = []
    for t in e.terms:
        r = metric_normalize_monomial(t.factors)
        if r is None:
            continue
        m, facs = r
        out.append(Term(t.coef * m, facs))
    return Expr(out)


def equivalent(e1: Expr, e2: Expr) -> bool:
    """True iff ``canonicalize(e1 - e2)`` is zero.

    Raises
    ------
    ExprError
        If the two expressions have different free indices or weights.
    """
    from .expr import monomial_weight

    if e1.terms and e2.terms:
        if e1.free != e2.free:
            raise ExprError("free-index mismatch between compared expressions")
        if monomial_weight(e1.terms[0].factors) != monomial_weight(e2.terms[0].factors):
            raise ExprError("weight mismatch between compared expressions")
    return not canonicalize_terms((e1 - e2).terms)


def monomial_free(factors: tuple) -> frozenset:
    return free_of(factors)
