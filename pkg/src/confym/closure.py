"""Linear relation closure for multi-term curvature identities.

Monoterm symmetries are handled by canonicalization.  The remaining linear
identities between curvature monomials come from a finite list of local
generators: the first and second Bianchi identities of the Riemann tensor,
the Bianchi identity of a closed bundle-valued 2-form, and commutation of
adjacent covariant derivatives.  Starting from the monomials of a target
expression, :class:`RelationClosure` instantiates every generator at every
site of every monomial it has seen, canonicalizes the resulting relations
and keeps them in row-echelon form over Q.  The target is zero modulo the
identities exactly when it reduces to zero against the accumulated rows.
The search proceeds in breadth-first levels; each level is followed by a
membership test so that easy identities stop early.
"""

from __future__ import annotations

import time
from fractions import Fraction
from typing import Iterable

from .canon import canonicalize_terms
from .coeff import RatFunc, _pdivmod, _pgcd, _pmul, numerator_denominator
from .calculus import swap_relation
from .expr import Factor, Term
from .symbols import TABLE


def bianchi_relations(factors: tuple) -> list[list[Term]]:
    """Instances of the Bianchi-type generators at every site of a monomial."""
    rels = []
    one = Fraction(1)
    for fi, f in enumerate(factors):
        decl = TABLE[f.symbol]
        rest_l, rest_r = factors[:fi], factors[fi + 1:]

        def put(nf: Factor) -> tuple:
            return rest_l + (nf,) + rest_r

        if decl.bianchi == "riemann":
            s0, s1, s2, s3 = f.slots
            rels.append([
                Term(one, factors),
                Term(one, put(Factor("R", f.derivs, (s1, s2, s0, s3)))),
                Term(one, put(Factor("R", f.derivs, (s2, s0, s1, s3)))),
            ])
            if f.derivs:
                e = f.derivs[-1]
                outer = f.derivs[:-1]
                rels.append([
                    Term(one, factors),
                    Term(one, put(Factor("R", outer + (s0,), (s1, e, s2, s3)))),
                    Term(one, put(Factor("R", outer + (s1,), (e, s0, s2, s3)))),
                ])
                rels.append([
                    Term(one, factors),
                    Term(one, put(Factor("R", outer + (s2,), (s0, s1, s3, e)))),
                    Term(one, put(Factor("R", outer + (s3,), (s0, s1, e, s2)))),
                ])
        elif decl.bianchi == "closed" and f.derivs:
            e = f.derivs[-1]
            outer = f.derivs[:-1]
            s0, s1 = f.slots[:2]
            tail = f.slots[2:]
            rels.append([
                Term(one, factors),
                Term(one, put(Factor(f.symbol, outer + (s0,), (s1, e) + tail))),
                Term(one, put(Factor(f.symbol, outer + (s1,), (e, s0) + tail))),
            ])
    return rels


def commutation_relations(factors: tuple) -> list[list[Term]]:
    rels = []
    for fi, f in enumerate(factors):
        for pos in range(len(f.derivs) - 1):
            rels.append(swap_relation(factors, fi, pos))
    return rels


def all_relations(factors: tuple) -> list[list[Term]]:
    return bianchi_relations(factors) + commutation_relations(factors)


class Echelon:
    """Sparse row-echelon basis over Q with pivots on the largest column."""

    def __init__(self):
        self.rows: dict[int, dict[int, Fraction]] = {}

    def reduce(self, vec: dict[int, Fraction]) -> dict[int, Fraction]:
        v = dict(vec)
        rows = self.rows
        while True:
            cols = [c for c in v if c in rows]
            if not cols:
                return v
            c = max(cols)
            f = v[c]
            for k, x in rows[c].items():
                nv = v.get(k, 0) - f * x
                if nv:
                    v[k] = nv
                else:
                    v.pop(k, None)

    def insert(self, vec: dict[int, Fraction]) -> bool:
        v = self.reduce(vec)
        if not v:
            return False
        p = max(v)
        inv = 1 / v[p]
        self.rows[p] = {k: x * inv for k, x in v.items()}
        return True

    def __len__(self):
        return len(self.rows)


class RelationClosure:
    """Breadth-first closure of relation instances around a target.

    Parameters
    ----------
    max_monomials
        Abort (undecided) once this many distinct monomials have been seen.
    max_levels
        Maximum number of breadth-first expansion rounds.
    time_budget
        Wall-clock budget in seconds.
    """

    def __init__(self, max_monomials: int = 60000, max_levels: int = 12, time_budget: float = 600.0):
        self.max_monomials = max_monomials
        self.max_levels = max_levels
        self.time_budget = time_budget
        self.ids: dict[tuple, int] = {}
        self.keys: list[tuple] = []
        self.expanded: set[int] = set()
        self.ech = Echelon()
        self.stats: dict = {}

    def _id(self, key: tuple) -> int:
        i = self.ids.get(key)
        if i is None:
            i = len(self.keys)
            self.ids[key] = i
            self.keys.append(key)
        return i

    def vector(self, d: dict) -> dict[int, Fraction]:
        return {self._id(k): Fraction(c) for k, c in d.items()}

    def _expand(self, mid: int) -> None:
        self.expanded.add(mid)
        for rel in all_relations(self.keys[mid]):
            d = canonicalize_terms(rel)
            if d:
                self.ech.insert(self.vector(d))

    def reduce_dict(self, d: dict) -> dict:
        """Reduce a rational ``{factors: coef}`` against the current rows."""
        r = self.ech.reduce(self.vector(d))
        return {self.keys[i]: c for i, c in r.items()}

    def prove_zero(self, targets: Iterable[dict]) -> tuple[bool | None, list[dict]]:
        """Decide whether every target lies in the span of the relations.

        Returns ``(True, [])`` when all reduce to zero, ``(False, residuals)``
        when the closure saturated without proving it, and ``(None,
        residuals)`` when a budget ran out first.
        """
        t0 = time.monotonic()
        vecs = [self.vector(t) for t in targets]
        frontier = sorted({i for v in vecs for i in v})
        level = 0
        while True:
            res = [self.ech.reduce(v) for v in vecs]
            if not any(res):
                self.stats = {"levels": level, "monomials": len(self.keys), "rows": len(self.ech)}
                return True, []
            if not frontier:
                self.stats = {"levels": level, "monomials": len(self.keys), "rows": len(self.ech)}
                return False, [{self.keys[i]: c for i, c in r.items()} for r in res]
            if level >= self.max_levels or len(self.keys) > self.max_monomials or \
                    time.monotonic() - t0 > self.time_budget:
                self.stats = {"levels": level, "monomials": len(self.keys), "rows": len(self.ech),
                              "aborted": True}
                return None, [{self.keys[i]: c for i, c in r.items()} for r in res]
            before = len(self.keys)
            for mid in frontier:
                if mid not in self.expanded:
                    self._expand(mid)
                if len(self.keys) > self.max_monomials or time.monotonic() - t0 > self.time_budget:
                    break
            frontier = [i for i in range(len(self.keys)) if i not in self.expanded]
            if len(self.keys) == before and all(i in self.expanded for i in range(len(self.keys))):
                frontier = []
            level += 1


def split_by_n_powers(d: dict) -> list[dict]:
    """Write a Q(n)-coefficient vector as a list of Q-vectors.

    The vector is multiplied by the common denominator and split by powers
    of ``n``.  Relation generators have rational coefficients, so the
    original vector is in their span iff every component is.
    """
    common: tuple = (Fraction(1),)
    for c in d.values():
        if isinstance(c, RatFunc):
            g = _pgcd(common, c.den)
            common = _pdivmod(_pmul(common, c.den), g)[0]
    comps: dict[int, dict] = {}
    for k, c in d.items():
        num, den = numerator_denominator(c)
        scaled = _pdivmod(_pmul(num, common), den)[0]
        for p, a in enumerate(scaled):
            if a:
                comps.setdefault(p, {})[k] = a
    return [comps[p] for p in sorted(comps)]
