"""Curvature rewrite rules, basis changes and zero decisions.

Two bases are used.  The *Weyl-Schouten* basis (``C``, ``P``, ``J``, ``A``,
``B`` and the metric) is the presentation basis: expressions are simplified
there with cheap oriented rules (divergences of ``C``, ``P`` and ``A``, the
trace of ``P``).  The *Riemann* basis (``R`` and the metric) is the decision
basis: every multi-term identity between Riemann monomials follows from the
generators handled by :mod:`confym.closure`.

:func:`is_zero_identity` combines both: simplify, then run the closure on
what is left, then fall back to the exact rational-jet oracle.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable

from .calculus import Definition, commute_to_order, nabla_chain, substitute
from .canon import _images, canonicalize, canonicalize_terms
from .closure import RelationClosure, split_by_n_powers
from .coeff import N, RatFunc, specialize
from .expr import SPACETIME, Expr, ExprError, Factor, Index, Term, fresh_names, term_indices
from .parser import parse
from .printer import to_text

# ---------------------------------------------------------------------------
# basis definitions


def _d(symbol: str, placeholders: str, body: str, note: str) -> Definition:
    return Definition(symbol, tuple(placeholders), parse(body, check=False), note)


RIEMANN_DEFS: dict[str, Definition] = {
    "Ric": _d("Ric", "ab", "R[^c,a,c,b]", "Ricci contraction"),
    "Sc": _d("Sc", "", "R[^c,^d,c,d]", "scalar curvature"),
    "J": _d("J", "", "(1)/(2*n-2)*R[^c,^d,c,d]", "J = Sc / (2(n-1))"),
    "P": _d("P", "ab", "(1)/(n-2)*R[^c,a,c,b] - (1)/(2*n^2-6*n+4)*R[^c,^d,c,d]*g[a,b]",
            "P = (Ric - J g) / (n-2)"),
    "A": _d("A", "abc", "nd[b](P[c,a]) - nd[c](P[b,a])", "Cotton tensor"),
    "C": _d("C", "abcd", "R[a,b,c,d] + g[c,b]*P[a,d] - g[c,a]*P[b,d] + g[d,a]*P[b,c] - g[d,b]*P[a,c]",
            "Weyl tensor"),
    "B": _d("B", "ab", "nd[^c](A[a,c,b]) + P[^c,^d]*C[c,a,d,b]", "Bach tensor"),
    "Ups1": _d("Ups1", "a", "nd[a](Ups[])", "gradient of Ups"),
}

WS_DEFS: dict[str, Definition] = {
    "R": _d("R", "abcd", "C[a,b,c,d] - g[c,b]*P[a,d] + g[c,a]*P[b,d] - g[d,a]*P[b,c] + g[d,b]*P[a,c]",
            "Riemann tensor in terms of Weyl and Schouten"),
    "Ric": _d("Ric", "ab", "(n-2)*P[a,b] + J[]*g[a,b]", "Ricci tensor"),
    "Sc": _d("Sc", "", "(2*n-2)*J[]", "scalar curvature"),
    "Ups1": RIEMANN_DEFS["Ups1"],
}

BASES = {"riemann": RIEMANN_DEFS, "weyl_schouten": WS_DEFS}


def substitute_basis(e: Expr, basis: str = "weyl_schouten") -> Expr:
    """Rewrite ``e`` in the ``"riemann"`` or ``"weyl_schouten"`` basis.

    The result is canonicalized.  In the Riemann basis only ``R`` and the
    metric remain among the curvature symbols.
    """
    try:
        defs = BASES[basis]
    except KeyError:
        raise ValueError(f"unknown basis {basis!r}; use 'riemann' or 'weyl_schouten'") from None
    return canonicalize(substitute(e, defs))


# ---------------------------------------------------------------------------
# oriented rules in the Weyl-Schouten basis


@dataclass(frozen=True)
class Rule:
    """A named oriented rewrite.

    ``lhs`` and ``rhs`` are representative instances used for documentation
    and for the soundness harness; ``apply`` performs the rewrite on a
    canonical monomial and returns replacement terms or ``None``.
    """

    name: str
    group: str
    lhs: str
    rhs: str
    guard: str
    apply: Callable = field(compare=False, repr=False)

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("apply")
        return d


def _inner_contraction(f: Factor) -> int | None:
    """Slot contracted with the innermost derivative of ``f``, if any."""
    if not f.derivs:
        return None
    e = f.derivs[-1]
    for k, s in enumerate(f.slots):
        if s.name == e.name:
            return k
    return None


def _image_with(f: Factor, name: str, pos: int):
    for slots, sign in _images(f):
        if slots[pos].name == name:
            return slots, sign
    return None


def _fresh(factors: tuple, k: int) -> list[str]:
    used = {i.name for i in term_indices(factors)}
    gen = fresh_names(SPACETIME, used)
    return [next(gen) for _ in range(k)]


def _rule_div_weyl(factors: tuple, fi: int):
    f = factors[fi]
    if f.symbol != "C" or _inner_contraction(f) is None:
        return None
    e = f.derivs[-1]
    slots, sign = _image_with(f, e.name, 0)
    new = Factor("A", f.derivs[:-1], slots[1:])
    return [Term((N - 3) * sign, (new,))]


def _rule_div_schouten(factors: tuple, fi: int):
    f = factors[fi]
    if f.symbol != "P" or _inner_contraction(f) is None:
        return None
    e = f.derivs[-1]
    slots, _ = _image_with(f, e.name, 0)
    return [Term(Fraction(1), (Factor("J", f.derivs[:-1] + (slots[1],), ()),))]


def _rule_div_cotton(factors: tuple, fi: int):
    f = factors[fi]
    if f.symbol != "A":
        return None
    k = _inner_contraction(f)
    if k is None:
        return None
    if k == 0:
        return []
    e = f.derivs[-1]
    slots, sign = _image_with(f, e.name, 1)
    a, b = slots[0], slots[2]
    c, d = _fresh(factors, 2)
    outer = f.derivs[:-1]
    bach = nabla_chain((Factor("B", (), (a, b)),), outer, Fraction(sign))
    pc = nabla_chain(
        (Factor("P", (), (Index(c, SPACETIME, True), Index(d, SPACETIME, True))),
         Factor("C", (), (Index(c, SPACETIME, False), a, Index(d, SPACETIME, False), b))),
        outer, Fraction(-sign))
    return bach + pc


def _rule_div_bach(factors: tuple, fi: int):
    f = factors[fi]
    if f.symbol != "B" or _inner_contraction(f) is None:
        return None
    e = f.derivs[-1]
    slots, _ = _image_with(f, e.name, 0)
    c, d = _fresh(factors, 2)
    body = (Factor("A", (), (Index(c, SPACETIME, False), Index(d, SPACETIME, False), slots[1])),
            Factor("P", (), (Index(c, SPACETIME, True), Index(d, SPACETIME, True))))
    return nabla_chain(body, f.derivs[:-1], 4 - N)


def _rule_trace_schouten(factors: tuple, fi: int):
    f = factors[fi]
    if f.symbol != "P" or f.slots[0].name != f.slots[1].name:
        return None
    return [Term(Fraction(1), (Factor("J", f.derivs, ()),))]


RULES: list[Rule] = [
    Rule("trace-schouten", "traces", "P[^a,a]", "J[]", "slots of P contracted with each other",
         _rule_trace_schouten),
    Rule("div-weyl", "bianchi", "nd[^a](C[a,b,c,d])", "(n-3)*A[b,c,d]",
         "innermost derivative contracted with a slot of C", _rule_div_weyl),
    Rule("div-schouten", "bianchi", "nd[^a](P[a,b])", "nd[b](J[])",
         "innermost derivative contracted with a slot of P", _rule_div_schouten),
    Rule("div-cotton", "bianchi", "nd[^a](A[a,b,c])", "0",
         "innermost derivative contracted with the first slot of A", _rule_div_cotton),
    Rule("bach", "bianchi", "nd[^c](A[a,c,b])", "B[a,b] - P[^c,^d]*C[c,a,d,b]",
         "innermost derivative contracted with the second or third slot of A", _rule_div_cotton),
    Rule("div-bach", "bianchi", "nd[^a](B[a,b])", "(4-n)*P[^c,^d]*A[c,d,b]",
         "innermost derivative contracted with a slot of B", _rule_div_bach),
]


def _apply_rules_once(d: dict, rules: list[Rule]) -> tuple[dict, bool]:
    out: list[Term] = []
    changed = False
    seen_fns = []
    for r in rules:
        if r.apply not in seen_fns:
            seen_fns.append(r.apply)
    for factors, c in d.items():
        rep = None
        for fi in range(len(factors)):
            for fn in seen_fns:
                rep = fn(factors, fi)
                if rep is not None:
                    break
            if rep is not None:
                rest = factors[:fi] + factors[fi + 1:]
                for t in rep:
                    out.append(Term(c * t.coef, rest + t.factors))
                changed = True
                break
        if rep is None:
            out.append(Term(c, factors))
    return canonicalize_terms(out), changed


def ws_simplify(e: Expr, groups: tuple = ("traces", "bianchi"), max_rounds: int = 50) -> Expr:
    """Canonical Weyl-Schouten form with the oriented rules applied to a fixed point."""
    e = substitute(e, WS_DEFS)
    rules = [r for r in RULES if r.group in groups]
    d = canonicalize_terms(e.terms)
    for _ in range(max_rounds):
        d, changed = _apply_rules_once(d, rules)
        if not changed:
            break
    return Expr.from_dict(dict(sorted(d.items())))


def dump_rules() -> str:
    """JSON description of the rule set (deterministic)."""
    payload = {
        "rules": [r.to_json() for r in RULES],
        "bases": {
            name: [{"symbol": dfn.symbol, "placeholders": "".join(dfn.placeholders),
                    "body": to_text(dfn.body), "note": dfn.note}
                   for _, dfn in sorted(defs.items())]
            for name, defs in sorted(BASES.items())
        },
        "closure_generators": [
            "first Bianchi identity of R",
            "second Bianchi identity of R at the innermost derivative",
            "d_A-closedness of F and omc at the innermost derivative",
            "commutation of adjacent covariant derivatives",
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# zero decisions


@dataclass
class CheckReport:
    """Outcome of a check.

    ``status`` is ``"pass"``, ``"fail"`` or ``"undecided"``; ``certificate``
    is ``"symbolic"``, ``"rational-jet"``, ``"float-quadrature"`` or
    ``"none"``.
    """

    name: str
    status: str
    certificate: str
    residual_repr: str
    elapsed_s: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_json(self) -> dict:
        return {"name": self.name, "status": self.status, "certificate": self.certificate,
                "residual_repr": self.residual_repr, "elapsed_s": round(self.elapsed_s, 6)}


def _specialize_dict(d: dict, dim) -> dict:
    if dim is None:
        return d
    out = {}
    for k, c in d.items():
        v = specialize(c, dim) if isinstance(c, RatFunc) else Fraction(c)
        if v:
            out[k] = v
    return out


def specialize_expr(e: Expr, dim) -> Expr:
    """Substitute ``n = dim`` in every coefficient."""
    if dim is None:
        return e
    return Expr.from_dict(dict(sorted(_specialize_dict(canonicalize_terms(e.terms), dim).items())))


def riemann_targets(e: Expr, dim) -> list[dict]:
    """Canonical Riemann-basis vectors whose joint vanishing is equivalent to ``e == 0``."""
    d = canonicalize_terms(substitute(e, RIEMANN_DEFS).terms)
    d = _specialize_dict(d, dim)
    if dim is not None:
        return [d] if d else []
    return split_by_n_powers(d)


def symbolic_zero(e: Expr, dim=None, closure: RelationClosure | None = None,
                  budget: float = 300.0, max_monomials: int = 60000,
                  use_rules: bool = True) -> tuple[bool | None, Expr]:
    """Symbolic decision of ``e == 0``.

    Returns ``(verdict, residual)`` where ``verdict`` is ``True`` (proved),
    ``False`` (the relation closure saturated without a proof) or ``None``
    (budget exhausted); ``residual`` is the simplified Weyl-Schouten form.
    With ``use_rules=False`` the oriented rules are skipped and the proof
    runs in the Riemann basis from the closure generators alone, which is
    how the rules themselves are certified.
    """
    if not use_rules:
        simp = specialize_expr(canonicalize(e), dim)
        targets = riemann_targets(simp, dim)
        if not targets:
            return True, Expr()
        cl = closure or RelationClosure(max_monomials=max_monomials, time_budget=budget)
        return cl.prove_zero(targets)[0], simp
    simp = specialize_expr(ws_simplify(e), dim)
    if not simp.terms:
        return True, simp
    targets = riemann_targets(simp, dim)
    if not targets:
        return True, Expr()
    cl = closure or RelationClosure(max_monomials=max_monomials, time_budget=budget)
    verdict, _ = cl.prove_zero(targets)
    return verdict, simp


def is_zero_identity(e: Expr, dim=None, name: str = "identity", numeric: bool = True,
                     budget: float = 300.0, n_metrics: int = 3, n_points: int = 3,
                     jet_degree: int | None = None, seed: int = 0) -> CheckReport:
    """Decide whether ``e`` vanishes identically.

    Parameters
    ----------
    e
        Expression to test.
    dim
        Dimension to substitute for ``n``; ``None`` keeps ``n`` generic.
    numeric
        Allow the exact rational-jet fallback when the symbolic route is
        inconclusive (it needs a concrete ``dim``).
    budget
        Wall-clock budget for the relation closure, in seconds.
    """
    t0 = time.monotonic()
    verdict, simp = symbolic_zero(e, dim, budget=budget)
    if verdict:
        return CheckReport(name, "pass", "symbolic", "0", time.monotonic() - t0)
    residual = to_text(simp)
    if numeric and dim is not None:
        from .numeric.oracle import rational_jet_zero

        ok, info = rational_jet_zero(simp, int(dim), n_metrics=n_metrics, n_points=n_points,
                                     jet_degree=jet_degree, seed=seed)
        status = "pass" if ok else "fail"
        return CheckReport(name, status, "rational-jet", "0" if ok else residual,
                           time.monotonic() - t0, info)
    status = "fail" if verdict is False else "undecided"
    return CheckReport(name, status, "none", residual, time.monotonic() - t0)


def bianchi_simplify(e: Expr, dim=None, budget: float = 60.0) -> Expr:
    """Simplify with the oriented rules; return ``0`` when the remainder is provably zero."""
    simp = specialize_expr(ws_simplify(e), dim)
    if not simp.terms:
        return simp
    verdict, _ = symbolic_zero(simp, dim, budget=budget)
    return Expr() if verdict else simp


# ---------------------------------------------------------------------------
# divergence equivalence


def divergence_relations(factors: tuple) -> list[list[Term]]:
    """``∇_a V^a`` expanded by Leibniz for each way of peeling a derivative off a monomial."""
    rels = []
    for fi, f in enumerate(factors):
        if not f.derivs:
            continue
        a = f.derivs[0]
        stripped = factors[:fi] + (Factor(f.symbol, f.derivs[1:], f.slots),) + factors[fi + 1:]
        names = [i.name for i in term_indices(stripped)]
        if names.count(a.name) != 1:
            continue
        rels.append(nabla_chain(stripped, (a,)))
    return rels


class _DivergenceClosure(RelationClosure):
    def _expand(self, mid: int) -> None:
        super()._expand(mid)
        for rel in divergence_relations(self.keys[mid]):
            d = canonicalize_terms(rel)
            if d:
                self.ech.insert(self.vector(d))


def divergence_equivalent(e1: Expr, e2: Expr, dim=None, name: str = "divergence-equivalence",
                          numeric: bool = True, budget: float = 120.0, seed: int = 0,
                          n_metrics: int = 3) -> CheckReport:
    """Decide whether the scalar densities ``e1`` and ``e2`` differ by a divergence.

    The symbolic route adds integration-by-parts relations to the closure,
    which moves derivatives between factors.  The fallback integrates the
    difference over a flat torus carrying random periodic metrics; the
    integral of a divergence vanishes there.
    """
    t0 = time.monotonic()
    diff = e1 - e2
    if diff.free if diff.terms else False:
        raise ExprError("divergence_equivalent expects scalar densities")
    simp = specialize_expr(ws_simplify(diff), dim)
    if not simp.terms:
        return CheckReport(name, "pass", "symbolic", "0", time.monotonic() - t0)
    targets = riemann_targets(simp, dim)
    cl = _DivergenceClosure(time_budget=budget)
    verdict, _ = cl.prove_zero(targets)
    if verdict:
        return CheckReport(name, "pass", "symbolic", "0", time.monotonic() - t0)
    residual = to_text(simp)
    if numeric and dim is not None:
        from .numeric.oracle import torus_zero_integral

        ok, info = torus_zero_integral(simp, int(dim), n_metrics=n_metrics, seed=seed)
        return CheckReport(name, "pass" if ok else "fail", "float-quadrature",
                           "0" if ok else residual, time.monotonic() - t0, info)
    return CheckReport(name, "fail" if verdict is False else "undecided", "none", residual,
                       time.monotonic() - t0)


__all__ = [
    "RIEMANN_DEFS", "WS_DEFS", "substitute_basis", "Rule", "RULES", "ws_simplify", "dump_rules",
    "CheckReport", "is_zero_identity", "bianchi_simplify", "divergence_equivalent",
    "commute_to_order", "symbolic_zero", "specialize_expr",
]
