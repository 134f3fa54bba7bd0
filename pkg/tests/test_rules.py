from __future__ import annotations

import json

import pytest

from confym.calculus import commute_to_order
from confym.canon import canonicalize
from confym.expr import Expr, ExprError, weight_of
from confym.parser import parse
from confym.printer import to_text
from confym.rules import (RULES, bianchi_simplify, divergence_equivalent, dump_rules,
                          is_zero_identity, substitute_basis, ws_simplify)
from confym.symbols import TABLE, SymmetrySpec, declare

DIV_BACH = "nd[^a](B[a,c]) + 2*P[^e,^k]*A[e,k,c]"
ZERO_DENSITY = "0*J[]*J[]*J[]"


def _vector():
    if "vt" not in TABLE.names():
        declare("vt", (("s", True),), 0, SymmetrySpec())


# -- commutation --------------------------------------------------------------


def test_commute_vector_gives_riemann():
    _vector()
    got = canonicalize(commute_to_order(parse("nd[b,a](vt[^c]) - nd[a,b](vt[^c])")))
    # (∇_a∇_b - ∇_b∇_a) v^c = R_ab^c_d v^d, so the sorted difference is minus that
    assert got == canonicalize(parse("-R[a,b,^c,d]*vt[^d]"))


def test_commute_gauge_section_gives_field_strength():
    got = canonicalize(commute_to_order(parse("nd[b,a](sec[^%B]) - nd[a,b](sec[^%B])")))
    assert got == canonicalize(parse("-F[a,b,^%B,%E]*sec[^%E]"))


def test_commute_density_is_flat():
    assert canonicalize(commute_to_order(parse("nd[b,a](Ups[]) - nd[a,b](Ups[])"))) == Expr()


def test_commute_sorts_derivative_strings():
    got = commute_to_order(parse("nd[c,b,a](J[])"))
    for t in got.terms:
        for f in t.factors:
            names = [i.name for i in f.derivs]
            assert names == sorted(names)


# -- basis changes ------------------------------------------------------------


def test_ricci_in_weyl_schouten_basis():
    assert substitute_basis(parse("Ric[a,b]")) == canonicalize(parse("(n-2)*P[a,b] + J[]*g[a,b]"))


def test_ricci_round_trip_through_riemann():
    back = substitute_basis(substitute_basis(parse("Ric[a,b]"), "riemann"), "weyl_schouten")
    assert ws_simplify(back - parse("Ric[a,b]")) == Expr()


def test_bach_in_riemann_basis():
    got = substitute_basis(parse("B[a,b]"), "riemann")
    syms = {f.symbol for t in got.terms for f in t.factors}
    assert syms <= {"R", "g"}
    again = substitute_basis(got, "weyl_schouten")
    assert is_zero_identity(again - parse("B[a,b]"), None, numeric=False).passed


def test_weyl_vanishes_without_curvature():
    got = substitute_basis(parse("C[a,b,c,d]"), "riemann")
    # every term carries a Riemann factor, so flat data gives zero
    assert all(any(f.symbol == "R" for f in t.factors) for t in got.terms)


def test_unknown_basis():
    with pytest.raises(ValueError):
        substitute_basis(parse("P[a,b]"), "ricci")


# -- Bianchi-type simplification ---------------------------------------------


@pytest.mark.parametrize("text", [
    "R[a,b,c,d] + R[b,c,a,d] + R[c,a,b,d]",
    "nd[^a](P[a,b]) - nd[b](J[])",
    "nd[^a](A[a,b,c])",
])
def test_bianchi_simplify_to_zero(text):
    assert bianchi_simplify(parse(text)) == Expr()


def test_bianchi_simplify_is_idempotent():
    e = parse("nd[^a](C[a,b,c,d]) + A[b,c,d] + nd[b](P[c,d])")
    once = bianchi_simplify(e)
    assert bianchi_simplify(once) == once


# -- zero decisions -----------------------------------------------------------


def test_bach_divergence_identity_in_dimension_six():
    r = is_zero_identity(parse(DIV_BACH), 6)
    assert r.passed and r.certificate == "symbolic"


def test_bach_divergence_residual_at_general_dimension():
    r = is_zero_identity(parse(DIV_BACH), None, numeric=False)
    assert r.status == "fail"
    # the residual is (6-n) P^ek A_ekc
    residual = parse(r.residual_repr)
    assert len(residual.terms) == 1
    assert is_zero_identity(residual + parse("(n-6)*P[^e,^k]*A[e,k,c]"), None, numeric=False).passed


def test_trace_of_schouten_divergence_general_dimension():
    r = is_zero_identity(parse("nd[^a](P[a,b]) - nd[b](J[])"), None)
    assert r.passed and r.certificate == "symbolic"


def test_nonzero_identity_fails_with_rational_jets():
    r = is_zero_identity(parse("P[a,^e]*P[e,b]"), 6, budget=5)
    assert r.status == "fail"
    assert r.certificate in ("rational-jet", "none")


# -- divergence equivalence ---------------------------------------------------


def test_action_densities_are_divergence_equivalent():
    e1 = parse("4*A[a,b,c]*nd[^b](P[^a,^c]) - J[]*C[a,b,c,d]*C[^a,^b,^c,^d] "
               "+ 4*C[a,b,c,d]*nd[^d,^b](P[^a,^c]) + 4*P[a,b]*C[^a,c,d,e]*C[^b,^c,^d,^e]")
    e2 = parse("8*A[a,b,c]*nd[^c](P[^a,^b]) - J[]*C[a,b,c,d]*C[^a,^b,^c,^d] "
               "+ 4*P[a,b]*C[^a,c,d,e]*C[^b,^c,^d,^e]")
    r = divergence_equivalent(e1, e2, 6)
    assert r.passed


@pytest.mark.parametrize("text", [
    "2*nd[^i](J[])*nd[i](J[])*J[] + J[]*J[]*nd[^i,i](J[])",
    "nd[a](P[^b,^c])*A[b,c,^a] + P[^b,^c]*nd[a](A[b,c,^a])",
])
def test_explicit_divergences_are_equivalent_to_zero(text):
    r = divergence_equivalent(parse(text), parse(ZERO_DENSITY), 6)
    assert r.passed and r.certificate == "symbolic"


def test_quadrature_fallback_certifies_a_divergence():
    text = "nd[a](P[^b,^c])*A[b,c,^a] + P[^b,^c]*nd[a](A[b,c,^a])"
    r = divergence_equivalent(parse(text), parse(ZERO_DENSITY), 6, budget=0)
    assert r.passed and r.certificate == "float-quadrature"
    assert r.details["max_relative"] < 1e-8


def test_j_cubed_is_not_a_divergence():
    r = divergence_equivalent(parse("J[]*J[]*J[]"), parse(ZERO_DENSITY), 6)
    assert r.status == "fail"
    assert r.certificate == "float-quadrature"
    assert r.details["max_relative"] > 1e-3


def test_divergence_equivalent_rejects_tensors():
    with pytest.raises(ExprError):
        divergence_equivalent(parse("P[a,b]"), parse("P[a,b]*J[]*J[]"), 6)


# -- rule registry ------------------------------------------------------------


def test_rules_preserve_free_indices_and_weight():
    for rule in RULES:
        lhs, rhs = parse(rule.lhs), parse(rule.rhs)
        if rhs.terms:
            assert lhs.free == rhs.free, rule.name
            assert weight_of(lhs) == weight_of(rhs), rule.name


def test_rules_hold_symbolically_from_closure_generators():
    from confym.rules import symbolic_zero

    for rule in RULES:
        ok, res = symbolic_zero(parse(rule.lhs) - parse(rule.rhs), None, use_rules=False)
        assert ok, (rule.name, to_text(res))


def test_dump_rules_is_deterministic_json():
    text = dump_rules()
    assert text == dump_rules()
    payload = json.loads(text)
    names = [r["name"] for r in payload["rules"]]
    assert names == [r.name for r in RULES]
    assert set(payload["bases"]) == {"riemann", "weyl_schouten"}
    for r in payload["rules"]:
        assert set(r) == {"name", "group", "lhs", "rhs", "guard"}
