from __future__ import annotations

import pytest

from confym.calculus import Definition, commute_to_order, substitute
from confym.canon import canonicalize
from confym.conformal_ops import (FormExpr, action_density, bracket, d_A, delta_A, form,
                                  hat_transform, interior_ups, p_hash, pairing, q2, rename_free)
from confym.expr import Expr, ExprError
from confym.parser import parse
from confym.rules import divergence_equivalent, is_zero_identity
from confym.tractor import divergence_formula, tractor_reduce

GAUGE_VALUES = "^%G,%H"


def _gauge(symbol: str) -> FormExpr:
    return form(f"{symbol}[a,b,^%G,%H]", "ab", GAUGE_VALUES)


def _omega() -> FormExpr:
    return form("Omega[a,b,^D,E]", "ab", "^D,E")


# -- forms --------------------------------------------------------------------


def test_form_rejects_non_antisymmetric_expression():
    with pytest.raises(ExprError):
        form("P[a,b]", "ab")


def test_d_of_a_section_is_its_derivative():
    d = d_A(form("sec[^%B]", "", "^%B"))
    (a,) = d.form_indices
    assert canonicalize(d.e) == canonicalize(parse(f"nd[{a}](sec[^%B])"))


def test_gauge_curvature_is_closed():
    assert is_zero_identity(d_A(_gauge("F")).e, None, numeric=False).passed


def test_d_squared_vanishes_on_functions():
    dd = d_A(d_A(form("Ups[]", "")))
    assert canonicalize(commute_to_order(dd.e)) == Expr()


def test_d_squared_on_a_section_is_curvature_action():
    dd = d_A(d_A(form("sec[^%B]", "", "^%B")), "ab")
    assert is_zero_identity(dd.e - parse("F[a,b,^%B,%E]*sec[^%E]"), None, numeric=False).passed


def test_delta_of_gauge_curvature():
    dF = delta_A(_gauge("F"))
    assert dF.degree == 1 and dF.weight == -2
    (b,) = dF.form_indices
    assert canonicalize(dF.e) == canonicalize(parse(f"-nd[^i](F[i,{b},^%G,%H])"))


def test_delta_of_tractor_curvature_matches_divergence_formula():
    dW = delta_A(_omega())
    (b,) = dW.form_indices
    # delta Omega_b = -nabla^a Omega_ab
    want = rename_free(divergence_formula(), {"c": b})
    assert is_zero_identity(tractor_reduce(dW.e) + want, None, numeric=False).passed


def test_delta_needs_positive_degree():
    with pytest.raises(ExprError):
        delta_A(form("Ups[]", ""))


# -- P#, Q2 and the pairing ---------------------------------------------------


def test_p_hash_arity_guard():
    with pytest.raises(ExprError):
        p_hash(d_A(form("Ups[]", "")))


def test_p_hash_on_einstein_data_scales_by_two_lambda():
    om = _gauge("om")
    einstein = {"P": Definition("P", ("a", "b"), parse("3*g[a,b]"), "P = 3 g")}
    got = canonicalize(substitute(p_hash(om).e, einstein))
    assert got == canonicalize(om.e.scale(6))


def test_q2_on_flat_data_is_d_delta():
    om = _gauge("om")
    rest = canonicalize(q2(om).e - d_A(delta_A(om), om.form_indices).e)
    assert rest.terms
    assert all({f.symbol for f in t.factors} & {"P", "J"} for t in rest.terms)


def test_q2_guards():
    with pytest.raises(ExprError):
        q2(delta_A(_gauge("om")))


def test_pairing_has_inverse_factorial():
    got = pairing(_gauge("F"), _gauge("F"), dim=4)
    assert all(t.coef == pytest.approx(0.5) for t in got.terms)


def test_pairing_is_symmetric():
    om, eta = _gauge("om"), _gauge("eta")
    assert canonicalize(pairing(om, eta, 4)) == canonicalize(pairing(eta, om, 4))


def test_pairing_weight_guard():
    with pytest.raises(ExprError):
        pairing(_gauge("om"), _gauge("eta"), dim=6)


def test_tractor_curvature_self_pairing_closed_form():
    got = tractor_reduce(pairing(_omega(), _omega(), dim=4))
    assert got == canonicalize(parse("-1/2*C[a,b,c,d]*C[^a,^b,^c,^d]"))


def test_tractor_curvature_self_pairing_on_rational_jets():
    from confym.numeric.oracle import rational_jet_zero

    raw = pairing(_omega(), _omega(), dim=4) + parse("1/2*C[a,b,c,d]*C[^a,^b,^c,^d]")
    ok, _ = rational_jet_zero(raw, 6, n_metrics=3, n_points=2)
    assert ok


def test_d_and_delta_are_adjoint_up_to_divergence():
    om, eta = _gauge("om"), _gauge("eta")
    lhs = pairing(om, delta_A(d_A(eta)), 6)
    rhs = pairing(d_A(om), d_A(eta), 6)
    assert divergence_equivalent(lhs, rhs, 6).passed


# -- action and Euler-Lagrange operator ---------------------------------------


def test_action_density_of_zero_field():
    zero = FormExpr(Expr(), ("a", "b"), _gauge("F").value_indices, 0, check=False)
    assert canonicalize(action_density(zero)) == Expr()


def test_action_density_weight():
    from confym.expr import weight_of

    assert weight_of(canonicalize(action_density(_gauge("F")))) == -6


def test_euler_lagrange_operator_vanishes_on_flat_data():
    from confym.conformal_ops import D_operator

    out = D_operator(_gauge("F"))
    assert out.degree == 1 and out.weight == -4
    assert all(any(f.symbol == "F" for f in t.factors) for t in out.e.terms)


def test_bracket_is_difference_of_compositions():
    from confym.conformal_ops import bracket_parts

    s = delta_A(_gauge("F"))
    left, right = bracket_parts(s, _gauge("F"))
    both = bracket(s, _gauge("F"))
    assert both.degree == 1 and left.form_indices == both.form_indices
    assert canonicalize(both.e - left.e + right.e) == Expr()
    assert canonicalize(left.e) != canonicalize(right.e)


# -- conformal change ---------------------------------------------------------


def test_hat_schouten():
    got = canonicalize(hat_transform(parse("P[a,b]")))
    want = parse("P[a,b] - nd[a](Ups1[b]) + Ups1[a]*Ups1[b] - 1/2*g[a,b]*Ups1[^c]*Ups1[c]")
    assert got == canonicalize(want)


def test_hat_j():
    got = canonicalize(hat_transform(parse("J[]")))
    want = parse("J[] - nd[^a](Ups1[a]) + (1-1/2*n)*Ups1[a]*Ups1[^a]")
    assert got == canonicalize(want)


def test_hat_derivative_of_weight_zero_two_form():
    base = parse("nd[a](om[b,c,^%G,%H])")
    got = canonicalize(hat_transform(base) - base)
    # (w - 2) Ups_a om_bc - Ups_b om_ac - Ups_c om_ba + g_ab Ups^d om_dc + g_ac Ups^d om_bd, w = 0
    want = parse("-2*Ups1[a]*om[b,c,^%G,%H] - Ups1[b]*om[a,c,^%G,%H] - Ups1[c]*om[b,a,^%G,%H] "
                 "+ g[a,b]*Ups1[^d]*om[d,c,^%G,%H] + g[a,c]*Ups1[^d]*om[b,d,^%G,%H]")
    assert got == canonicalize(want)


def test_hat_delta_of_two_form():
    d = delta_A(_gauge("om"))
    (c,) = d.form_indices
    got = canonicalize(hat_transform(d.e) - d.e)
    # (4 - n - w) Ups^a om_ac with w = 0
    assert got == canonicalize(parse(f"(4-n)*Ups1[^a]*om[a,{c},^%G,%H]"))


def test_hat_transform_rejects_splitting_operators():
    with pytest.raises(ExprError):
        hat_transform(parse("Y[^D]*Y[D]"))


def test_hat_is_identity_at_zero_ups():
    base = q2(_gauge("omc")).e
    got = hat_transform(base)
    no_ups = Expr([t for t in got.terms if not any(f.symbol == "Ups1" for f in t.factors)])
    assert canonicalize(no_ups - base) == Expr()


def test_interior_product_lowers_degree_and_weight():
    i = interior_ups(_gauge("om"))
    assert i.degree == 1 and i.weight == -2
