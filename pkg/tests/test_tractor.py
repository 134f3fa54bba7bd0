from __future__ import annotations

import numpy as np
import pytest

from confym.canon import canonicalize
from confym.coeff import N
from confym.expr import Expr
from confym.parser import parse
from confym.rules import is_zero_identity
from confym.tractor import (divergence_formula, nabla_metric_residual, nabla_splitting,
                            tractor_contract, tractor_curvature, tractor_divergence,
                            tractor_reduce)


def _contract(text: str) -> Expr:
    return canonicalize(tractor_contract(parse(text)))


def test_y_against_x_is_one():
    assert _contract("Y[B]*X[^B]") == Expr.scalar(1)


def test_z_against_z_is_metric():
    assert _contract("Z[B,a]*Z[^B,c]") == parse("g[a,c]")


@pytest.mark.parametrize("text", [
    "X[B]*X[^B]", "Y[B]*Y[^B]", "Z[B,a]*X[^B]", "Z[B,a]*Y[^B]",
])
def test_vanishing_contractions(text):
    assert _contract(text) == Expr()


def test_trace_of_splitting_metric_is_dimension():
    assert _contract("Z[B,a]*Z[^B,c]*g[^a,^c]") == Expr.scalar(N)


@pytest.mark.parametrize("text, expected", [
    ("nd[a](X[^B])", "Z[^B,a]"),
    ("nd[a](Y[^B])", "P[a,^c]*Z[^B,c]"),
    ("nd[a](Z[^B,c])", "-P[a,c]*X[^B] - g[a,c]*Y[^B]"),
    ("nd[a,b](X[^B])", "-P[a,b]*X[^B] - g[a,b]*Y[^B]"),
])
def test_connection_on_splitting_operators(text, expected):
    assert canonicalize(nabla_splitting(parse(text))) == canonicalize(parse(expected))


def test_no_derivative_rests_on_splitting_operators():
    got = nabla_splitting(parse("nd[a,b,c](Z[^B,d])*Y[B]"))
    for t in got.terms:
        for f in t.factors:
            assert not (f.symbol in ("X", "Y", "Z") and f.derivs)


def test_tractor_curvature_passes_its_consistency_check():
    omega = tractor_curvature(check=True)
    assert canonicalize(omega) == canonicalize(parse(
        "Z[^D,^c]*Z[E,^e]*C[a,b,c,e] - X[^D]*Z[E,^e]*A[e,a,b] + X[E]*Z[^D,^e]*A[e,a,b]"))


def test_tractor_curvature_is_antisymmetric():
    assert tractor_reduce(parse("Omega[a,b,^D,E] + Omega[b,a,^D,E]")) == Expr()


def test_tractor_curvature_vanishes_on_flat_data():
    for t in tractor_curvature().terms:
        assert {f.symbol for f in t.factors} & {"C", "A"}


def test_commutator_on_standard_tractor_is_curvature():
    res = tractor_reduce(parse("nd[a,b](Y[^D]) - nd[b,a](Y[^D]) - Omega[a,b,^D,E]*Y[^E]"))
    # the remainder is the definition of the Cotton tensor
    assert is_zero_identity(res, None, numeric=False).passed


def test_divergence_at_general_dimension():
    want = parse("(n-4)*Z[^D,^d]*Z[E,^e]*A[c,d,e] - X[^D]*Z[E,^e]*B[e,c] + X[E]*Z[^D,^e]*B[e,c]")
    got = tractor_divergence(None)
    assert is_zero_identity(got - want, None, numeric=False).passed


def test_divergence_in_dimension_four_is_pure_bach():
    got = tractor_divergence(4)
    assert got.terms
    for t in got.terms:
        syms = {f.symbol for f in t.factors}
        assert "B" in syms and "A" not in syms


def test_divergence_in_dimension_six_has_coefficient_two():
    got = tractor_divergence(6)
    a_terms = [t for t in got.terms if any(f.symbol == "A" for f in t.factors)]
    assert len(a_terms) == 1
    assert a_terms[0].coef == 2


def test_divergence_formula_specializes_consistently():
    assert divergence_formula(6) == tractor_divergence(6)


def test_tractor_metric_is_parallel():
    assert canonicalize(nabla_metric_residual()) == Expr()


def test_numeric_splitting_components_obey_contraction_table():
    from confym.numeric.evaluate import evaluate
    from confym.numeric.geometry import GeometryPoint
    from confym.numeric.metricspec import random_rational_metric

    gp = GeometryPoint(random_rational_metric(6, 3), [[0] * 6, [1, 0, 0, 0, 0, 0]], max_degree=2)
    yx, _ = evaluate(parse("Y[B]*X[^B]"), gp)
    assert all(v == 1 for v in yx)
    xx, _ = evaluate(parse("X[B]*X[^B]"), gp)
    assert all(v == 0 for v in xx)
    zz, _ = evaluate(parse("Z[B,a]*Z[^B,c]"), gp)
    g, _ = evaluate(parse("g[a,c]"), gp)
    assert np.array_equal(zz, g)
