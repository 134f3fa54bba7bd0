from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confym.conformal_ops import d_A, delta_A, form, q2, scalar_times
from confym.numeric.evaluate import evaluate
from confym.numeric.geometry import GeometryPoint, InsufficientDegree, geometry_at
from confym.numeric.jets import JetSpace, mpq
from confym.numeric.metricspec import (MetricSpec, SpecError, compile_expr, conformal_rescale,
                                       conformally_flat_metric, random_periodic_metric,
                                       random_rational_metric)
from confym.numeric.oracle import (action_integral, action_invariance, integrate_density,
                                   rational_jet_zero, torus_grid)
from confym.parser import parse

DIM = 6
ORIGIN = [0] * DIM


def _flat(dim: int = DIM, **extra) -> MetricSpec:
    metric = [["1" if i == j else "0" for j in range(dim)] for i in range(dim)]
    return MetricSpec.from_dict({"dim": dim, "metric": metric, **extra})


# -- jets ----------------------------------------------------------------------

_NV, _DEG = 2, 3
_SIZE = JetSpace(_NV, _DEG).sizes[_DEG]
_coeffs = st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=5),
                   min_size=_SIZE, max_size=_SIZE)


def _jet(js: JetSpace, cs) -> np.ndarray:
    return js.convert([[mpq(c.numerator, c.denominator) for c in cs]])


@settings(max_examples=40, deadline=None)
@given(_coeffs, _coeffs, _coeffs)
def test_exact_jet_ring_laws(a, b, c):
    js = JetSpace(_NV, _DEG, exact=True)
    A, B, C = _jet(js, a), _jet(js, b), _jet(js, c)
    assert np.array_equal(js.mul(A, B), js.mul(B, A))
    assert np.array_equal(js.mul(js.mul(A, B), C), js.mul(A, js.mul(B, C)))
    assert np.array_equal(js.mul(A, B + C), js.mul(A, B) + js.mul(A, C))


@settings(max_examples=40, deadline=None)
@given(_coeffs, _coeffs, st.integers(min_value=0, max_value=_NV - 1))
def test_exact_leibniz_rule(a, b, v):
    js = JetSpace(_NV, _DEG, exact=True)
    A, B = _jet(js, a), _jet(js, b)
    lhs = js.deriv(js.mul(A, B), v)
    low = _DEG - 1
    rhs = js.mul(js.deriv(A, v), js.truncate(B, low)) + js.mul(js.truncate(A, low), js.deriv(B, v))
    assert np.array_equal(lhs, rhs)


@settings(max_examples=30, deadline=None)
@given(_coeffs)
def test_exact_reciprocal(a):
    js = JetSpace(_NV, _DEG, exact=True)
    A = _jet(js, a)
    A[..., 0] = mpq(1) + abs(A[..., 0])
    one = js.mul(A, js.reciprocal(A))
    assert one[..., 0] == 1 and all(x == 0 for x in one[..., 1:].flat)


def test_reciprocal_of_zero_constant_term():
    js = JetSpace(1, 2, exact=True)
    with pytest.raises(ZeroDivisionError):
        js.reciprocal(js.variable(0, 0, 2))


def test_float_trigonometric_identity():
    js = JetSpace(2, 4)
    x = js.variable(0, 0.3, 4) + js.mul(js.variable(1, 0.2, 4), js.variable(1, 0.2, 4))
    s, c = js.sin(x), js.cos(x)
    one = js.mul(s, s) + js.mul(c, c)
    assert abs(one[..., 0] - 1).max() < 1e-14
    assert abs(one[..., 1:]).max() < 1e-13


def test_exact_inverse_matrix():
    js = JetSpace(2, 3, exact=True)
    m = random_rational_metric(6, 2, active=(0, 1))
    g = GeometryPoint(m, [ORIGIN], max_degree=3).node(("g",), 3)
    ginv = js.inverse_matrix(g)
    prod = js.contract("ij,jk->ik", g, ginv)
    for i in range(6):
        for k in range(6):
            assert prod[i, k, 0, 0] == int(i == k)
            assert all(x == 0 for x in prod[i, k, 0, 1:])


# -- geometry --------------------------------------------------------------------


def test_flat_metric_has_no_curvature():
    gp = geometry_at(_flat(), ORIGIN, order=1)
    for sym in ("R", "Ric", "P", "J", "C", "A", "B"):
        assert all(x == 0 for x in np.ravel(gp.tensor(sym)))


def test_conformally_flat_metric_has_no_weyl_curvature():
    m = conformally_flat_metric(DIM, 4)
    gp = GeometryPoint(m, [ORIGIN, [mpq(1, 2)] + [0] * 5], max_degree=3)
    assert all(x == 0 for x in np.ravel(gp.tensor("C")))
    assert any(x != 0 for x in np.ravel(gp.tensor("P")))


def test_rescaled_flat_metric_has_no_weyl_curvature_in_float_mode():
    m = conformal_rescale(_flat(), "sin(x1)/3 + x2*x3/5")
    gp = GeometryPoint(m, [[0.2, -0.1, 0.4, 0, 0, 0]], max_degree=3, exact=False)
    assert np.abs(gp.tensor("C")).max() < 1e-12
    assert np.abs(gp.tensor("P")).max() > 1e-3


def test_zero_conformal_factor_is_identity():
    m = random_rational_metric(DIM, 6, active=(0, 1, 2))
    same = conformal_rescale(m, "0")
    a = GeometryPoint(m, [ORIGIN], max_degree=3)
    b = GeometryPoint(same, [ORIGIN], max_degree=3)
    for sym in ("g", "R", "P", "A"):
        assert np.array_equal(a.tensor(sym), b.tensor(sym))


def test_first_bianchi_identity_exact():
    m = random_rational_metric(DIM, 8)
    gp = GeometryPoint(m, [ORIGIN, [mpq(1, 2), 0, mpq(-1, 2), 0, 1, 0]], max_degree=2)
    R = gp.tensor("R")
    cyc = R + np.einsum("bcad...->abcd...", R) + np.einsum("cabd...->abcd...", R)
    assert all(x == 0 for x in np.ravel(cyc))


@pytest.mark.parametrize("text, metrics, points", [
    ("nd[^a](P[a,b]) - nd[b](J[])", 3, 3),
    ("B[a,b] - nd[^c](A[a,c,b]) - P[^c,^d]*C[c,a,d,b]", 3, 3),
    # the full 3 x 3 run of this one belongs to the rule-soundness harness
    ("nd[^a](B[a,c]) + 2*P[^e,^k]*A[e,k,c]", 1, 1),
])
def test_identities_hold_on_rational_jets(text, metrics, points):
    ok, info = rational_jet_zero(parse(text), DIM, n_metrics=metrics, n_points=points)
    assert ok, info


def test_rational_jets_detect_a_false_identity():
    ok, info = rational_jet_zero(parse("nd[^a](B[a,c]) + 3*P[^e,^k]*A[e,k,c]"), DIM,
                                 n_metrics=1, n_points=1)
    assert not ok and "residual" in info


def test_insufficient_degree():
    with pytest.raises(InsufficientDegree):
        geometry_at(random_rational_metric(DIM, 1), ORIGIN, order=3, jet_degree=2)
    gp = GeometryPoint(random_rational_metric(DIM, 1), [ORIGIN], max_degree=2)
    with pytest.raises(InsufficientDegree):
        evaluate(parse("B[a,b]"), gp)
    with pytest.raises(InsufficientDegree):
        rational_jet_zero(parse("B[a,b]"), DIM, jet_degree=2)


def test_unbound_symbols():
    gp = GeometryPoint(random_rational_metric(DIM, 1), [ORIGIN], max_degree=2)
    with pytest.raises(SpecError):
        evaluate(parse("O[a,b]"), gp)
    with pytest.raises(SpecError):
        evaluate(parse("om[a,b,^%G,%H]"), gp)
    with pytest.raises(SpecError):
        evaluate(parse("Ups[]"), gp)


# -- divergence theorem --------------------------------------------------------


def _coordinate_divergence(gp: GeometryPoint) -> np.ndarray:
    """``∂_i T^i + T^i ∂_i(det g) / (2 det g)`` for ``T^i = g^ij P_jk g^kl ∂_l J``.

    Uses ``∂_i log det g = g^jk ∂_i g_jk`` and plain coordinate derivatives only.
    """
    js = gp.js

    def partials(T):
        return np.stack([js.deriv(T, gp.active.index(x)) if x in gp.active
                         else js.zeros(T.shape[:-2], js.deg(T) - 1) for x in range(gp.dim)])

    g, ginv = gp.node(("g",), 2), gp.node(("ginv",), 1)
    dJ = partials(gp.node(("J",), 2))
    T = js.contract("ij,j->i", ginv, js.contract("jk,k->j", gp.node(("P",), 1),
                                                  js.contract("kl,l->k", ginv, dJ)))
    div = sum(partials(T)[i, i] for i in range(gp.dim))
    dlog = js.contract("jk,ijk->i", js.truncate(ginv, 0), js.truncate(partials(g), 0))
    return js.value(div) + js.value(js.contract("i,i->", js.truncate(T, 0), dlog)) * mpq(1, 2)


_DIVERGENCE = "nd[^i](P[i,^k])*nd[k](J[]) + P[i,^k]*nd[^i,k](J[])"


def test_divergence_formula_exact_on_rational_metrics():
    for seed in range(3):
        m = random_rational_metric(DIM, 20 + seed, active=(0, 1, 2))
        gp = GeometryPoint(m, [ORIGIN, [mpq(1, 2), mpq(-1, 2), 1, 0, 0, 0]], max_degree=4)
        covariant, _ = evaluate(parse(_DIVERGENCE), gp)
        assert np.array_equal(covariant, _coordinate_divergence(gp))


def test_divergence_integrates_to_zero_on_torus():
    for seed in range(3):
        m = random_periodic_metric(DIM, 30 + seed)
        total, scale = integrate_density(parse(_DIVERGENCE), m, 40)
        assert scale > 1e-3
        assert abs(total) / scale < 1e-10


def test_quadrature_converges_spectrally():
    m = random_periodic_metric(DIM, 3)
    i8, i16, i32 = (integrate_density(parse("J[]"), m, N)[0] for N in (8, 16, 32))
    assert abs(i16 - i32) < 1e-3 * abs(i8 - i16)


def test_torus_grid_requires_periodicity():
    with pytest.raises(SpecError):
        torus_grid(random_rational_metric(DIM, 1), 8)


# -- action ------------------------------------------------------------------------


def test_action_of_flat_connection_is_zero():
    zero = [[["0", "0"], ["0", "0"]] for _ in range(DIM)]
    m = random_periodic_metric(DIM, 5).with_fields(potential=zero)
    assert action_integral(m, 8) == 0.0


def test_action_needs_potential_and_ups():
    m = random_periodic_metric(DIM, 5)
    with pytest.raises(SpecError):
        action_integral(m, 8)
    with pytest.raises(SpecError):
        action_invariance(random_periodic_metric(DIM, 5, gauge_rank=2), (8, 16))


def test_q2_transformation_law_componentwise():
    F = form("F[a,b,^%G,%H]", "ab", "^%G,%H")
    Q = q2(F)
    corr = delta_A(d_A(scalar_times(parse("Ups[]"), F))).renamed(Q.form_indices)
    m = random_rational_metric(DIM, 5, active=(0, 1), gauge_rank=2, ups=True)
    pts = [[0.1, 0.2, 0, 0, 0, 0], [-0.3, 0.1, 0, 0, 0, 0]]
    base, _ = evaluate(Q.e + corr.e.scale(2), GeometryPoint(m, pts, max_degree=5, exact=False))
    hat, _ = evaluate(Q.e, GeometryPoint(conformal_rescale(m), pts, max_degree=5, exact=False))
    ups, _ = evaluate(parse("Ups[]"), GeometryPoint(m, pts, max_degree=1, exact=False))
    # weight -2 components pick up exp(-2 Ups) in the rescaled metric's own scale
    assert np.abs(hat - base * np.exp(-2 * ups)).max() < 1e-10 * np.abs(base).max()
    assert np.abs(hat - base).max() > 1e-3


# -- metric specifications -----------------------------------------------------


def test_metric_spec_json_round_trip(tmp_path):
    m = random_periodic_metric(DIM, 9, gauge_rank=2, ups=True)
    path = tmp_path / "m.json"
    path.write_text(m.to_json())
    again = MetricSpec.load(path)
    assert again.to_dict() == m.to_dict()
    assert json.loads(again.to_json()) == json.loads(m.to_json())


def test_random_generators_are_seeded():
    assert random_periodic_metric(DIM, 4).to_dict() == random_periodic_metric(DIM, 4).to_dict()
    assert random_rational_metric(DIM, 4).to_dict() != random_rational_metric(DIM, 5).to_dict()


def test_rescale_preserves_periodicity():
    m = random_periodic_metric(DIM, 2, ups=True)
    assert conformal_rescale(m).periodic == m.periodic


@pytest.mark.parametrize("bad", [
    {"dim": 2, "metric": [["1", "x1"], ["x2", "1"]]},
    {"dim": 2, "metric": [["1", "0"]]},
    {"dim": 2, "metric": [["1", "0"], ["0", "1"]], "colour": "red"},
    {"metric": [["1"]]},
    {"dim": 1, "metric": [["tan(x1)"]]},
    {"dim": 1, "metric": [["x1**0.5"]]},
    {"dim": 1, "metric": [["y1"]]},
    {"dim": 1, "metric": [["1"]], "periodic": [True, False]},
])
def test_spec_errors(bad):
    with pytest.raises(SpecError):
        MetricSpec.from_dict(bad)


def test_spec_error_on_invalid_json():
    with pytest.raises(SpecError):
        MetricSpec.from_json("{not json")


def test_compile_expr_reports_coordinates():
    ce = compile_expr("exp(x1) + x3*pi", 4)
    assert ce.coords == frozenset({0, 2}) and ce.uses_float
    assert not compile_expr("1/2*x4**3", 4).uses_float


def test_singular_metric():
    m = MetricSpec.from_dict({"dim": 2, "metric": [["x1", "0"], ["0", "1"]]})
    with pytest.raises(SpecError):
        geometry_at(m, [0, 0])
