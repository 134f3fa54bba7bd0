from __future__ import annotations

import json

import numpy as np
import pytest

from confym.canon import canonicalize
from confym.config import Config, ConfigError
from confym.conformal_ops import rename_free
from confym.expr import Expr
from confym.parser import parse
from confym.rules import is_zero_identity
from confym.verify import catalog
from confym.verify import figures as fig
from confym.verify.catalog import (CATALOG, CheckError, ObstructionUnavailable, check_names,
                                   emit_obstruction, extract_obstruction, run_check, run_checks,
                                   term_groups)


@pytest.fixture(scope="module")
def obstruction() -> Expr:
    report = run_check("theorem-obstruction")
    assert report.passed, report.residual_repr
    return report.details["obstruction"]


@pytest.mark.parametrize("name", sorted(set(CATALOG) - {"theorem-obstruction"}))
def test_catalog_check_passes_symbolically(name):
    r = run_check(name)
    assert r.passed, r.residual_repr
    assert r.certificate == "symbolic"
    assert r.to_json()["residual_repr"] == "0"


def test_catalog_names():
    expected = {"eq-conformal", "action-simplified", "fig-ddeltaomega", "fig1", "fig2", "eq-jomega",
                "eq-fourth", "eq-fifth", "group-xy", "group-xx", "group-yz", "group-zz",
                "theorem-obstruction", "prop-3.3", "prop-3.4", "prop-5.2", "identities",
                "dim4-bach"}
    assert set(check_names()) == expected
    assert check_names() == sorted(expected)


def test_unknown_check_name():
    with pytest.raises(CheckError):
        run_check("fig9")
    with pytest.raises(CheckError):
        run_checks(["fig1", "nope"])


# -- negative controls --------------------------------------------------------


@pytest.mark.parametrize("name, attr", [
    ("fig1", "DELTA_DDELTA_OMEGA"),
    ("fig2", "DELTA_PHASH_OMEGA"),
    ("eq-jomega", "DELTA_J_OMEGA"),
    ("fig-ddeltaomega", "DDELTA_OMEGA"),
])
def test_dropped_term_breaks_figure_match(monkeypatch, name, attr):
    monkeypatch.setattr(fig, attr, getattr(fig, attr)[1:])
    r = run_check(name)
    assert r.status == "fail"
    assert r.residual_repr != "0"


def test_wrong_coefficient_breaks_group_check(monkeypatch):
    first_key, first_terms = fig.GROUP_XX[0]
    monkeypatch.setattr(fig, "GROUP_XX", [(first_key, ["2*" + first_terms[0]] + first_terms[1:])]
                        + fig.GROUP_XX[1:])
    assert run_check("group-xx").status == "fail"


def test_crashing_check_is_reported_as_failure(monkeypatch):
    def boom(cfg):
        raise RuntimeError("broken")

    monkeypatch.setitem(CATALOG, "fig2", boom)
    r = run_check("fig2")
    assert r.status == "fail" and r.certificate == "none"
    assert "broken" in r.residual_repr


# -- operator groups -------------------------------------------------------------


def test_operator_terms_split_into_known_groups():
    groups = term_groups()
    assert set(groups) <= set(catalog.GROUP_KEYS)
    assert "YY" not in groups
    assert groups["ZZ"].terms and groups["XZ"].terms


# -- the obstruction tensor -------------------------------------------------------


def test_theorem_check_reports_every_part(obstruction):
    r = run_check("theorem-obstruction")
    parts = r.details["parts"]
    for key in ("partition", "transcription", "factored", "final", "decomposition", "symmetric",
                "trace-free", "curvature-factors", "conformally-flat", "float-symmetry-trace"):
        assert parts[key] is True, key
    assert r.details["max_relative"] < 1e-8
    assert len(r.details["numeric_runs"]) >= 3


def test_obstruction_is_symmetric(obstruction):
    swapped = rename_free(obstruction, {"c": "d", "d": "c"})
    assert is_zero_identity(obstruction - swapped, 6, numeric=False).passed


def test_obstruction_is_trace_free(obstruction):
    trace = canonicalize(rename_free(obstruction, {"d": "c"}, flip=frozenset({"d"})))
    assert is_zero_identity(trace, 6, numeric=False).passed


def test_obstruction_terms_carry_curvature(obstruction):
    for t in obstruction.terms:
        assert {f.symbol for f in t.factors} & {"C", "A", "B"}


def test_obstruction_vanishes_on_conformally_flat_metric(obstruction):
    from confym.numeric.evaluate import evaluate
    from confym.numeric.geometry import GeometryPoint
    from confym.numeric.metricspec import conformally_flat_metric

    m = conformally_flat_metric(6, 11, active=(0, 1, 2))
    vals, _ = evaluate(obstruction, GeometryPoint(m, [[0] * 6], max_degree=7))
    assert all(v == 0 for v in np.ravel(vals))


def test_final_figure_bracket_is_sixteen_times_obstruction(obstruction):
    from confym.tractor import tractor_reduce

    O_ci = rename_free(obstruction, {"d": "j"}, flip=frozenset({"d"}))
    image = (parse(catalog.XZ_SPLIT) * O_ci).scale(16)
    residual = tractor_reduce(fig.grouped(fig.GROUP_XZ_FINAL) - image, 6)
    assert is_zero_identity(residual, 6, numeric=False).passed


def test_extraction_is_cached(obstruction):
    assert extract_obstruction() is extract_obstruction()


# -- emission ---------------------------------------------------------------------


def test_emit_requires_theorem_check(monkeypatch):
    monkeypatch.setattr(catalog, "_OBSTRUCTION", {})
    with pytest.raises(ObstructionUnavailable):
        emit_obstruction("text")


def test_emit_text_starts_with_laplacian_of_bach(obstruction):
    text = emit_obstruction("text")
    assert text.startswith("O[c,d] = 1/16*nd[^i,i](B[c,d])")
    body = text.split("=", 1)[1]
    assert canonicalize(parse(body)) == canonicalize(obstruction)
    assert emit_obstruction("text") == text


def test_emit_latex(obstruction):
    tex = emit_obstruction("latex")
    assert tex.startswith("\\mathcal{O}_{cd} = \\frac{1}{16} \\nabla^{i}\\nabla_{i}B_{cd}")


def test_emit_json(obstruction):
    payload = json.loads(emit_obstruction("json"))
    assert payload["tensor"] == "O" and payload["indices"] == ["c", "d"]
    assert payload["dimension"] == 6
    assert len(payload["terms"]) == len(obstruction.terms)
    assert payload["terms"][0] == {"coefficient": "1/16", "monomial": "nd[^i,i](B[c,d])"}
    rebuilt = sum((parse(f"{t['coefficient']}*{t['monomial']}") for t in payload["terms"]), Expr())
    assert canonicalize(rebuilt) == canonicalize(obstruction)


def test_emit_unknown_format(obstruction):
    with pytest.raises(ValueError):
        emit_obstruction("yaml")


# -- running several checks -----------------------------------------------------


def test_run_checks_sorted_and_deduplicated():
    reports = run_checks(["fig2", "dim4-bach", "fig2", "eq-jomega"])
    assert [r.name for r in reports] == ["dim4-bach", "eq-jomega", "fig2"]
    assert all(r.passed for r in reports)


def test_run_checks_in_parallel_matches_serial():
    names = ["prop-3.3", "fig2", "dim4-bach", "identities"]
    serial = run_checks(names, Config(parallelism=1))
    parallel = run_checks(names, Config(parallelism=2))
    strip = [{k: v for k, v in r.to_json().items() if k != "elapsed_s"} for r in serial]
    assert strip == [{k: v for k, v in r.to_json().items() if k != "elapsed_s"} for r in parallel]


def test_identities_at_symbolic_dimension():
    r = run_check("identities", Config(dimension=None))
    assert r.passed


@pytest.mark.parametrize("kwargs", [
    {"dimension": 5}, {"jet_degree": 1}, {"tolerance": 0.0}, {"report_format": "xml"},
    {"parallelism": 0},
])
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        Config(**kwargs)
