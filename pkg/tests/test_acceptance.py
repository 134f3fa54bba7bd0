"""End-to-end acceptance criteria, each driven through the command line where one exists.

Every test prints a single ``criterion <n> PASS|FAIL ...`` line and asserts the
stated tolerance and time limit.  The lines are repeated in the terminal summary.
"""

from __future__ import annotations

import io
import json
import random
import time
from pathlib import Path

import numpy as np

from confym.canon import canonicalize
from confym.cli import main, rule_soundness
from confym.config import Config
from confym.expr import Expr, Term
from confym.numeric.evaluate import evaluate
from confym.numeric.geometry import GeometryPoint
from confym.numeric.jets import mpq
from confym.numeric.metricspec import random_periodic_metric, random_rational_metric
from confym.numeric.oracle import integrate_density
from confym.parser import parse

from conftest import ACCEPTANCE_LINES
from test_canon import _random_monomial, _scramble, _self_traced, brute_key, free_names
from test_numeric import _DIVERGENCE, _coordinate_divergence

REPO = Path(__file__).resolve().parent.parent


def _record(n: int, ok: bool, elapsed: float, detail: str) -> None:
    line = f"criterion {n} {'PASS' if ok else 'FAIL'} ({elapsed:.1f}s) {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def _verify(*names: str) -> tuple[int, dict[str, dict], float]:
    out = io.StringIO()
    t0 = time.monotonic()
    code = main(["verify", *names, "--report", "json"], out)
    reports = {r["name"]: r for r in json.loads(out.getvalue())["reports"]}
    return code, reports, time.monotonic() - t0


def _summary(reports: dict[str, dict]) -> str:
    return ", ".join(f"{k}={r['status']}/{r['certificate']}" for k, r in sorted(reports.items()))


def test_criterion_1_conformal_action_density():
    code, reports, dt = _verify("eq-conformal")
    ok = code == 0 and reports["eq-conformal"]["certificate"] == "symbolic" and dt < 60
    _record(1, ok, dt, _summary(reports))
    assert ok


def test_criterion_2_simplified_action():
    from confym.verify.catalog import run_check

    code, reports, dt = _verify("action-simplified")
    r = reports["action-simplified"]
    if r["certificate"] == "float-quadrature":
        detail = run_check("action-simplified").details
        ok = code == 0 and detail["max_relative"] < 1e-8 and len(detail["runs"]) >= 3
    else:
        ok = code == 0 and r["certificate"] == "symbolic"
    ok = ok and dt < 300
    _record(2, ok, dt, _summary(reports))
    assert ok


def test_criterion_3_figure_term_lists():
    names = ("fig1", "fig2", "eq-jomega", "eq-fourth", "eq-fifth")
    code, reports, dt = _verify(*names)
    ok = code == 0 and all(reports[n]["certificate"] == "symbolic" for n in names)
    _record(3, ok, dt, _summary(reports))
    assert ok


def test_criterion_4_term_groups_vanish():
    names = ("group-xy", "group-xx", "group-yz", "group-zz")
    code, reports, dt = _verify(*names)
    exact = {"symbolic", "rational-jet"}
    ok = code == 0 and all(reports[n]["certificate"] in exact for n in names) and dt < 600
    _record(4, ok, dt, _summary(reports))
    assert ok


def test_criterion_5_obstruction_tensor():
    from confym.verify.catalog import run_check

    code, reports, dt = _verify("theorem-obstruction")
    r = run_check("theorem-obstruction", Config(jet_degree=7))
    runs = r.details["numeric_runs"]
    worst = max(max(x["symmetry"], x["trace"]) for x in runs)
    ok = (code == 0 and reports["theorem-obstruction"]["certificate"] == "symbolic"
          and r.details["parts"]["conformally-flat"] and len(runs) >= 3 and worst < 1e-8
          and dt < 120)
    _record(5, ok, dt, f"{_summary(reports)}, symmetry/trace max relative {worst:.1e}")
    assert ok


def test_criterion_6_propositions():
    names = ("prop-3.3", "prop-3.4", "prop-5.2")
    code, reports, dt = _verify(*names)
    ok = code == 0 and all(reports[n]["certificate"] == "symbolic" for n in names)
    _record(6, ok, dt, _summary(reports))
    assert ok


def test_criterion_7_dimension_four_bach():
    from confym.verify.catalog import run_check

    code, reports, dt = _verify("dim4-bach")
    parts = run_check("dim4-bach").details["parts"]
    ok = code == 0 and reports["dim4-bach"]["certificate"] == "symbolic" and all(parts.values())
    _record(7, ok, dt, f"{_summary(reports)}, parts {sorted(k for k, v in parts.items() if v)}")
    assert ok


def test_criterion_8_action_invariance_on_torus():
    out = io.StringIO()
    t0 = time.monotonic()
    code = main(["numeric", "action-invariance", "--metric", str(REPO / "torus1.json"),
                 "--seed", "42", "--report", "json"], out)
    dt = time.monotonic() - t0
    r = json.loads(out.getvalue())
    fine = max(r["details"]["grids"])
    residual = r["details"][f"residual_{fine}"]
    ok = code == 0 and residual < 1e-6 and dt < 600
    _record(8, ok, dt, f"torus1.json grids {r['details']['grids']} residual {residual:.2e}")
    assert ok


def _canon_properties(samples: int = 150) -> tuple[int, int]:
    rng = random.Random(2024)
    checked = mismatches = 0
    while checked < samples:
        t1 = _random_monomial(rng)
        if _self_traced(t1):
            continue
        if rng.random() < 0.5:
            s, t2 = _scramble(rng, t1)
            s *= rng.choice((1, -1))
        else:
            t2, s = _random_monomial(rng), rng.choice((1, -1))
            if _self_traced(t2) or free_names(t1) != free_names(t2):
                continue
        k1, k2 = brute_key(t1), brute_key(t2)
        if k1 is None or k2 is None:
            brute_zero = k1 is None and k2 is None
        else:
            brute_zero = k1[0] == k2[0] and k1[1] == s * k2[1]
        e = Expr([Term(1, t1), Term(-s, t2)])
        once = canonicalize(e)
        if (once == Expr()) != brute_zero or canonicalize(once) != once:
            mismatches += 1
        checked += 1
    return checked, mismatches


def _divergence_theorem() -> tuple[bool, float]:
    exact = True
    for seed in range(3):
        m = random_rational_metric(6, 20 + seed, active=(0, 1, 2))
        gp = GeometryPoint(m, [[0] * 6, [mpq(1, 2), mpq(-1, 2), 1, 0, 0, 0]], max_degree=4)
        covariant, _ = evaluate(parse(_DIVERGENCE), gp)
        exact = exact and bool(np.all(covariant - _coordinate_divergence(gp) == 0))
    worst = 0.0
    for seed in range(3):
        total, scale = integrate_density(parse(_DIVERGENCE), random_periodic_metric(6, 30 + seed), 40)
        worst = max(worst, abs(total) / scale)
    return exact, worst


def test_criterion_9_property_suites():
    t0 = time.monotonic()
    checked, mismatches = _canon_properties()
    rules = rule_soundness(Config())
    exact, worst = _divergence_theorem()
    dt = time.monotonic() - t0
    ok = mismatches == 0 and rules.passed and exact and worst < 1e-10
    _record(9, ok, dt, f"canon {checked - mismatches}/{checked}, rules {rules.status} "
                       f"({len(rules.details['rules'])}), divergence exact={exact} "
                       f"float={worst:.1e}")
    assert ok
