"""Named reproducible checks of the tractor computation and its supporting identities.

Each entry of :data:`CATALOG` maps a check name to a function of a
:class:`~confym.config.Config` returning an outcome; :func:`run_check`
wraps it into a timed :class:`~confym.rules.CheckReport`.  The
``theorem-obstruction`` check also extracts the obstruction tensor, which
:func:`emit_obstruction` prints.
"""

from __future__ import annotations

import functools
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from ..calculus import Definition
from ..canon import canonicalize
from ..config import Config
from ..conformal_ops import (D_operator, action_density, bracket, bracket_parts, d_A, delta_A, form,
                             hat_transform, interior_ups, p_hash, pairing, q2, rename_free,
                             scalar_times)
from ..expr import Expr, Term
from ..parser import parse
from ..printer import term_text, to_latex, to_text
from ..rules import RULES, CheckReport, divergence_equivalent, specialize_expr, symbolic_zero
from ..tractor import (divergence_formula, expand_omega, nabla_splitting, tractor_contract,
                       tractor_divergence, tractor_reduce)
from . import figures as fig


class CheckError(KeyError):
    """An unknown check name."""


class ObstructionUnavailable(RuntimeError):
    """The obstruction tensor was requested before ``theorem-obstruction`` passed."""


@dataclass
class Outcome:
    """Result of a check body, before timing is attached."""

    ok: bool
    certificate: str
    residual: str = "0"
    details: dict = field(default_factory=dict)


DIM = 6
OMEGA = "Omega[a,b,^D,E]"


def _symbolic(e: Expr, dim=DIM) -> tuple[bool, str]:
    """Symbolic zero test returning the verdict and the residual text."""
    if not e.terms:
        return True, "0"
    verdict, simp = symbolic_zero(e, dim)
    return bool(verdict), "0" if verdict else to_text(simp)


def _tractor_match(ours: Expr, ref: Expr) -> tuple[bool, str]:
    """Canonical equality of two tractor expressions after full reduction."""
    return _symbolic(tractor_reduce(ours - ref, DIM))


def _combine(parts: dict[str, tuple[bool, str]], certificate: str = "symbolic") -> Outcome:
    bad = {k: r for k, (ok, r) in parts.items() if not ok}
    residual = "; ".join(f"{k}: {r}" for k, r in bad.items()) or "0"
    return Outcome(not bad, certificate, residual, {"parts": {k: ok for k, (ok, _) in parts.items()}})


# ---------------------------------------------------------------------------
# the action density


CONFORMAL_FORM = ("4*A[a,b,c]*nd[^b](P[^a,^c]) - J[]*C[a,b,c,d]*C[^a,^b,^c,^d] "
                  "+ 4*C[a,b,c,d]*nd[^d,^b](P[^a,^c]) + 4*P[a,b]*C[^a,c,d,e]*C[^b,^c,^d,^e]")
SIMPLIFIED_FORM = ("8*A[a,b,c]*nd[^c](P[^a,^b]) - J[]*C[a,b,c,d]*C[^a,^b,^c,^d] "
                   "+ 4*P[a,b]*C[^a,c,d,e]*C[^b,^c,^d,^e]")


def check_eq_conformal(cfg: Config) -> Outcome:
    dens = tractor_reduce(action_density(form(OMEGA, "ab", "^D,E")), DIM)
    ok, res = _symbolic(dens - parse(CONFORMAL_FORM))
    return Outcome(ok, "symbolic", res, {"terms": len(dens.terms)})


def check_action_simplified(cfg: Config) -> Outcome:
    rep = divergence_equivalent(parse(CONFORMAL_FORM), parse(SIMPLIFIED_FORM), DIM,
                                seed=cfg.seed)
    return Outcome(rep.passed, rep.certificate, rep.residual_repr, rep.details)


# ---------------------------------------------------------------------------
# summands of the operator on the tractor curvature


@functools.lru_cache(maxsize=None)
def _omega_forms():
    W = form(OMEGA, "ab", "^D,E")
    return W, delta_A(W)


def check_fig_ddeltaomega(cfg: Config) -> Outcome:
    _, dW = _omega_forms()
    return _combine({"match": _tractor_match(d_A(dW, ("q", "c")).e,
                                             fig.antisym_lower(fig.DDELTA_OMEGA))})


def check_fig1(cfg: Config) -> Outcome:
    _, dW = _omega_forms()
    return _combine({"match": _tractor_match(delta_A(d_A(dW)).renamed(("c",)).e,
                                             fig.antisym_lower(fig.DELTA_DDELTA_OMEGA))})


def check_fig2(cfg: Config) -> Outcome:
    W, _ = _omega_forms()
    ours = delta_A(p_hash(W)).renamed(("c",)).e.scale(-4)
    return _combine({"match": _tractor_match(ours, fig.plain(fig.DELTA_PHASH_OMEGA))})


def check_eq_jomega(cfg: Config) -> Outcome:
    W, _ = _omega_forms()
    ours = delta_A(scalar_times(parse("J[]"), W, -2)).renamed(("c",)).e.scale(2)
    return _combine({"match": _tractor_match(ours, fig.plain(fig.DELTA_J_OMEGA))})


def check_eq_fourth(cfg: Config) -> Outcome:
    W, dW = _omega_forms()
    left, _ = bracket_parts(dW, W)
    return _combine({"match": _tractor_match(-left.renamed(("c",)).e,
                                             fig.plain(fig.QUADRATIC_LEFT))})


def check_eq_fifth(cfg: Config) -> Outcome:
    W, dW = _omega_forms()
    _, right = bracket_parts(dW, W)
    return _combine({"match": _tractor_match(right.renamed(("c",)).e,
                                             fig.plain(fig.QUADRATIC_RIGHT))})


# ---------------------------------------------------------------------------
# the operator and its term groups


@functools.lru_cache(maxsize=None)
def operator_raw() -> Expr:
    """The operator applied to the tractor curvature with splitting operators contracted.

    Only canonicalization is applied (no curvature identities), at ``n = 6``
    and with free form index ``c``; this is the form that is split into
    groups.
    """
    D = D_operator(form(OMEGA, "ab", "^D,E"))
    e = tractor_contract(nabla_splitting(expand_omega(D.e)))
    return rename_free(specialize_expr(canonicalize(e), DIM), {"b": "c"})


@functools.lru_cache(maxsize=None)
def operator_on_curvature() -> Expr:
    """:func:`operator_raw` fully reduced with the curvature identities."""
    return tractor_reduce(operator_raw(), DIM)


GROUP_KEYS = ("XY", "XX", "YZ", "ZZ", "XZ")


def _group_key(t: Term) -> str:
    return "".join(sorted(f.symbol for f in t.factors if f.symbol in ("X", "Y", "Z")))


@functools.lru_cache(maxsize=None)
def term_groups() -> dict[str, Expr]:
    """Split of :func:`operator_raw` by the splitting operators in each term."""
    groups: dict[str, list] = {}
    for t in operator_raw().terms:
        groups.setdefault(_group_key(t), []).append(t)
    return {k: Expr(v) for k, v in groups.items()}


def _partition_parts() -> dict[str, tuple[bool, str]]:
    keys = set(term_groups())
    stray = sorted(keys - set(GROUP_KEYS))
    return {"partition": (not stray, "unexpected groups " + ",".join(stray) if stray else "0")}


def _group_check(key: str, reference, reduced=None) -> Outcome:
    parts = _partition_parts()
    computed = term_groups().get(key, Expr())
    parts["transcription"] = _tractor_match(computed, fig.grouped(reference))
    final = reference if reduced is None else reduced
    if reduced is not None:
        parts["reduction"] = _tractor_match(fig.grouped(reference), fig.grouped(reduced))
    parts["zero"] = _symbolic(tractor_reduce(fig.grouped(final), DIM))
    out = _combine(parts)
    out.details["terms"] = len(computed.terms)
    return out


def check_group_xy(cfg: Config) -> Outcome:
    return _group_check("XY", fig.GROUP_XY, fig.GROUP_XY_REDUCED)


def check_group_xx(cfg: Config) -> Outcome:
    return _group_check("XX", fig.GROUP_XX)


def check_group_yz(cfg: Config) -> Outcome:
    return _group_check("YZ", fig.GROUP_YZ, fig.GROUP_YZ_REDUCED)


def check_group_zz(cfg: Config) -> Outcome:
    return _group_check("ZZ", fig.GROUP_ZZ, fig.GROUP_ZZ_REDUCED)


# ---------------------------------------------------------------------------
# the obstruction tensor


PAIRING = "Y[^E]*Z[D,d] - Y[D]*Z[^E,d]"
XZ_SPLIT = "X[E]*Z[^D,^j] - X[^D]*Z[E,^j]"


@functools.lru_cache(maxsize=None)
def extract_obstruction() -> Expr:
    """``O_cd`` as ``1/32`` of the pairing of the operator with ``Y^E Z_D^d - Y_D Z^E^d``."""
    r = operator_on_curvature()
    return tractor_reduce((parse(PAIRING) * r).scale(Fraction(1, 32)), DIM)


def _curvature_free(e: Expr) -> list[str]:
    return [to_text(Expr([t])) for t in e.terms
            if not any(f.symbol in ("C", "A", "B") for f in t.factors)]


def _numeric_obstruction(O: Expr, cfg: Config) -> tuple[dict, dict]:
    from ..numeric.geometry import GeometryPoint
    from ..numeric.evaluate import evaluate
    from ..numeric.metricspec import conformally_flat_metric, random_rational_metric

    defs = {"O": Definition("O", ("c", "d"), O)}
    flat = conformally_flat_metric(DIM, cfg.seed)
    gp = GeometryPoint(flat, [[0] * DIM], max_degree=cfg.jet_degree, exact=True)
    vals, _ = evaluate(parse("O[c,d]"), gp, defs)
    nonzero = [str(v) for v in np.ravel(vals) if v != 0]
    flat_parts = {"conformally-flat": (not nonzero, nonzero[0] if nonzero else "0")}
    runs = []
    for k in range(3):
        mseed = cfg.seed * 1000 + 100 + k
        m = random_rational_metric(DIM, mseed)
        gp = GeometryPoint(m, [[0] * DIM], max_degree=cfg.jet_degree, exact=False)
        v = evaluate(parse("O[c,d]"), gp, defs)[0][..., 0]
        tr = evaluate(parse("O[c,^c]"), gp, defs)[0][0]
        scale = float(np.abs(v).max()) or 1.0
        runs.append({"metric_seed": mseed, "symmetry": float(np.abs(v - v.T).max()) / scale,
                     "trace": abs(float(tr)) / scale})
    worst = max(max(r["symmetry"], r["trace"]) for r in runs)
    num_parts = {"float-symmetry-trace": (worst < cfg.tolerance, f"{worst:.3e}")}
    return {**flat_parts, **num_parts}, {"numeric_runs": runs, "max_relative": worst}


def check_theorem_obstruction(cfg: Config) -> Outcome:
    groups = term_groups()
    parts = _partition_parts()
    xz = groups.get("XZ", Expr())
    parts["transcription"] = _tractor_match(xz, fig.grouped(fig.GROUP_XZ))
    parts["factored"] = _tractor_match(fig.grouped(fig.GROUP_XZ), fig.grouped(fig.GROUP_XZ_FACTORED))
    parts["final"] = _tractor_match(fig.grouped(fig.GROUP_XZ_FACTORED), fig.grouped(fig.GROUP_XZ_FINAL))
    O = extract_obstruction()
    split = (parse(XZ_SPLIT) * rename_free(O, {"d": "j"}, frozenset({"d"}))).scale(16)
    parts["decomposition"] = _symbolic(tractor_reduce(operator_on_curvature() - split, DIM))
    parts["symmetric"] = _symbolic(O - rename_free(O, {"c": "d", "d": "c"}))
    parts["trace-free"] = _symbolic(parse("g[^c,^d]") * O)
    stray = _curvature_free(O)
    parts["curvature-factors"] = (not stray, "; ".join(stray) or "0")
    num_parts, info = _numeric_obstruction(O, cfg)
    parts.update(num_parts)
    out = _combine(parts)
    out.details.update(info)
    out.details["obstruction"] = O
    out.details["terms"] = len(O.terms)
    return out


# ---------------------------------------------------------------------------
# propositions


def _form(symbol: str, slots: str = "ab"):
    return form(f"{symbol}[{slots[0]},{slots[1]},^%G,%H]", slots, "^%G,%H")


def check_prop_3_3(cfg: Config) -> Outcome:
    W = _form("omc")
    Q = q2(W)
    corr = delta_A(d_A(scalar_times(parse("Ups[]"), W))).renamed(W.form_indices)
    return _combine({"transformation": _symbolic(hat_transform(Q.e) - Q.e - corr.e.scale(2))})


def check_prop_3_4(cfg: Config) -> Outcome:
    E, W = _form("eta"), _form("om")
    rep = divergence_equivalent(pairing(E, q2(W)), pairing(W, q2(E)), DIM, seed=cfg.seed)
    return Outcome(rep.passed, rep.certificate, rep.residual_repr, rep.details)


# the expansion of δδd(Υ F) into curvature and quadratic gauge terms
SUFFICES_EXPANSION = [
    "R[e,d,^d,j]*Ups1[^j]*F[^e,c,^%G,%H]", "R[e,d,^e,j]*Ups1[^d]*F[^j,c,^%G,%H]",
    "-R[e,d,^j,c]*Ups1[^d]*F[^e,j,^%G,%H]", "-1/2*R[e,d,^j,c]*Ups1[j]*F[^d,^e,^%G,%H]",
    "1/2*R[e,d,^d,j]*Ups1[c]*F[^j,^e,^%G,%H]", "1/2*R[e,d,^e,j]*Ups1[c]*F[^d,^j,^%G,%H]",
    "F[e,d,^%G,%I]*Ups1[^d]*F[^e,c,^%I,%H]", "-F[e,d,^%I,%H]*Ups1[^d]*F[^e,c,^%G,%I]",
    "1/2*F[e,d,^%G,%I]*Ups1[c]*F[^d,^e,^%I,%H]", "-1/2*F[e,d,^%I,%H]*Ups1[c]*F[^d,^e,^%G,%I]",
]


def check_prop_5_2(cfg: Config) -> Outcome:
    F = _form("F", "ac")
    lhs = delta_A(delta_A(d_A(scalar_times(parse("Ups[]"), F)))).renamed(("c",))
    br = bracket(interior_ups(F), F).renamed(("c",))
    P = [parse(t) for t in SUFFICES_EXPANSION]
    total = lambda ts: sum(ts, Expr())  # noqa: E731
    return _combine({
        "sum-zero": _symbolic(lhs.e + br.e),
        "expansion": _symbolic(lhs.e - total(P)),
        "curvature-terms-cancel": _symbolic(total(P[:6])),
        "trace-terms-cancel": _symbolic(total(P[8:])),
        "remaining-is-bracket": _symbolic(total(P[6:8]) + br.e),
    })


# ---------------------------------------------------------------------------
# curvature identities and dimension four


def check_identities(cfg: Config) -> Outcome:
    parts = {}
    for rule in RULES:
        diff = parse(rule.lhs) - parse(rule.rhs)
        verdict, simp = symbolic_zero(diff, cfg.dimension, use_rules=False)
        parts[rule.name] = (bool(verdict), "0" if verdict else to_text(simp))
    # the divergence of the Bach tensor in dimension six, written without n
    six = parse("nd[^a](B[a,c]) + 2*P[^e,^k]*A[e,k,c]")
    verdict, simp = symbolic_zero(six, DIM, use_rules=False)
    parts["div-bach-six"] = (bool(verdict), "0" if verdict else to_text(simp))
    return _combine(parts)


def check_dim4_bach(cfg: Config) -> Outcome:
    parts: dict[str, tuple[bool, str]] = {}
    try:
        general = tractor_divergence(None)
        parts["general-n"] = (True, "0")
    except Exception as exc:  # noqa: BLE001 - reported as the residual
        general = divergence_formula(None)
        parts["general-n"] = (False, str(exc))
    four = divergence_formula(4)
    stray = [to_text(Expr([t])) for t in four.terms
             if not any(f.symbol == "B" for f in t.factors)]
    parts["bach-only"] = (bool(four.terms) and not stray, "; ".join(stray) or "0")
    has_a = any(f.symbol == "A" for t in general.terms for f in t.factors)
    parts["cotton-term-at-general-n"] = (has_a, "0" if has_a else "no A term at symbolic n")
    out = _combine(parts)
    out.details["n4"] = to_text(four)
    return out


CATALOG: dict[str, Callable[[Config], Outcome]] = {
    "action-simplified": check_action_simplified,
    "dim4-bach": check_dim4_bach,
    "eq-conformal": check_eq_conformal,
    "eq-fifth": check_eq_fifth,
    "eq-fourth": check_eq_fourth,
    "eq-jomega": check_eq_jomega,
    "fig-ddeltaomega": check_fig_ddeltaomega,
    "fig1": check_fig1,
    "fig2": check_fig2,
    "group-xx": check_group_xx,
    "group-xy": check_group_xy,
    "group-yz": check_group_yz,
    "group-zz": check_group_zz,
    "identities": check_identities,
    "prop-3.3": check_prop_3_3,
    "prop-3.4": check_prop_3_4,
    "prop-5.2": check_prop_5_2,
    "theorem-obstruction": check_theorem_obstruction,
}

# checks that reuse the operator computation
NEEDS_OPERATOR = frozenset(("group-xx", "group-xy", "group-yz", "group-zz", "theorem-obstruction"))

_OBSTRUCTION: dict[str, Expr] = {}


def check_names() -> list[str]:
    return sorted(CATALOG)


def run_check(name: str, config: Config | None = None) -> CheckReport:
    """Run the catalog entry ``name`` and return its timed report.

    Raises
    ------
    CheckError
        If ``name`` is not in the catalog.
    """
    if name not in CATALOG:
        raise CheckError(f"unknown check {name!r}; known: {', '.join(check_names())}")
    cfg = config or Config()
    t0 = time.monotonic()
    try:
        out = CATALOG[name](cfg)
    except Exception as exc:  # noqa: BLE001 - a crashing check is a failed check
        out = Outcome(False, "none", f"{type(exc).__name__}: {exc}")
    report = CheckReport(name, "pass" if out.ok else "fail", out.certificate, out.residual,
                         time.monotonic() - t0, out.details)
    _record(report)
    return report


def _record(report: CheckReport) -> None:
    if report.name == "theorem-obstruction" and report.passed:
        _OBSTRUCTION["O"] = report.details["obstruction"]


def _run_one(args) -> CheckReport:
    return run_check(*args)


def run_checks(names, config: Config | None = None) -> list[CheckReport]:
    """Run several checks, in worker processes when ``config.parallelism > 1``.

    Reports are returned sorted by name.  Shared intermediate results are
    computed once in the parent before the workers start.
    """
    cfg = config or Config()
    names = sorted(set(names))
    for n in names:
        if n not in CATALOG:
            raise CheckError(f"unknown check {n!r}; known: {', '.join(check_names())}")
    workers = min(cfg.parallelism, len(names))
    if workers <= 1:
        return [run_check(n, cfg) for n in names]
    if NEEDS_OPERATOR.intersection(names):
        term_groups()
    with ProcessPoolExecutor(max_workers=workers) as pool:
        reports = list(pool.map(_run_one, [(n, cfg) for n in names]))
    for r in reports:
        _record(r)
    return sorted(reports, key=lambda r: r.name)


# ---------------------------------------------------------------------------
# emission


def _laplacian_first(t: Term) -> tuple:
    lap = any(f.symbol == "B" and len(f.derivs) == 2 and f.derivs[0].name == f.derivs[1].name
              for f in t.factors)
    return (not lap, t.factors)


def obstruction_terms(O: Expr) -> list[Term]:
    """Terms of ``O`` in emission order: the Laplacian of the Bach tensor first."""
    return sorted(O.terms, key=_laplacian_first)


def emit_obstruction(fmt: str = "text", O: Expr | None = None) -> str:
    """Render the extracted obstruction tensor ``O_cd``.

    Parameters
    ----------
    fmt
        ``"text"`` (expression language), ``"latex"`` or ``"json"`` (term list).
    O
        The tensor; defaults to the one stored by a passing
        ``theorem-obstruction`` run in this process.

    Raises
    ------
    ObstructionUnavailable
        If no tensor is given and the theorem check has not passed.
    ValueError
        On an unknown format.
    """
    if O is None:
        if "O" not in _OBSTRUCTION:
            raise ObstructionUnavailable("run the theorem-obstruction check first")
        O = _OBSTRUCTION["O"]
    terms = obstruction_terms(O)
    if fmt == "text":
        out = []
        for k, t in enumerate(terms):
            sign, body = term_text(t)
            out.append(("-" if sign == "-" else "") + body if k == 0 else f" {sign} {body}")
        return "O[c,d] = " + ("".join(out) or "0")
    if fmt == "latex":
        return "\\mathcal{O}_{cd} = " + " ".join(
            (s if k else s.lstrip("+ ")) for k, s in enumerate(_latex_terms(terms)))
    if fmt == "json":
        payload = {"tensor": "O", "indices": ["c", "d"], "dimension": DIM,
                   "terms": [{"coefficient": str(t.coef), "monomial": term_text(Term(1, t.factors))[1]}
                             for t in terms]}
        return json.dumps(payload, indent=2)
    raise ValueError(f"unknown format {fmt!r}")


def _latex_terms(terms: list[Term]) -> list[str]:
    out = []
    for t in terms:
        body = to_latex(Expr([t]))
        out.append(body if body.startswith("-") else "+ " + body)
    return out


__all__ = [
    "CATALOG", "Outcome", "CheckError", "ObstructionUnavailable", "run_check", "run_checks",
    "check_names", "emit_obstruction", "extract_obstruction", "operator_raw", "operator_on_curvature",
    "term_groups", "obstruction_terms",
]
