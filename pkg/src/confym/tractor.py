"""Splitting-operator algebra of the standard tractor bundle.

Tractor content is never stored as a direct sum; it lives in monomials of
the splitting operators ``X^B`` (weight 1), ``Y^B`` (weight -1) and
``Z^{Bc}`` (weight -1, declared as ``Z[^B,c]`` of weight 1 with a lowered
spacetime slot).  The contraction table is ``Y_B X^B = 1``,
``Z_{Ba} Z^B_c = g_ac`` and zero for every other pair.
"""

from __future__ import annotations

from fractions import Fraction

from .calculus import Definition, nabla, nabla_chain, substitute
from .canon import canonicalize, canonicalize_terms
from .coeff import N, specialize
from .expr import SPACETIME, TRACTOR, Expr, ExprError, Factor, Index, Term, fresh_names, term_indices
from .parser import parse
from .rules import specialize_expr, symbolic_zero, ws_simplify

SPLITTING = ("X", "Y", "Z")

OMEGA_BODY = ("Z[^D,^c]*Z[E,^e]*C[a,b,c,e] - X[^D]*Z[E,^e]*A[e,a,b] "
              "+ X[E]*Z[^D,^e]*A[e,a,b]")
OMEGA_DEF = Definition("Omega", ("a", "b", "D", "E"), parse(OMEGA_BODY), "tractor curvature")

DIV_OMEGA_TEXT = ("(n-4)*Z[^D,^d]*Z[E,^e]*A[c,d,e] - X[^D]*Z[E,^e]*B[e,c] "
                  "+ X[E]*Z[^D,^e]*B[e,c]")


def _fresh_spacetime(factors: tuple) -> str:
    used = {i.name for i in term_indices(factors)}
    return next(fresh_names(SPACETIME, used))


def _split_derivative(f: Factor, factors: tuple) -> list[Term]:
    """``∇_d`` (innermost derivative of ``f``) applied to a splitting operator."""
    d = f.derivs[-1]
    outer = f.derivs[:-1]
    one = Fraction(1)
    if f.symbol == "X":
        (b,) = f.slots
        base = [Term(one, (Factor("Z", (), (b, d)),))]
    elif f.symbol == "Y":
        (b,) = f.slots
        c = _fresh_spacetime(factors)
        base = [Term(one, (Factor("P", (), (d, Index(c, SPACETIME, False))),
                           Factor("Z", (), (b, Index(c, SPACETIME, True)))))]
    else:
        b, c = f.slots
        base = [Term(-one, (Factor("P", (), (d, c)), Factor("X", (), (b,)))),
                Term(-one, (Factor("g", (), (d, c)), Factor("Y", (), (b,))))]
    out = []
    for t in base:
        out.extend(nabla_chain(t.factors, outer, t.coef))
    return out


def nabla_splitting(e: Expr) -> Expr:
    """Expand every derivative resting on ``X``, ``Y`` or ``Z`` via the connection identities.

    ``∇_a X^B = Z^B_a``, ``∇_a Y^B = P_ac Z^{Bc}``, ``∇_a Z^B_c = -P_ac X^B - g_ac Y^B``.
    """
    work = list(e.terms)
    done = []
    while work:
        t = work.pop()
        k = next((j for j, f in enumerate(t.factors) if f.symbol in SPLITTING and f.derivs), None)
        if k is None:
            done.append(t)
            continue
        f = t.factors[k]
        rest = t.factors[:k] + t.factors[k + 1:]
        for r in _split_derivative(f, t.factors):
            work.append(Term(t.coef * r.coef, rest + r.factors))
    return Expr(done)


_TABLE = {
    frozenset(("X",)): None,
    frozenset(("X", "Y")): "one",
    frozenset(("X", "Z")): None,
    frozenset(("Y",)): None,
    frozenset(("Y", "Z")): None,
    frozenset(("Z",)): "metric",
}


def _contract_monomial(factors: tuple) -> tuple[int, tuple] | None:
    """Apply the contraction table once; ``None`` means the monomial vanishes."""
    facs = list(factors)
    while True:
        owners: dict[str, list[int]] = {}
        for j, f in enumerate(facs):
            if f.symbol in SPLITTING and not f.derivs:
                owners.setdefault(f.slots[0].name, []).append(j)
        pair = next((v for v in owners.values() if len(v) == 2), None)
        if pair is None:
            return 1, tuple(facs)
        i, j = pair
        fi, fj = facs[i], facs[j]
        kind = _TABLE[frozenset((fi.symbol, fj.symbol))]
        if kind is None:
            return None
        new = []
        if kind == "metric":
            new.append(Factor("g", (), (fi.slots[1], fj.slots[1])))
        facs = [f for k, f in enumerate(facs) if k not in (i, j)] + new


def tractor_contract(e: Expr) -> Expr:
    """Eliminate tractor contractions between splitting operators, then canonicalize."""
    out = []
    for t in canonicalize(e).terms:
        r = _contract_monomial(t.factors)
        if r is None:
            continue
        out.append(Term(t.coef * r[0], r[1]))
    return canonicalize(Expr(out))


def expand_omega(e: Expr) -> Expr:
    """Substitute the tractor curvature by its splitting-operator form."""
    return substitute(e, {"Omega": OMEGA_DEF})


def tractor_reduce(e: Expr, dim=None) -> Expr:
    """Full tractor pipeline: expand Ω, expand derivatives of X/Y/Z, contract, simplify."""
    e = expand_omega(e)
    e = nabla_splitting(e)
    e = tractor_contract(e)
    return specialize_expr(ws_simplify(e), dim)


def tractor_curvature(check: bool = True) -> Expr:
    """The tractor curvature ``Omega[a,b,^D,E]`` in splitting-operator form.

    With ``check`` the commutator ``(∇_a∇_b - ∇_b∇_a) X^D - Ω_ab^D_E X^E`` is
    verified to reduce to zero first.

    Raises
    ------
    ExprError
        If the consistency check leaves a residual.
    """
    omega = parse(OMEGA_BODY)
    if check:
        lhs = parse("nd[a,b](X[^D]) - nd[b,a](X[^D]) - Omega[a,b,^D,E]*X[^E]")
        res = tractor_reduce(lhs)
        if res.terms:
            from .printer import to_text
            raise ExprError(f"tractor curvature consistency check failed: {to_text(res)}")
    return omega


def divergence_formula(dim=None) -> Expr:
    """The closed form of ``∇^a Ω_ac^D_E`` (optionally at ``n = dim``)."""
    return specialize_expr(ws_simplify(parse(DIV_OMEGA_TEXT)), dim)


def tractor_divergence(dim=None, check: bool = True) -> Expr:
    """Compute ``∇^a Ω_{ac}{}^D{}_E`` from the splitting form of Ω.

    The computed value is proved equal to :func:`divergence_formula`, which
    is returned; the computed form differs from it by the cyclic identity of
    the Cotton tensor.

    Raises
    ------
    ExprError
        On a mismatch, with the residual in the message.
    """
    got = tractor_reduce(parse("nd[^a](Omega[a,c,^D,E])"), dim)
    if check:
        verdict, res = symbolic_zero(got - divergence_formula(dim), dim)
        if not verdict:
            from .printer import to_text
            raise ExprError(f"tractor divergence mismatch: {to_text(res)}")
        return divergence_formula(dim)
    return got


def tractor_metric_expansion() -> Expr:
    """``h_BC = Y_B X_C + X_B Y_C + Z_B^c Z_Cc``."""
    return parse("Y[B]*X[C] + X[B]*Y[C] + Z[B,^c]*Z[C,c]")


def nabla_metric_residual() -> Expr:
    """``∇_a`` of the splitting form of ``h``; zero when the connection identities are consistent."""
    return tractor_contract(nabla_splitting(nabla(tractor_metric_expansion(), "a")))


__all__ = [
    "nabla_splitting", "tractor_contract", "expand_omega", "tractor_reduce", "tractor_curvature",
    "tractor_divergence", "divergence_formula", "tractor_metric_expansion", "nabla_metric_residual",
    "OMEGA_DEF", "TRACTOR", "N", "specialize", "canonicalize_terms",
]
