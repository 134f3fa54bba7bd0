"""Operators on bundle-valued differential forms.

A :class:`FormExpr` wraps an expression whose leading free spacetime
indices are antisymmetric form slots; any further free indices (gauge or
tractor) are value indices, in the order "upper, lower" for
endomorphism-valued forms.  The operators follow these conventions:

* ``(d_A ω)_{a_0…a_k} = Σ_i (-1)^i ∇_{a_i} ω_{a_0…â_i…a_k}`` (the ``1/k!``
  normalised alternating sum),
* ``(δ_A η)_{a_1…a_k} = -∇^b η_{b a_1…a_k}``,
* ``(P#ω)_{ab} = P_a^c ω_{cb} + P_b^c ω_{ac}``,
* ``⟨ω, η⟩ = (1/k!) ω_{a_1…a_k}{}^B{}_C η^{a_1…a_k C}{}_B``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .calculus import nabla
from .canon import canonicalize, canonicalize_terms
from .expr import (GAUGE, SPACETIME, TRACTOR, Expr, ExprError, Factor, Index, Term, dummy_names,
                   fresh_names, rename_apart, term_indices)
from .parser import parse
from .symbols import TABLE


def _all_names(e: Expr) -> set:
    return {i.name for t in e.terms for i in term_indices(t.factors)}


def rename_free(e: Expr, mapping: dict, flip: frozenset = frozenset()) -> Expr:
    """Rename free indices by ``mapping``; names in ``flip`` also change position."""
    targets = set(mapping.values())
    out = []
    for t in e.terms:
        facs = rename_apart(t.factors, targets)
        new = []
        for f in facs:
            def m(i: Index) -> Index:
                up = (not i.up) if i.name in flip else i.up
                return Index(mapping.get(i.name, i.name), i.family, up)
            new.append(Factor(f.symbol, tuple(m(i) for i in f.derivs), tuple(m(i) for i in f.slots)))
        out.append(Term(t.coef, tuple(new)))
    return Expr(out)


@dataclass(frozen=True)
class FormExpr:
    """A bundle-valued ``k``-form of conformal weight ``weight``.

    Parameters
    ----------
    e
        The component expression.
    form_indices
        Names of the free lowered spacetime indices that are form slots.
    value_indices
        Remaining free indices (gauge or tractor), upper before lower.
    weight
        Conformal weight of the form with all form slots lowered.
    check
        Verify antisymmetry in the form slots by canonicalization.
    """

    e: Expr
    form_indices: tuple
    value_indices: tuple = ()
    weight: int = 0
    check: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "form_indices", tuple(self.form_indices))
        object.__setattr__(self, "value_indices", tuple(self.value_indices))
        if self.check and self.e.terms:
            fi = self.form_indices
            for k in range(len(fi) - 1):
                sw = rename_free(self.e, {fi[k]: fi[k + 1], fi[k + 1]: fi[k]})
                if canonicalize_terms((self.e + sw).terms):
                    raise ExprError(f"form is not antisymmetric in {fi[k]}, {fi[k + 1]}")

    @property
    def degree(self) -> int:
        return len(self.form_indices)

    def with_expr(self, e: Expr, form_indices=None, weight=None) -> "FormExpr":
        return FormExpr(e, self.form_indices if form_indices is None else form_indices,
                        self.value_indices, self.weight if weight is None else weight, check=False)

    def renamed(self, names) -> "FormExpr":
        """Rename the form slots to ``names`` (same length)."""
        names = tuple(names)
        if names == self.form_indices:
            return self
        mapping = dict(zip(self.form_indices, names))
        return self.with_expr(rename_free(self.e, mapping), names)

    def canonical(self) -> "FormExpr":
        return self.with_expr(canonicalize(self.e))


def form(text: str, form_indices: str, value_indices: str = "", weight: int = 0,
         check: bool = True) -> FormExpr:
    """Build a :class:`FormExpr` from source text, e.g. ``form("Omega[a,b,^D,E]", "ab", "^D,E")``."""
    from .expr import idx

    vals = tuple(idx(s.strip()) for s in value_indices.split(",") if s.strip())
    return FormExpr(parse(text), tuple(form_indices), vals, weight, check)


def _fresh_names(avoid: set, k: int) -> list[str]:
    gen = fresh_names(SPACETIME, avoid)
    return [next(gen) for _ in range(k)]


def d_A(w: FormExpr, names=None) -> FormExpr:
    """Twisted exterior derivative of a ``k``-form; result has ``k+1`` form slots."""
    k = w.degree
    avoid = _all_names(w.e)
    names = tuple(names) if names else tuple(_fresh_names(avoid | set(w.form_indices), k + 1))
    out = Expr()
    for i in range(k + 1):
        rest = names[:i] + names[i + 1:]
        piece = nabla(w.renamed(rest).e, Index(names[i], SPACETIME, False))
        out = out + (piece if i % 2 == 0 else -piece)
    return FormExpr(out, names, w.value_indices, w.weight, check=False)


def delta_A(w: FormExpr) -> FormExpr:
    """Formal adjoint ``-∇^b ω_{b…}``; lowers the degree by one and the weight by two."""
    if w.degree == 0:
        raise ExprError("delta_A needs a form of degree at least 1")
    first = w.form_indices[0]
    b = _fresh_names(_all_names(w.e), 1)[0]
    raised = rename_free(w.e, {first: b}, flip=frozenset({first}))
    out = -nabla(raised, Index(b, SPACETIME, False))
    return FormExpr(out, w.form_indices[1:], w.value_indices, w.weight - 2, check=False)


def p_hash(w: FormExpr) -> FormExpr:
    """``(P#ω)_ab = P_a^c ω_cb + P_b^c ω_ac``; defined on 2-forms only."""
    if w.degree != 2:
        raise ExprError(f"P# acts on 2-forms, got a {w.degree}-form")
    a, b = w.form_indices
    c = _fresh_names(_all_names(w.e) | {a, b}, 1)[0]
    t1 = parse(f"P[{a},^{c}]") * w.renamed((c, b)).e
    t2 = parse(f"P[{b},^{c}]") * w.renamed((a, c)).e
    return w.with_expr(t1 + t2)


def scalar_times(s: Expr, w: FormExpr, dweight: int = 0) -> FormExpr:
    return w.with_expr(s * w.e, weight=w.weight + dweight)


def q2(w: FormExpr) -> FormExpr:
    """``Q_2 ω = d_A δ_A ω - 4 P#ω + 2 J ω`` for a weight-0 2-form (dimension six)."""
    if w.degree != 2 or w.weight != 0:
        raise ExprError("q2 expects a weight-0 2-form")
    dd = d_A(delta_A(w), w.form_indices)
    e = dd.e - p_hash(w).e.scale(4) + (parse("J[]") * w.e).scale(2)
    return FormExpr(e, w.form_indices, w.value_indices, -2, check=False)


def _value_pairing_map(w: FormExpr, eta: FormExpr) -> tuple[dict, frozenset]:
    """Rename ``eta``'s value indices so they contract with those of ``w``."""
    vw, ve = w.value_indices, eta.value_indices
    if len(vw) != len(ve):
        raise ExprError("pairing needs forms with the same value bundle")
    if not vw:
        return {}, frozenset()
    if len(vw) == 1:
        return {ve[0].name: vw[0].name}, (frozenset({ve[0].name}) if ve[0].up == vw[0].up else frozenset())
    if len(vw) == 2:
        # omega^U_L eta^L_U
        (u, l), (eu, el) = vw, ve
        return {eu.name: l.name, el.name: u.name}, frozenset()
    raise ExprError("value bundles of rank > 2 are not supported")


def pairing(w: FormExpr, eta: FormExpr, dim: int = 6) -> Expr:
    """``⟨ω, η⟩ = (1/k!) ω_{a…}{}^B{}_C η^{a…C}{}_B``, a density of weight ``-dim``.

    Raises
    ------
    ExprError
        On arity mismatch or when the weights do not sum to ``2k - dim``.
    """
    k = w.degree
    if eta.degree != k:
        raise ExprError("pairing needs forms of equal degree")
    if w.weight + eta.weight != 2 * k - dim:
        raise ExprError(f"weights {w.weight} + {eta.weight} do not sum to {2 * k - dim}")
    vmap, vflip = _value_pairing_map(w, eta)
    fnames = tuple(_fresh_names(_all_names(w.e) | _all_names(eta.e), k))
    a = w.renamed(fnames).e
    emap = dict(zip(eta.form_indices, fnames))
    emap.update(vmap)
    b = rename_free(eta.e, emap, flip=frozenset(eta.form_indices) | vflip)
    return (a * b).scale(Fraction(1, math.factorial(k)))


def action_density(F: FormExpr, dim: int = 6) -> Expr:
    """``⟨F, Q_2 F⟩`` for a weight-0 curvature 2-form."""
    return pairing(F, q2(F), dim)


def bracket_parts(s: FormExpr, F: FormExpr) -> tuple[FormExpr, FormExpr]:
    """The two compositions ``σ_b F^b{}_c`` and ``F^b{}_c σ_b`` of :func:`bracket`.

    The free lowercase index of ``σ`` is contracted with the first form slot
    of ``F``; value indices compose as endomorphisms.
    """
    if s.degree != 1 or F.degree != 2:
        raise ExprError("bracket expects a 1-form and a 2-form")
    (u, l) = F.value_indices
    c = F.form_indices[1]
    avoid = _all_names(s.e) | _all_names(F.e) | {c, u.name, l.name}
    b = _fresh_names(avoid, 1)[0]
    gen = fresh_names(u.family, avoid | {b})
    g = next(gen)
    su, sl = s.value_indices
    # σ_b^U_G F^b_c^G_L
    s1 = rename_free(s.e, {s.form_indices[0]: b, su.name: u.name, sl.name: g})
    f1 = rename_free(F.e, {F.form_indices[0]: b, F.form_indices[1]: c, u.name: g, l.name: l.name},
                     flip=frozenset({F.form_indices[0]}))
    # F^b_c^U_G σ_b^G_L
    f2 = rename_free(F.e, {F.form_indices[0]: b, F.form_indices[1]: c, l.name: g},
                     flip=frozenset({F.form_indices[0]}))
    s2 = rename_free(s.e, {s.form_indices[0]: b, su.name: g, sl.name: l.name})
    w = s.weight + F.weight - 2
    return (FormExpr(s1 * f1, (c,), F.value_indices, w, check=False),
            FormExpr(f2 * s2, (c,), F.value_indices, w, check=False))


def bracket(s: FormExpr, F: FormExpr) -> FormExpr:
    """``[σ, F]_c = σ_b F^b{}_c - F^b{}_c σ_b`` for a 1-form ``σ`` and a 2-form ``F``."""
    left, right = bracket_parts(s, F)
    return left.with_expr(left.e - right.e)


def D_operator(F: FormExpr) -> FormExpr:
    """``𝔇 = δ_A Q_2 F - [δ_A F, F]`` (dimension six)."""
    main = delta_A(q2(F))
    br = bracket(delta_A(F), F)
    c = main.form_indices[0]
    br = br.renamed((c,))
    return FormExpr(main.e - br.e, (c,), F.value_indices, main.weight, check=False)


# ---------------------------------------------------------------------------
# conformal change of metric, hat g = e^{2 Ups} g


_HAT_FIXED = frozenset(("g", "C", "Ups", "Ups1", "F", "om", "eta", "omc", "sec"))
_HAT_RULES = {
    "P": ("ab", "P[a,b] - nd[a](Ups1[b]) + Ups1[a]*Ups1[b] - (1/2)*g[a,b]*Ups1[^c]*Ups1[c]"),
    "J": ("", "J[] - nd[^a](Ups1[a]) + (1-1/2*n)*Ups1[a]*Ups1[^a]"),
}
_HAT_EXPAND = ("A", "B", "R", "Ric", "Sc")


def _hat_definitions() -> dict:
    from .calculus import Definition

    return {k: Definition(k, tuple(ph), parse(body, check=False), "conformal change")
            for k, (ph, body) in _HAT_RULES.items()}


def _nabla_hat_correction(x: Index, f: Factor, avoid: set) -> list[Term]:
    """``(∇̂_x - ∇_x) f`` for one factor, using its conformal weight as written."""
    from .expr import factor_weight

    one = Fraction(1)
    idxs = f.derivs + f.slots
    nd = len(f.derivs)

    def with_index(pos: int, new: Index) -> Factor:
        if pos < nd:
            return Factor(f.symbol, f.derivs[:pos] + (new,) + f.derivs[pos + 1:], f.slots)
        j = pos - nd
        return Factor(f.symbol, f.derivs, f.slots[:j] + (new,) + f.slots[j + 1:])

    def ups(i: Index) -> Factor:
        return Factor("Ups1", (), (i,))

    used = set(avoid) | {i.name for i in idxs} | {x.name}
    out = []
    w = factor_weight(f)
    if w:
        out.append(Term(Fraction(w), (ups(x), f)))
    for pos, u in enumerate(idxs):
        if u.family != SPACETIME:
            continue
        c = next(fresh_names(SPACETIME, used))
        used.add(c)
        if not u.up:
            # -Ups_x f - Ups_u f[u->x] + g_xu Ups^c f[u->c]
            out.append(Term(-one, (ups(x), f)))
            out.append(Term(-one, (ups(u), with_index(pos, x))))
            out.append(Term(one, (Factor("g", (), (x, u)), ups(Index(c, SPACETIME, True)),
                                  with_index(pos, Index(c, SPACETIME, False)))))
        else:
            # +Ups_x f + g_x^u Ups_c f[u->c] - Ups^u f[u->x]
            out.append(Term(one, (ups(x), f)))
            out.append(Term(one, (Factor("g", (), (x, u)), ups(Index(c, SPACETIME, False)),
                                  with_index(pos, Index(c, SPACETIME, True)))))
            out.append(Term(-one, (ups(u), with_index(pos, x))))
    return out


def nabla_hat(e: Expr, x: Index) -> Expr:
    """``∇̂_x e`` for the rescaled metric, by Leibniz over the factors of each term."""
    from .expr import dummy_names, rename_apart

    out = []
    for t in e.terms:
        facs = t.factors
        if x.name in dummy_names(facs):
            facs = rename_apart(facs, {x.name})
        avoid = _all_names(Expr([Term(1, facs)]))
        for k, f in enumerate(facs):
            rest_l, rest_r = facs[:k], facs[k + 1:]
            if not TABLE[f.symbol].parallel:
                nf = Factor(f.symbol, (x,) + f.derivs, f.slots)
                out.append(Term(t.coef, rest_l + (nf,) + rest_r))
            for c in _nabla_hat_correction(x, f, avoid):
                out.append(Term(t.coef * c.coef, rest_l + c.factors + rest_r))
    return Expr(out)


def hat_transform(e: Expr) -> Expr:
    """Rewrite ``e`` as computed from ``ĝ = e^{2Υ} g`` in terms of ``g``, ``∇`` and ``Υ``.

    Weighted tensors keep their components with respect to the conformal
    metric; ``P`` and ``J`` get their explicit rules, ``A``, ``B`` and the
    Riemann-type symbols are expanded through their definitions first, and
    every covariant derivative becomes ``∇̂``.  The gauge connection is
    metric independent, so gauge indices carry no correction.

    Raises
    ------
    ExprError
        If ``e`` contains a symbol without a conformal transformation rule,
        such as the tractor splitting operators.
    """
    from .calculus import substitute
    from .rules import RIEMANN_DEFS, WS_DEFS

    defs = {k: RIEMANN_DEFS[k] for k in ("A", "B")}
    defs.update({k: WS_DEFS[k] for k in ("R", "Ric", "Sc")})
    e = substitute(e, defs)
    hat_defs = _hat_definitions()
    known = _HAT_FIXED | set(hat_defs)
    out = Expr()
    for t in e.terms:
        acc = Expr.scalar(t.coef)
        for f in t.factors:
            if f.symbol not in known:
                raise ExprError(f"no conformal transformation rule for symbol {f.symbol!r}")
            base = Factor(f.symbol, (), f.slots)
            if f.symbol in hat_defs:
                piece = Expr(hat_defs[f.symbol].instantiate(base, _all_names(Expr([t]))))
            else:
                piece = Expr([Term(Fraction(1), (base,))])
            for d in reversed(f.derivs):
                piece = nabla_hat(piece, d)
            acc = acc * piece
        out = out + acc
    return out


def interior_ups(w: FormExpr) -> FormExpr:
    """``ι(dΥ) ω``: contraction of ``Υ^a`` with the first form slot (weight ``-2``)."""
    first = w.form_indices[0]
    b = _fresh_names(_all_names(w.e) | set(w.form_indices), 1)[0]
    raised = rename_free(w.e, {first: b})
    e = parse(f"Ups1[^{b}]") * raised
    return FormExpr(e, w.form_indices[1:], w.value_indices, w.weight - 2, check=False)


__all__ = [
    "FormExpr", "form", "d_A", "delta_A", "p_hash", "q2", "pairing", "action_density", "bracket",
    "bracket_parts", "hat_transform", "nabla_hat", "interior_ups",
    "D_operator", "scalar_times", "rename_free", "GAUGE", "TRACTOR", "dummy_names",
]
