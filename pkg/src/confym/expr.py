"""Expression IR for abstract-index tensor expressions.

An :class:`Expr` is an immutable sum of :class:`Term` objects.  A term is a
coefficient in Q(n) times an ordered tuple of :class:`Factor` objects; a
factor is a declared symbol with its slot indices and a string of covariant
derivatives applied to it, the first derivative index being the outermost.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Iterator, Mapping, NamedTuple

from .coeff import Coefficient, as_coef
from .symbols import TABLE, IndexFamily, family_of_name

SPACETIME = IndexFamily.SPACETIME
TRACTOR = IndexFamily.TRACTOR
GAUGE = IndexFamily.GAUGE


class Index(NamedTuple):
    name: str
    family: IndexFamily
    up: bool

    def flip(self) -> "Index":
        return Index(self.name, self.family, not self.up)

    def renamed(self, name: str) -> "Index":
        return Index(name, self.family, self.up)

    def __str__(self) -> str:
        return ("^" if self.up else "") + self.name


def idx(spec: str) -> Index:
    """Build an index from its textual form, e.g. ``"^a"``, ``"B"``, ``"%C"``."""
    up = spec.startswith("^")
    name = spec[1:] if up else spec
    return Index(name, family_of_name(name), up)


class Factor(NamedTuple):
    symbol: str
    derivs: tuple
    slots: tuple

    @property
    def decl(self):
        return TABLE[self.symbol]

    def indices(self) -> tuple:
        return self.derivs + self.slots


class Term(NamedTuple):
    coef: Coefficient
    factors: tuple


def term_indices(factors: Iterable[Factor]) -> Iterator[Index]:
    for f in factors:
        yield from f.derivs
        yield from f.slots


def free_of(factors: Iterable[Factor]) -> frozenset:
    """Free indices ``(name, family, up)`` of a monomial."""
    count: dict[str, list[Index]] = {}
    for i in term_indices(factors):
        count.setdefault(i.name, []).append(i)
    return frozenset(v[0] for v in count.values() if len(v) == 1)


def dummy_names(factors: Iterable[Factor]) -> set:
    seen: dict[str, int] = {}
    for i in term_indices(factors):
        seen[i.name] = seen.get(i.name, 0) + 1
    return {k for k, v in seen.items() if v >= 2}


def factor_weight(f: Factor) -> int:
    w = TABLE[f.symbol].weight
    for i in f.derivs:
        if i.up:
            w -= 2
    for i in f.slots:
        if i.up and i.family == SPACETIME:
            w -= 2
    return w


def monomial_weight(factors: Iterable[Factor]) -> int:
    return sum(factor_weight(f) for f in factors)


_POOLS = {
    SPACETIME: "ijklmpqrstuvwxyz",
    TRACTOR: "KLMNQRSTUVW",
    GAUGE: "KLMNQRSTUVW",
}


def fresh_names(family: IndexFamily, avoid: set) -> Iterator[str]:
    """Yield index names of ``family`` not in ``avoid`` (lazily, unbounded)."""
    base = _POOLS[family]
    prefix = "%" if family == GAUGE else ""
    k = 0
    while True:
        suffix = "" if k == 0 else str(k)
        for ch in base:
            nm = f"{prefix}{ch}{suffix}"
            if nm not in avoid:
                yield nm
        k += 1


def rename_factors(factors: Iterable[Factor], mapping: Mapping[str, str]) -> tuple:
    out = []
    for f in factors:
        out.append(Factor(
            f.symbol,
            tuple(Index(mapping.get(i.name, i.name), i.family, i.up) for i in f.derivs),
            tuple(Index(mapping.get(i.name, i.name), i.family, i.up) for i in f.slots),
        ))
    return tuple(out)


def rename_apart(factors: tuple, avoid: set) -> tuple:
    """Rename dummy indices of ``factors`` away from the names in ``avoid``."""
    dummies = dummy_names(factors)
    clash = dummies & avoid
    if not clash:
        return factors
    used = avoid | {i.name for i in term_indices(factors)}
    mapping = {}
    for nm in sorted(clash):
        fam = family_of_name(nm)
        new = next(fresh_names(fam, used))
        used.add(new)
        mapping[nm] = new
    return rename_factors(factors, mapping)


class Expr:
    """Immutable sum of terms.

    Terms are stored as given (duplicates allowed); :func:`confym.canon.canonicalize`
    collects them.  ``Expr`` supports ``+``, ``-``, scalar and tensor ``*``.
    Multiplying two expressions renames dummies apart and contracts any free
    index name shared with opposite position.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[Term] = ()):
        ts = []
        for t in terms:
            c = as_coef(t.coef) if not isinstance(t.coef, Fraction) else t.coef
            if c != 0:
                ts.append(Term(c, tuple(t.factors)))
        object.__setattr__(self, "terms", tuple(ts))

    def __setattr__(self, key, value):
        raise AttributeError("Expr is immutable")

    def __reduce__(self):
        return (Expr, (self.terms,))

    @classmethod
    def from_dict(cls, d: Mapping[tuple, Coefficient]) -> "Expr":
        return cls(Term(c, k) for k, c in d.items() if c != 0)

    @classmethod
    def zero(cls) -> "Expr":
        return cls(())

    @classmethod
    def scalar(cls, c) -> "Expr":
        return cls((Term(as_coef(c), ()),))

    @classmethod
    def monomial(cls, *factors: Factor, coef=1) -> "Expr":
        return cls((Term(as_coef(coef), tuple(factors)),))

    def to_dict(self) -> dict:
        d: dict = {}
        for t in self.terms:
            d[t.factors] = d.get(t.factors, 0) + t.coef
        return {k: v for k, v in d.items() if v != 0}

    def __iter__(self):
        return iter(self.terms)

    def __len__(self):
        return len(self.terms)

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def free(self) -> frozenset:
        if not self.terms:
            return frozenset()
        return free_of(self.terms[0].factors)

    def __add__(self, other: "Expr") -> "Expr":
        if not isinstance(other, Expr):
            return NotImplemented
        return Expr(self.terms + other.terms)

    def __neg__(self) -> "Expr":
        return Expr(Term(-t.coef, t.factors) for t in self.terms)

    def __sub__(self, other: "Expr") -> "Expr":
        if not isinstance(other, Expr):
            return NotImplemented
        return self + (-other)

    def scale(self, c) -> "Expr":
        c = as_coef(c)
        if c == 0:
            return Expr()
        return Expr(Term(t.coef * c, t.factors) for t in self.terms)

    def __mul__(self, other):
        if isinstance(other, Expr):
            return product(self, other)
        try:
            return self.scale(other)
        except TypeError:
            return NotImplemented

    def __rmul__(self, other):
        try:
            return self.scale(other)
        except TypeError:
            return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, Expr):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(frozenset(self.to_dict().items()))

    def __repr__(self):
        from .printer import to_text
        return f"Expr({to_text(self)!r})"

    def __str__(self):
        from .printer import to_text
        return to_text(self)


def product(a: Expr, b: Expr) -> Expr:
    """Tensor product with implicit contraction of shared free index names."""
    out = []
    for ta in a.terms:
        names_a = {i.name for i in term_indices(ta.factors)}
        free_a = {i.name for i in free_of(ta.factors)}
        for tb in b.terms:
            free_b = {i.name for i in free_of(tb.factors)}
            fb = rename_apart(tb.factors, names_a | free_b)
            # dummies of the left factor must also avoid free names on the right
            fa = ta.factors
            if dummy_names(fa) & free_b:
                fa = rename_apart(fa, free_b | {i.name for i in term_indices(fb)} | free_a)
            out.append(Term(ta.coef * tb.coef, fa + fb))
    return Expr(out)


# ---------------------------------------------------------------------------
# validation


class ExprError(ValueError):
    """Raised for ill-formed expressions."""


def _term_diagnostics(pos: int, t: Term) -> list[str]:
    diags = []
    occ: dict[str, list[Index]] = {}
    for f in t.factors:
        decl = TABLE.get(f.symbol)
        if decl is None:
            diags.append(f"term {pos}: unknown symbol {f.symbol!r}")
            continue
        if len(f.slots) != decl.rank:
            diags.append(f"term {pos}: slot count of {f.symbol} is {len(f.slots)}, expected {decl.rank}")
            continue
        for k, (i, (fam, natural_up)) in enumerate(zip(f.slots, decl.slots)):
            if i.family != fam:
                diags.append(f"term {pos}: index family mismatch in slot {k} of {f.symbol}")
            elif fam == GAUGE and i.up != natural_up:
                diags.append(f"term {pos}: gauge index variance mismatch in slot {k} of {f.symbol}")
        for i in f.derivs:
            if i.family != SPACETIME:
                diags.append(f"term {pos}: derivative index {i.name} is not a spacetime index")
        for i in f.indices():
            occ.setdefault(i.name, []).append(i)
    for name, lst in occ.items():
        if len(lst) > 2:
            diags.append(f"term {pos}: index {name} appears {len(lst)} times")
        elif len(lst) == 2:
            a, b = lst
            if a.family != b.family:
                diags.append(f"term {pos}: dummy pair family mismatch for {name}")
            elif a.up == b.up:
                diags.append(f"term {pos}: dummy pair variance for {name}")
    return diags


def validate(e: Expr) -> list[str]:
    """Return diagnostics; the list is empty iff ``e`` is well formed."""
    diags: list[str] = []
    frees = []
    weights = []
    for pos, t in enumerate(e.terms):
        d = _term_diagnostics(pos, t)
        diags.extend(d)
        if d:
            continue
        frees.append((pos, free_of(t.factors)))
        weights.append((pos, monomial_weight(t.factors)))
    if frees:
        ref = frees[0][1]
        for pos, fr in frees[1:]:
            if fr != ref:
                diags.append(f"term {pos}: free index mismatch ({_fmt_free(fr)} vs {_fmt_free(ref)})")
    if weights:
        ref_w = weights[0][1]
        for pos, w in weights[1:]:
            if w != ref_w:
                diags.append(f"term {pos}: weight mismatch ({w} vs {ref_w})")
    return diags


def _fmt_free(fr) -> str:
    return "{" + ",".join(sorted(str(i) for i in fr)) + "}"


def check(e: Expr) -> Expr:
    """Validate and return ``e``; raise :class:`ExprError` on the first problem."""
    d = validate(e)
    if d:
        raise ExprError("; ".join(d))
    return e


def weight_of(e: Expr) -> int:
    """Common conformal weight of all terms of ``e``.

    Raises
    ------
    ExprError
        If terms disagree or the expression is empty.
    """
    ws = {monomial_weight(t.factors) for t in e.terms}
    if not ws:
        raise ExprError("the zero expression has no definite weight")
    if len(ws) > 1:
        raise ExprError(f"heterogeneous weights {sorted(ws)}")
    return ws.pop()
