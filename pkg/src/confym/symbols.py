"""Symbol declarations: slot signatures, conformal weights, symmetries.

Every tensor symbol used by the engine is described by a :class:`SymbolDecl`.
The declared ``weight`` is the conformal weight of the symbol with all of
its spacetime slots in the lower position; each raised spacetime index
(slot or derivative) lowers the weight by two because raising uses the
conformal metric of weight -2.  Tractor indices are moved with the tractor
metric, which has weight 0, and gauge indices have a fixed position.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence


class IndexFamily(enum.IntEnum):
    """The three index alphabets.

    Spacetime indices are lowercase and trace to ``n``; tractor indices are
    uppercase and trace to ``n + 2``; gauge indices are written ``%B`` and
    have no metric, so they only contract up against down.
    """

    SPACETIME = 0
    TRACTOR = 1
    GAUGE = 2

    @property
    def has_metric(self) -> bool:
        return self is not IndexFamily.GAUGE


def family_of_name(name: str) -> IndexFamily:
    """Infer the index family from the spelling of an index name."""
    if name.startswith("%"):
        return IndexFamily.GAUGE
    if name[:1].isupper():
        return IndexFamily.TRACTOR
    return IndexFamily.SPACETIME


SYM = "symmetric"
ANTI = "antisymmetric"


@dataclass(frozen=True)
class SymmetrySpec:
    """Monoterm slot symmetries of a tensor symbol.

    Parameters
    ----------
    blocks
        ``(positions, kind)`` pairs; each block is fully symmetric or fully
        antisymmetric in the listed slots.
    pair_exchanges
        ``(positions_a, positions_b)`` swaps that fix the tensor with sign
        +1, e.g. ``((0, 1), (2, 3))`` for the Riemann pair symmetry.
    tracefree_pairs
        Slot pairs whose metric trace vanishes identically.
    """

    blocks: tuple = ()
    pair_exchanges: tuple = ()
    tracefree_pairs: tuple = ()

    def generators(self, nslots: int) -> list[tuple[tuple[int, ...], int]]:
        gens = []
        ident = list(range(nslots))
        for positions, kind in self.blocks:
            sign = -1 if kind == ANTI else 1
            for a, b in zip(positions, positions[1:]):
                p = ident.copy()
                p[a], p[b] = p[b], p[a]
                gens.append((tuple(p), sign))
        for pa, pb in self.pair_exchanges:
            p = ident.copy()
            for a, b in zip(pa, pb):
                p[a], p[b] = p[b], p[a]
            gens.append((tuple(p), 1))
        return gens

    def group(self, nslots: int) -> tuple[tuple[tuple[int, ...], int], ...]:
        """Enumerate the signed permutation group generated by the spec.

        Each element ``(perm, sign)`` means ``T[s] = sign * T[s∘perm]`` where
        ``(s∘perm)[i] = s[perm[i]]``.  The identity comes first.  If the same
        permutation is reached with both signs the symbol would vanish, which
        is rejected.
        """
        ident = tuple(range(nslots))
        seen = {ident: 1}
        order = [ident]
        gens = self.generators(nslots)
        frontier = [ident]
        while frontier:
            nxt = []
            for p in frontier:
                sp = seen[p]
                for g, sg in gens:
                    q = tuple(p[j] for j in g)
                    sq = sp * sg
                    if q in seen:
                        if seen[q] != sq:
                            raise ValueError("symmetry specification forces the tensor to vanish")
                        continue
                    seen[q] = sq
                    order.append(q)
                    nxt.append(q)
            frontier = nxt
        return tuple((p, seen[p]) for p in order)


@dataclass(frozen=True)
class SymbolDecl:
    """Declaration of a tensor symbol.

    Attributes
    ----------
    name
        Symbol name as used in the expression language.
    slots
        ``(family, up)`` per slot; ``up`` is the natural position, which is
        binding only for gauge slots.
    weight
        Conformal weight with every spacetime slot lowered.
    symmetry
        Monoterm symmetries and trace-free pairs.
    parallel
        True when the symbol is annihilated by the connection (metrics).
    bianchi
        Differential-Bianchi behaviour: ``"riemann"`` for the Riemann tensor,
        ``"closed"`` for a bundle-valued 2-form with ``d_A`` equal to zero.
    description
        Short human-readable gloss used by ``dump-rules``.
    """

    name: str
    slots: tuple
    weight: int
    symmetry: SymmetrySpec = field(default_factory=SymmetrySpec)
    parallel: bool = False
    bianchi: str | None = None
    description: str = ""

    @property
    def rank(self) -> int:
        return len(self.slots)

    @property
    def group(self):
        return _group_cache(self)

    @property
    def tracefree(self) -> frozenset:
        return frozenset(frozenset(p) for p in self.symmetry.tracefree_pairs)


_GROUPS: dict[SymbolDecl, tuple] = {}


def _group_cache(decl: SymbolDecl):
    g = _GROUPS.get(decl)
    if g is None:
        g = decl.symmetry.group(decl.rank)
        _GROUPS[decl] = g
    return g


S, T, G = IndexFamily.SPACETIME, IndexFamily.TRACTOR, IndexFamily.GAUGE

_RIEMANN_SYM = SymmetrySpec(
    blocks=(((0, 1), ANTI), ((2, 3), ANTI)),
    pair_exchanges=(((0, 1), (2, 3)),),
)
_WEYL_SYM = SymmetrySpec(
    blocks=_RIEMANN_SYM.blocks,
    pair_exchanges=_RIEMANN_SYM.pair_exchanges,
    tracefree_pairs=((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)),
)
_SYM2 = SymmetrySpec(blocks=(((0, 1), SYM),))
_SYM2_TF = SymmetrySpec(blocks=(((0, 1), SYM),), tracefree_pairs=((0, 1),))
_FORM2 = SymmetrySpec(blocks=(((0, 1), ANTI),))
_FORM2_GAUGE = SymmetrySpec(blocks=(((0, 1), ANTI),), tracefree_pairs=((0, 1),))


def _builtins() -> list[SymbolDecl]:
    sd = SymbolDecl
    return [
        sd("g", ((S, False), (S, False)), 2, _SYM2, parallel=True,
           description="conformal metric; mixed position is the Kronecker delta"),
        sd("h", ((T, False), (T, False)), 0, _SYM2, parallel=True, description="tractor metric"),
        sd("R", ((S, False),) * 4, 2, _RIEMANN_SYM, bianchi="riemann",
           description="Riemann tensor R_ab^c_d with all slots lowered"),
        sd("Ric", ((S, False),) * 2, 0, _SYM2, description="Ricci tensor R^c_acb"),
        sd("Sc", (), -2, description="scalar curvature"),
        sd("P", ((S, False),) * 2, 0, _SYM2, description="Schouten tensor"),
        sd("J", (), -2, description="trace of the Schouten tensor"),
        sd("A", ((S, False),) * 3, 0,
           SymmetrySpec(blocks=(((1, 2), ANTI),), tracefree_pairs=((0, 1), (0, 2), (1, 2))),
           description="Cotton tensor"),
        sd("C", ((S, False),) * 4, 2, _WEYL_SYM, description="Weyl tensor"),
        sd("B", ((S, False),) * 2, -2, _SYM2_TF, description="Bach tensor"),
        sd("O", ((S, False),) * 2, -4, _SYM2_TF, description="obstruction tensor (by construction)"),
        sd("Ups", (), 0, description="log of the conformal factor"),
        sd("Ups1", ((S, False),), 0, description="gradient of Ups"),
        sd("F", ((S, False), (S, False), (G, True), (G, False)), 0, _FORM2,
           bianchi="closed", description="gauge curvature"),
        sd("om", ((S, False), (S, False), (G, True), (G, False)), 0, _FORM2,
           description="generic endomorphism-valued 2-form"),
        sd("eta", ((S, False), (S, False), (G, True), (G, False)), 0, _FORM2,
           description="second generic endomorphism-valued 2-form"),
        sd("omc", ((S, False), (S, False), (G, True), (G, False)), 0, _FORM2,
           bianchi="closed", description="d_A-closed endomorphism-valued 2-form"),
        sd("sec", ((G, True),), 0, description="generic gauge section"),
        sd("Omega", ((S, False), (S, False), (T, True), (T, False)), 0, _FORM2,
           description="tractor curvature"),
        sd("X", ((T, True),), 1, description="canonical tractor X^B"),
        sd("Y", ((T, True),), -1, description="splitting operator Y^B"),
        sd("Z", ((T, True), (S, False)), 1, description="splitting operator Z^B_c"),
    ]


class SymbolTable:
    """Registry of symbol declarations keyed by name.

    The built-in table is created at import time.  Additional symbols may be
    declared once (tests and scripts use this for auxiliary tensors); an
    attempt to change an existing declaration is an error.
    """

    def __init__(self, decls: Iterable[SymbolDecl] = ()):
        self._decls: dict[str, SymbolDecl] = {}
        for d in decls:
            self.declare(d)

    def declare(self, decl: SymbolDecl) -> SymbolDecl:
        old = self._decls.get(decl.name)
        if old is not None:
            if old != decl:
                raise ValueError(f"symbol {decl.name!r} is already declared differently")
            return old
        decl.group  # validate the symmetry spec eagerly
        self._decls[decl.name] = decl
        return decl

    def __getitem__(self, name: str) -> SymbolDecl:
        try:
            return self._decls[name]
        except KeyError:
            raise KeyError(f"unknown symbol {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._decls

    def names(self) -> list[str]:
        return sorted(self._decls)

    def get(self, name: str):
        return self._decls.get(name)


TABLE = SymbolTable(_builtins())

BUILTIN_WEIGHTS = {"g": 2, "P": 0, "J": -2, "A": 0, "C": 2, "B": -2}


def declare(name: str, slots: Sequence[tuple], weight: int, symmetry: SymmetrySpec | None = None,
            **kw) -> SymbolDecl:
    """Declare an auxiliary symbol in the global table.

    ``slots`` entries are ``(family, up)`` pairs where ``family`` may be an
    :class:`IndexFamily` or one of the strings ``"s"``, ``"t"``, ``"g"``.
    """
    fam = {"s": S, "t": T, "g": G}
    norm = tuple((fam.get(f, f) if isinstance(f, str) else IndexFamily(f), bool(u)) for f, u in slots)
    return TABLE.declare(SymbolDecl(name, norm, int(weight), symmetry or SymmetrySpec(), **kw))


def lookup(name: str) -> SymbolDecl:
    return TABLE[name]
