"""Numeric evaluation of symbolic expressions at a :class:`GeometryPoint`.

Every factor becomes a component array in the variance it is written in
(spacetime indices are moved with ``g``, tractor indices with ``h``), and
each monomial is one ``einsum`` over the factor arrays plus the batch axis.
Weights are ignored: densities are trivialized by the metric's own scale.
"""

from __future__ import annotations

import string

import numpy as np

from ..calculus import Definition, substitute
from ..coeff import specialize
from ..expr import Expr, ExprError, Index
from ..symbols import TABLE, IndexFamily
from .geometry import NUMERIC_SYMBOLS, GeometryPoint, tractor_components
from .jets import _exact_inverse, mpq
from .metricspec import SpecError

_BATCH = "Z"
_SUBSCRIPTS = string.ascii_lowercase + string.ascii_uppercase.replace(_BATCH, "")
_TRACTOR_SYMBOLS = frozenset(("X", "Y", "Z", "h", "Omega"))


def prepare(e: Expr, definitions: dict | None = None) -> Expr:
    """Substitute ``definitions`` and expand tractor content into plain splitting operators."""
    if definitions:
        e = substitute(e, definitions)
    if any(f.symbol in _TRACTOR_SYMBOLS for t in e.terms for f in t.factors):
        from ..tractor import expand_omega, nabla_splitting

        e = nabla_splitting(expand_omega(e))
    return e


def demands(e: Expr) -> list[tuple[str, int]]:
    """``(symbol, nderivs)`` pairs of a prepared expression that need geometry jets."""
    return sorted({(f.symbol, len(f.derivs)) for t in e.terms for f in t.factors
                   if f.symbol not in _TRACTOR_SYMBOLS and not TABLE[f.symbol].parallel})


class _Context:
    """Per-evaluation cache of factor arrays in each written variance."""

    def __init__(self, gp: GeometryPoint):
        self.gp = gp
        self.exact = gp.exact
        self.cache: dict = {}
        self._metrics: dict | None = None

    def metrics(self) -> dict:
        if self._metrics is None:
            gp = self.gp
            g = gp.tensor("g")
            ginv = gp.js.value(gp.node(("ginv",), 0))
            tr = tractor_components(gp.dim, g)
            h = tr["h"]
            if self.exact:
                hinv = np.empty_like(h)
                for b in range(h.shape[-1]):
                    hinv[..., b] = _exact_inverse(h[..., b])
            else:
                hinv = np.moveaxis(np.linalg.inv(np.moveaxis(h, -1, 0)), 0, -1)
            self._metrics = {"g": g, "ginv": ginv, "h": h, "hinv": hinv, **tr}
        return self._metrics

    def base(self, symbol: str, k: int) -> tuple[np.ndarray, tuple]:
        """Array in natural variance and the natural ``up`` flags of its axes."""
        natural = tuple(up for _, up in TABLE[symbol].slots)
        if symbol in ("X", "Y", "Z", "h"):
            if k:
                raise SpecError(f"derivatives of {symbol} must be expanded before evaluation")
            return self.metrics()[symbol], natural
        return self.gp.tensor(symbol, k), (False,) * k + natural

    def factor(self, f) -> np.ndarray:
        key = f.symbol, len(f.derivs), tuple(i.up for i in f.derivs + f.slots)
        got = self.cache.get(key)
        if got is not None:
            return got
        arr, natural = self.base(f.symbol, len(f.derivs))
        fams = [IndexFamily.SPACETIME] * len(f.derivs) + [fam for fam, _ in TABLE[f.symbol].slots]
        for pos, (ix, nat) in enumerate(zip(f.derivs + f.slots, natural)):
            if ix.up == nat:
                continue
            fam = fams[pos]
            if fam == IndexFamily.GAUGE:
                raise ExprError(f"gauge index {ix} of {f.symbol} is not in its natural position")
            m = self.metrics()
            if fam == IndexFamily.SPACETIME:
                mat = m["ginv"] if ix.up else m["g"]
            else:
                mat = m["hinv"] if ix.up else m["h"]
            arr = np.moveaxis(np.einsum("pqZ,q...Z->p...Z", mat, np.moveaxis(arr, pos, 0)), 0, pos)
        self.cache[key] = arr
        return arr


def _coefficient(c, dim: int, exact: bool):
    q = specialize(c, dim)
    return mpq(q.numerator, q.denominator) if exact else float(q)


def evaluate(e: Expr, gp: GeometryPoint, definitions: dict[str, Definition] | None = None
             ) -> tuple[np.ndarray, tuple[Index, ...]]:
    """Components of ``e`` at the points of ``gp``.

    Parameters
    ----------
    e
        Expression; coefficients depending on ``n`` are specialized to
        ``gp.dim``.
    gp
        Geometry at a batch of points.
    definitions
        Extra symbol definitions substituted first (for instance the
        extracted obstruction tensor).

    Returns
    -------
    values, free
        ``values`` has shape ``(*free_axes, batch)`` with the free indices in
        name order, written variance as in ``e``; ``free`` lists them.

    Raises
    ------
    SpecError
        On a symbol without numeric semantics (unbound symbol).
    """
    e = prepare(e, definitions)
    for t in e.terms:
        for f in t.factors:
            if f.symbol not in NUMERIC_SYMBOLS:
                raise SpecError(f"unbound symbol {f.symbol!r}")
    free = tuple(sorted(e.free, key=lambda i: (i.name, i.up))) if e.terms else ()
    gp.plan(demands(e))
    ctx = _Context(gp)
    total = None
    for t in e.terms:
        if any(TABLE[f.symbol].parallel and f.derivs for f in t.factors):
            continue
        names: dict[str, str] = {}
        ops, subs = [], []
        for f in t.factors:
            s = ""
            for ix in f.derivs + f.slots:
                if ix.name not in names:
                    if len(names) >= len(_SUBSCRIPTS):
                        raise ExprError("too many distinct indices in one monomial")
                    names[ix.name] = _SUBSCRIPTS[len(names)]
                s += names[ix.name]
            ops.append(ctx.factor(f))
            subs.append(s + _BATCH)
        out = "".join(names[i.name] for i in free) + _BATCH
        coef = _coefficient(t.coef, gp.dim, gp.exact)
        if ops:
            val = np.einsum(",".join(subs) + "->" + out, *ops, optimize="greedy") * coef
        else:
            val = np.full((gp.js.batch,), coef, dtype=object if gp.exact else np.float64)
        total = val if total is None else total + val
    if total is None:
        shape = tuple(gp.dim if i.family == IndexFamily.SPACETIME else
                      gp.dim + 2 if i.family == IndexFamily.TRACTOR else gp.rank for i in free)
        total = gp.js.value(gp.js.zeros(shape, 0))
    return total, free


__all__ = ["evaluate", "prepare", "demands"]
