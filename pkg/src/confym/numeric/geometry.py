"""Curvature jets and covariant derivatives of an explicit metric at sample points.

Conventions match the symbolic engine: ``R[a,b,c,d]`` is ``R_ab^c_d`` with
``c`` lowered, where ``(∇_a∇_b - ∇_b∇_a) v^c = R_ab^c_d v^d``; the Ricci
tensor is ``R^c_acb``; ``P = (Ric - J g)/(n-2)`` with ``J = Sc/(2n-2)``;
``A_abc = ∇_b P_ca - ∇_c P_ba``; ``B_ab = ∇^c A_acb + P^cd C_cadb``.  Gauge
indices transform with ``∇_i s = ∂_i s + a_i s`` so that
``F = ∂a - ∂a + [a, a]``.

Each field is computed as a jet of just the degree its consumers need.
Before evaluating an expression, :meth:`GeometryPoint.plan` propagates the
demanded degrees through the dependency graph so that each field is
computed once, at the maximal degree required.
"""

from __future__ import annotations

import numpy as np

from ..symbols import TABLE, IndexFamily
from .jets import JetSpace, mpq
from .metricspec import MetricSpec, SpecError

# symbols that evaluate to an existing node
ALIASES = {"omc": "F"}
NUMERIC_SYMBOLS = frozenset(("g", "h", "R", "Ric", "Sc", "J", "P", "C", "A", "B", "Ups", "Ups1",
                             "F", "om", "eta", "omc", "sec", "X", "Y", "Z"))

_LETTERS = "abcdfghijklmnopqrstuvw"


def _kinds(symbol: str) -> tuple[str, ...]:
    """Axis kinds of a symbol's slots: ``s`` (spacetime, lowered), ``gu``/``gd`` (gauge)."""
    out = []
    for fam, up in TABLE[symbol].slots:
        if fam == IndexFamily.SPACETIME:
            out.append("s")
        elif fam == IndexFamily.GAUGE:
            out.append("gu" if up else "gd")
        else:
            raise SpecError(f"{symbol} has tractor slots and no jet representation")
    return tuple(out)


class InsufficientDegree(SpecError):
    """A requested quantity needs more derivatives than the jet degree provides."""


def _deps(node: tuple, d: int) -> list[tuple[tuple, int]]:
    name = node[0]
    if name == "cov":
        sym, k = node[1], node[2]
        if k == 0:
            return [((sym,), d)]
        deps = [(("cov", sym, k - 1), d + 1), (("Gamma",), d)]
        if any(kd != "s" for kd in _kinds(sym)):
            deps.append((("pot",), d))
        return deps
    table = {
        "ginv": [(("g",), d)],
        "Gamma": [(("g",), d + 1), (("ginv",), d)],
        "Rup": [(("Gamma",), d + 1)],
        "R": [(("Rup",), d), (("g",), d)],
        "Ric": [(("Gamma",), d + 1)],
        "Sc": [(("Ric",), d), (("ginv",), d)],
        "J": [(("Sc",), d)],
        "P": [(("Ric",), d), (("J",), d), (("g",), d)],
        "C": [(("R",), d), (("P",), d), (("g",), d)],
        "A": [(("cov", "P", 1), d)],
        "B": [(("cov", "A", 1), d), (("ginv",), d), (("P",), d), (("C",), d)],
        "Ups1": [(("cov", "Ups", 1), d)],
        "F": [(("pot",), d + 1)],
    }
    return table.get(name, [])


def plan_degrees(demands) -> dict[tuple, int]:
    """Maximal jet degree at which each node is needed for ``demands``.

    ``demands`` holds ``(symbol, nderivs)`` pairs evaluated at degree 0.
    """
    target: dict[tuple, int] = {}
    stack = [(("cov", ALIASES.get(s, s), k), 0) for s, k in demands]
    while stack:
        node, d = stack.pop()
        if target.get(node, -1) >= d:
            continue
        target[node] = d
        stack.extend(_deps(node, d))
    return target


def required_jet_degree(demands) -> int:
    """Jet degree of the source fields (metric, potential, ...) needed for ``demands``."""
    target = plan_degrees(demands)
    return max([target.get((s,), 0) for s in ("g", "Ups", "pot", "om", "eta", "sec")] + [1])


class GeometryPoint:
    """Jets of curvature and gauge data of ``spec`` at a batch of points.

    Parameters
    ----------
    spec
        The metric specification.
    points
        Array-like of shape ``(batch, dim)`` (or a single point).  Exact mode
        needs rational coordinates.
    max_degree
        Jet truncation degree ``D``; the metric is expanded to this order.
    exact
        Exact rational mode; defaults to ``True`` unless the spec uses
        floating point constructs.
    """

    def __init__(self, spec: MetricSpec, points, max_degree: int = 7, exact: bool | None = None):
        self.spec = spec
        self.dim = spec.dim
        self.exact = (not spec.uses_float) if exact is None else exact
        if self.exact and spec.uses_float:
            raise SpecError("exact mode needs a spec without floating point constants")
        pts = np.array(points, dtype=object)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.shape[1] != self.dim:
            raise SpecError(f"points must have {self.dim} coordinates")
        self.points = pts
        self.active = spec.active_coordinates() or (0,)
        self.js = JetSpace(len(self.active), max_degree, self.exact, batch=pts.shape[0])
        self.max_degree = max_degree
        self.rank = spec.rank or (len(spec.fields["sec"]) if "sec" in spec.fields else 0)
        self._cache: dict = {}
        self._target: dict = {}

    # -- planning ---------------------------------------------------------

    def plan(self, demands) -> None:
        """Record the degrees at which nodes will be requested.

        ``demands`` is an iterable of ``(symbol, nderivs)`` pairs, each to be
        evaluated at degree 0.
        """
        for node, d in plan_degrees(demands).items():
            if self._target.get(node, -1) < d:
                self._target[node] = d

    # -- node access ------------------------------------------------------

    def node(self, node: tuple, d: int) -> np.ndarray:
        d_eff = max(d, self._target.get(node, d))
        got = self._cache.get(node)
        if got is None or self.js.deg(got) < d_eff:
            got = self._compute(node, d_eff)
            self._cache[node] = got
        return self.js.truncate(got, d)

    def tensor(self, symbol: str, nderivs: int = 0) -> np.ndarray:
        """Values of ``∇…∇ symbol`` (derivative axes outermost first), shape ``(*axes, batch)``."""
        symbol = ALIASES.get(symbol, symbol)
        return self.js.value(self.node(("cov", symbol, nderivs), 0))

    # -- computations -----------------------------------------------------

    def _q(self, num: int, den: int = 1):
        return mpq(num, den) if self.exact else num / den

    def _coords_env(self, d: int) -> dict:
        env = {"degree": d}
        for pos, c in enumerate(self.active):
            col = self.points[:, c]
            x0 = self.js.convert(col) if self.exact else col.astype(np.float64)
            env[f"x{c + 1}"] = self.js.variable(pos, x0, d)
        return env

    def _source(self, comps, d: int) -> np.ndarray:
        if d > self.max_degree:
            raise InsufficientDegree(
                f"need jet degree {d} but the configured degree is {self.max_degree}")
        env = self._coords_env(d)
        arr = np.array(comps, dtype=object)
        shape = arr.shape
        out = self.js.zeros(shape, d)
        seen: dict = {}
        for ix in np.ndindex(*shape):
            ce = arr[ix]
            if ce.text not in seen:
                seen[ce.text] = ce(self.js, env)
            out[ix] = seen[ce.text]
        return out

    def _partials(self, T: np.ndarray) -> np.ndarray:
        """``∂_x T`` stacked on a new leading axis (degree drops by one)."""
        d = self.js.deg(T) - 1
        if d < 0:
            raise InsufficientDegree("jet degree exhausted while differentiating")
        zero = self.js.zeros(T.shape[:-2], d)
        parts = []
        for x in range(self.dim):
            if x in self.active:
                parts.append(self.js.deriv(T, self.active.index(x)))
            else:
                parts.append(zero)
        return np.stack(parts)

    def _compute(self, node: tuple, d: int) -> np.ndarray:
        js, n = self.js, self.dim
        name = node[0]
        if name == "g":
            return self._source(self.spec._g, d)
        if name == "Ups":
            if self.spec._ups is None:
                raise SpecError("the expression uses Ups but the spec defines none")
            return self._source(self.spec._ups, d)
        if name == "pot":
            if self.spec._pot is None:
                raise SpecError("the expression uses gauge data but the spec has no potential")
            return self._source(self.spec._pot, d)
        if name in ("om", "eta", "sec"):
            if name not in self.spec._fields:
                raise SpecError(f"unbound symbol {name!r}: the spec provides no components")
            return self._source(self.spec._fields[name], d)
        if name == "ginv":
            try:
                return js.inverse_matrix(self.node(("g",), d))
            except (ZeroDivisionError, np.linalg.LinAlgError):
                raise SpecError("singular metric at an evaluation point") from None
        if name == "Gamma":
            dg = self._partials(self.node(("g",), d + 1))  # dg[i,j,k] = ∂_i g_jk
            s = dg.transpose(1, 0, 2, 3, 4) + dg.transpose(1, 2, 0, 3, 4) - dg
            # s[e,b,c] = ∂_b g_ec + ∂_c g_eb - ∂_e g_bc
            return js.contract("ae,ebc->abc", self.node(("ginv",), d), s) * self._q(1, 2)
        if name == "Rup":
            G1 = self.node(("Gamma",), d + 1)
            dG = self._partials(G1)  # dG[a,c,b,d] = ∂_a Γ^c_bd
            t = dG.transpose(0, 2, 1, 3, 4, 5)
            G = js.truncate(G1, d)
            gg = js.contract("cae,ebd->abcd", G, G)
            return t - t.transpose(1, 0, 2, 3, 4, 5) + gg - gg.transpose(1, 0, 2, 3, 4, 5)
        if name == "R":
            return js.contract("ce,abed->abcd", self.node(("g",), d), self.node(("Rup",), d))
        if name == "Ric":
            # R_ca^c_b formed directly, avoiding the full Riemann tensor
            G1 = self.node(("Gamma",), d + 1)
            dG = self._partials(G1)  # dG[x,c,a,b] = ∂_x Γ^c_ab
            G = js.truncate(G1, d)
            trG = np.einsum("cce...->e...", G)  # Γ^c_ce
            return (np.einsum("ccab...->ab...", dG) - np.einsum("accb...->ab...", dG)
                    + js.contract("e,eab->ab", trG, G) - js.contract("cae,ecb->ab", G, G))
        if name == "Sc":
            return js.contract("ab,ab->", self.node(("ginv",), d), self.node(("Ric",), d))
        if name == "J":
            return self.node(("Sc",), d) * self._q(1, 2 * n - 2)
        if name == "P":
            g = self.node(("g",), d)
            Jg = js.mul(self.node(("J",), d)[None, None], g)
            return (self.node(("Ric",), d) - Jg) * self._q(1, n - 2)
        if name == "C":
            g, P = self.node(("g",), d), self.node(("P",), d)
            return (self.node(("R",), d) + js.contract("cb,ad->abcd", g, P)
                    - js.contract("ca,bd->abcd", g, P) + js.contract("da,bc->abcd", g, P)
                    - js.contract("db,ac->abcd", g, P))
        if name == "A":
            nP = self.node(("cov", "P", 1), d)
            return np.einsum("bca...->abc...", nP) - np.einsum("cba...->abc...", nP)
        if name == "B":
            ginv, P = self.node(("ginv",), d), self.node(("P",), d)
            t1 = js.contract("xc,xacb->ab", ginv, self.node(("cov", "A", 1), d))
            Pup = js.contract("ce,ef->cf", ginv, P)
            Pup = js.contract("cf,fd->cd", Pup, ginv)
            return t1 + js.contract("cd,cadb->ab", Pup, self.node(("C",), d))
        if name == "Ups1":
            return self.node(("cov", "Ups", 1), d)
        if name == "F":
            a1 = self.node(("pot",), d + 1)
            da = self._partials(a1)  # da[i,j] = ∂_i a_j
            a = js.truncate(a1, d)
            comm = js.contract("apq,bqr->abpr", a, a)
            return (da - da.transpose(1, 0, 2, 3, 4, 5)) + comm - comm.transpose(1, 0, 2, 3, 4, 5)
        if name == "cov":
            sym, k = node[1], node[2]
            if k == 0:
                return self.node((sym,), d)
            kinds = ("s",) * (k - 1) + _kinds(sym)
            return self._nabla(self.node(("cov", sym, k - 1), d + 1), kinds, d)
        raise SpecError(f"no numeric semantics for {name!r}")

    def _nabla(self, T: np.ndarray, kinds: tuple, d: int) -> np.ndarray:
        """Covariant derivative of ``T`` (at degree ``d + 1``) to degree ``d``."""
        js = self.js
        out = self._partials(T)
        Td = js.truncate(T, d)
        L = _LETTERS[: len(kinds)]
        Gam = self.node(("Gamma",), d) if "s" in kinds else None
        pot = self.node(("pot",), d) if any(k != "s" for k in kinds) else None
        for pos, kind in enumerate(kinds):
            Te = L[:pos] + "e" + L[pos + 1:]
            u = L[pos]
            if kind == "s":
                out = out - js.contract(f"ex{u},{Te}->x{L}", Gam, Td)
            elif kind == "gu":
                out = out + js.contract(f"x{u}e,{Te}->x{L}", pot, Td)
            else:
                out = out - js.contract(f"{Te},xe{u}->x{L}", Td, pot)
        return out


def geometry_at(m: MetricSpec, x, order: int = 0, jet_degree: int | None = None,
                exact: bool | None = None) -> GeometryPoint:
    """Geometry of ``m`` at the point(s) ``x`` with covariant derivatives up to ``order``.

    Curvature derivatives of order ``order`` need ``order + 2`` metric
    derivatives, the Cotton and Bach tensors one and two more.

    Raises
    ------
    InsufficientDegree
        If ``jet_degree < order + 2``.
    SpecError
        If the metric is singular at ``x``.
    """
    D = jet_degree if jet_degree is not None else order + 4
    if D < order + 2:
        raise InsufficientDegree(f"jet degree {D} is below order + 2 = {order + 2}")
    gp = GeometryPoint(m, x, max_degree=D, exact=exact)
    gp.node(("ginv",), 0)
    return gp


def tractor_components(dim: int, g: np.ndarray) -> dict[str, np.ndarray]:
    """Components of ``X^B``, ``Y^B``, ``Z^B_c`` and ``h_BC`` in the scale of ``g``.

    Tractor indices run over ``(top, middle block, bottom)``; ``X`` is the
    bottom slot, ``Y`` the top slot and ``Z`` the identity on the middle
    block.  ``g`` has shape ``(dim, dim, batch)``.
    """
    batch = g.shape[-1]
    m = dim + 2
    dt = g.dtype
    zero, one = (mpq(0), mpq(1)) if dt == object else (0.0, 1.0)

    def blank(shape):
        a = np.empty(shape + (batch,), dtype=dt)
        a.fill(zero)
        return a

    X, Y, Z, h = blank((m,)), blank((m,)), blank((m, dim)), blank((m, m))
    X[m - 1] = one
    Y[0] = one
    for c in range(dim):
        Z[c + 1, c] = one
    h[0, m - 1] = one
    h[m - 1, 0] = one
    h[1:m - 1, 1:m - 1] = g
    return {"X": X, "Y": Y, "Z": Z, "h": h}


__all__ = ["GeometryPoint", "geometry_at", "plan_degrees", "required_jet_degree", "tractor_components", "InsufficientDegree",
           "NUMERIC_SYMBOLS"]
