"""Metric specifications: JSON format, expression compiler, random generators.

A :class:`MetricSpec` describes a metric ``g_ab(x)`` on coordinates
``x1..xn`` by expression strings, optionally with a conformal factor
``Ups(x)``, a matrix-valued gauge potential ``a_i^B_C(x)`` and component
expressions for further bound fields (``om``, ``eta``, ``sec``).  The
expression language is a whitelisted subset of Python syntax:
``+ - * / **`` (integer exponents), ``exp``, ``sin``, ``cos``, the constant
``pi`` and numeric literals.
"""

from __future__ import annotations

import ast
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

import numpy as np

from .jets import JetSpace

_FUNCS = ("exp", "sin", "cos")


class SpecError(ValueError):
    """Malformed metric specification or expression."""


# ---------------------------------------------------------------------------
# expressions


@dataclass(frozen=True)
class CompiledExpr:
    """A parsed expression with the set of coordinates it mentions."""

    text: str
    tree: ast.AST
    coords: frozenset
    uses_float: bool

    def __call__(self, js: JetSpace, env: dict) -> np.ndarray:
        return _eval(self.tree, js, env)


def _scan(node: ast.AST, dim: int, coords: set) -> bool:
    """Validate ``node``; collect coordinates; return whether float-only constructs appear."""
    if isinstance(node, ast.Expression):
        return _scan(node.body, dim, coords)
    if isinstance(node, ast.BinOp):
        if not isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)):
            raise SpecError(f"operator {type(node.op).__name__} is not allowed")
        if isinstance(node.op, ast.Pow):
            e = node.right
            neg = isinstance(e, ast.UnaryOp) and isinstance(e.op, ast.USub)
            lit = e.operand if neg else e
            if not (isinstance(lit, ast.Constant) and type(lit.value) is int):
                raise SpecError("exponents must be integer literals")
            return _scan(node.left, dim, coords)
        return _scan(node.left, dim, coords) | _scan(node.right, dim, coords)
    if isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.UAdd, ast.USub)):
            raise SpecError("only unary + and - are allowed")
        return _scan(node.operand, dim, coords)
    if isinstance(node, ast.Call):
        if not (isinstance(node.func, ast.Name) and node.func.id in _FUNCS) or len(node.args) != 1 \
                or node.keywords:
            raise SpecError(f"only the functions {', '.join(_FUNCS)} of one argument are allowed")
        return _scan(node.args[0], dim, coords)
    if isinstance(node, ast.Name):
        if node.id == "pi":
            return True
        if node.id.startswith("x") and node.id[1:].isdigit() and 1 <= int(node.id[1:]) <= dim:
            coords.add(int(node.id[1:]) - 1)
            return False
        raise SpecError(f"unknown name {node.id!r}")
    if isinstance(node, ast.Constant):
        if type(node.value) is int:
            return False
        if type(node.value) is float:
            return True
    raise SpecError(f"unsupported syntax: {ast.dump(node)[:60]}")


def compile_expr(text: str | int, dim: int) -> CompiledExpr:
    """Parse and validate an expression string over ``x1..x{dim}``."""
    text = str(text)
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise SpecError(f"cannot parse {text!r}: {exc.msg}") from None
    coords: set = set()
    uses_float = _scan(tree, dim, coords)
    return CompiledExpr(text, tree, frozenset(coords), uses_float)


def _eval(node: ast.AST, js: JetSpace, env: dict) -> np.ndarray:
    d = env["degree"]
    if isinstance(node, ast.Expression):
        return _eval(node.body, js, env)
    if isinstance(node, ast.Constant):
        return js.const(node.value, d)
    if isinstance(node, ast.Name):
        if node.id == "pi":
            return js.const(np.pi, d)
        return env[node.id]
    if isinstance(node, ast.UnaryOp):
        v = _eval(node.operand, js, env)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.Call):
        return getattr(js, node.func.id)(_eval(node.args[0], js, env))
    left = _eval(node.left, js, env)
    op = node.op
    if isinstance(op, ast.Pow):
        e = node.right
        k = -e.operand.value if isinstance(e, ast.UnaryOp) else e.value
        return js.power(left, k)
    right = _eval(node.right, js, env)
    if isinstance(op, ast.Add):
        return left + right
    if isinstance(op, ast.Sub):
        return left - right
    if isinstance(op, ast.Mult):
        return js.mul(left, right)
    return js.mul(left, js.reciprocal(right))


# ---------------------------------------------------------------------------
# the spec


def _nested(obj, depth: int, fn: Callable) -> Any:
    if depth == 0:
        return fn(obj)
    return [_nested(o, depth - 1, fn) for o in obj]


def _shape(obj, depth: int) -> tuple:
    out = []
    for _ in range(depth):
        out.append(len(obj))
        obj = obj[0]
    return tuple(out)


# natural slot layout of the bindable fields: (number of spacetime axes, gauge axes)
FIELD_LAYOUT = {"om": (2, 2), "eta": (2, 2), "sec": (0, 1)}


@dataclass
class MetricSpec:
    """Explicit metric (and optional gauge data) on ``R^n`` or the torus ``T^n``.

    Attributes
    ----------
    dim
        Number of coordinates.
    metric
        ``dim x dim`` nested list of expression strings.
    periodic
        Per-coordinate periodicity flags (period ``2 pi``).
    seed
        Seed recorded for reproducibility (generators store theirs here).
    ups
        Optional expression for the conformal factor ``Ups``.
    potential
        Optional ``dim x r x r`` nested list for ``a_i^B_C``.
    fields
        Optional component expressions for ``om``, ``eta`` (``dim x dim x r x r``)
        and ``sec`` (``r``).
    name
        Label used in reports.
    """

    dim: int
    metric: list
    periodic: list = field(default_factory=list)
    seed: int | None = None
    ups: str | None = None
    potential: list | None = None
    fields: dict = field(default_factory=dict)
    name: str = "metric"

    def __post_init__(self):
        n = self.dim
        if _shape(self.metric, 2) != (n, n):
            raise SpecError(f"metric must be a {n}x{n} matrix")
        self.metric = _nested(self.metric, 2, str)
        if not self.periodic:
            self.periodic = [False] * n
        if len(self.periodic) != n:
            raise SpecError("one periodicity flag per coordinate is required")
        self._g = _nested(self.metric, 2, lambda s: compile_expr(s, n))
        for i in range(n):
            for j in range(i):
                if ast.dump(self._g[i][j].tree) != ast.dump(self._g[j][i].tree):
                    raise SpecError(f"metric is not symmetric in entries ({i + 1},{j + 1})")
        self._ups = compile_expr(self.ups, n) if self.ups is not None else None
        self._pot = None
        if self.potential is not None:
            sh = _shape(self.potential, 3)
            if sh[0] != n or sh[1] != sh[2]:
                raise SpecError("potential must have shape dim x r x r")
            self.potential = _nested(self.potential, 3, str)
            self._pot = _nested(self.potential, 3, lambda s: compile_expr(s, n))
        self._fields = {}
        for key, comps in self.fields.items():
            if key not in FIELD_LAYOUT:
                raise SpecError(f"cannot bind field {key!r}")
            depth = sum(FIELD_LAYOUT[key])
            self.fields[key] = _nested(comps, depth, str)
            self._fields[key] = _nested(comps, depth, lambda s: compile_expr(s, n))

    # -- derived information ---------------------------------------------

    @property
    def rank(self) -> int:
        return len(self.potential[0]) if self.potential is not None else 0

    def compiled(self):
        out = [e for row in self._g for e in row]
        if self._ups is not None:
            out.append(self._ups)
        if self._pot is not None:
            out.extend(np.ravel(np.array(self._pot, dtype=object)).tolist())
        for comps in self._fields.values():
            out.extend(np.ravel(np.array(comps, dtype=object)).tolist())
        return out

    def active_coordinates(self) -> tuple[int, ...]:
        """Coordinates (0-based) on which some component depends."""
        s: set = set()
        for e in self.compiled():
            s |= e.coords
        return tuple(sorted(s))

    @property
    def uses_float(self) -> bool:
        return any(e.uses_float for e in self.compiled())

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        d = {"name": self.name, "dim": self.dim, "metric": self.metric, "periodic": self.periodic,
             "seed": self.seed}
        if self.ups is not None:
            d["ups"] = self.ups
        if self.potential is not None:
            d["potential"] = self.potential
        if self.fields:
            d["fields"] = self.fields
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricSpec":
        unknown = set(d) - {"name", "dim", "metric", "periodic", "seed", "ups", "potential", "fields"}
        if unknown:
            raise SpecError(f"unknown keys in metric spec: {sorted(unknown)}")
        try:
            return cls(dim=int(d["dim"]), metric=d["metric"], periodic=list(d.get("periodic", [])),
                       seed=d.get("seed"), ups=d.get("ups"), potential=d.get("potential"),
                       fields=dict(d.get("fields", {})), name=d.get("name", "metric"))
        except KeyError as exc:
            raise SpecError(f"metric spec lacks the key {exc.args[0]!r}") from None

    @classmethod
    def from_json(cls, text: str) -> "MetricSpec":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise SpecError(f"invalid JSON: {exc}") from None

    @classmethod
    def load(cls, path) -> "MetricSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def with_fields(self, **changes) -> "MetricSpec":
        d = self.to_dict()
        d.update(changes)
        return MetricSpec.from_dict(d)


def conformal_rescale(m: MetricSpec, ups: str | None = None) -> MetricSpec:
    """The metric ``exp(2 Ups) g``, using ``ups`` or the spec's own ``Ups``.

    Periodicity flags and gauge data are kept; ``Ups`` itself is dropped from
    the result.
    """
    u = ups if ups is not None else m.ups
    if u is None:
        raise SpecError("conformal_rescale needs an Ups expression")
    metric = [[f"exp(2*({u}))*({e})" for e in row] for row in m.metric]
    return m.with_fields(metric=metric, ups=None, name=f"{m.name}-rescaled")


# ---------------------------------------------------------------------------
# random generators


def _q(rng: random.Random, bound: int = 4, den: int = 8) -> Fraction:
    return Fraction(rng.randint(-bound, bound), rng.randint(1, den))


def _poly(rng: random.Random, coords, degree: int, scale: Fraction, nterms: int) -> str:
    parts = []
    for _ in range(nterms):
        c = _q(rng) * scale
        if c == 0:
            continue
        k = rng.randint(1, degree)
        mon = "*".join(f"x{rng.choice(coords) + 1}" for _ in range(k))
        parts.append(f"({c.numerator}/{c.denominator})*{mon}")
    return " + ".join(parts) if parts else "0"


def random_rational_metric(dim: int, seed: int, active=None, degree: int = 3,
                           scale: Fraction = Fraction(1, 4), gauge_rank: int = 0,
                           bind=(), ups: bool = False) -> MetricSpec:
    """Polynomial perturbation of the flat metric with rational coefficients.

    The perturbation is small near the origin, so the metric is positive
    definite at the rational sample points used by the oracle.
    """
    rng = random.Random(seed)
    coords = list(active if active is not None else range(dim))
    metric = [["" for _ in range(dim)] for _ in range(dim)]
    for i in range(dim):
        for j in range(i, dim):
            p = _poly(rng, coords, degree, scale, 3)
            metric[i][j] = metric[j][i] = (f"1 + {p}" if i == j else p)
    out: dict = {"dim": dim, "metric": metric, "seed": seed, "name": f"rational-{seed}"}

    def comp():
        return _poly(rng, coords, degree, Fraction(1, 2), 3)

    _add_gauge_data(out, dim, gauge_rank, bind, comp, rng, ups,
                    lambda: _poly(rng, coords, degree, Fraction(1, 2), 3))
    return MetricSpec.from_dict(out)


def conformally_flat_metric(dim: int, seed: int, active=None, degree: int = 2) -> MetricSpec:
    """``sigma^-2`` times the flat metric for a random rational polynomial ``sigma``."""
    rng = random.Random(seed)
    coords = list(active if active is not None else range(dim))
    sigma = f"1 + {_poly(rng, coords, degree, Fraction(1, 4), 4)}"
    metric = [[f"1/({sigma})**2" if i == j else "0" for j in range(dim)] for i in range(dim)]
    return MetricSpec.from_dict({"dim": dim, "metric": metric, "seed": seed,
                                 "name": f"conformally-flat-{seed}"})


def _trig(rng: random.Random, coords, amp: float, modes: int = 2) -> str:
    parts = []
    for _ in range(modes):
        k = [rng.randint(-2, 2) for _ in coords]
        if not any(k):
            k[0] = 1
        arg = " + ".join(f"{ki}*x{c + 1}" for ki, c in zip(k, coords) if ki)
        a = round(rng.uniform(-amp, amp), 4)
        fn = rng.choice(("sin", "cos"))
        parts.append(f"{a}*{fn}({arg})")
    return " + ".join(parts)


def random_periodic_metric(dim: int, seed: int, active=(0, 1), amplitude: float = 0.15,
                           gauge_rank: int = 0, bind=(), ups: bool = False) -> MetricSpec:
    """Trigonometric perturbation of the flat torus metric depending on ``active`` coordinates.

    Off-diagonal amplitudes are bounded by ``amplitude / dim`` so the metric
    stays diagonally dominant, hence positive definite everywhere.
    """
    rng = random.Random(seed)
    coords = list(active)
    metric = [["0" for _ in range(dim)] for _ in range(dim)]
    for i in range(dim):
        for j in range(i, dim):
            if i == j:
                metric[i][i] = f"1 + {_trig(rng, coords, amplitude)}"
            elif rng.random() < 0.5:
                metric[i][j] = metric[j][i] = _trig(rng, coords, amplitude / dim)
    out: dict = {"dim": dim, "metric": metric, "seed": seed, "periodic": [True] * dim,
                 "name": f"periodic-{seed}"}
    _add_gauge_data(out, dim, gauge_rank, bind, lambda: _trig(rng, coords, 0.5), rng, ups,
                    lambda: _trig(rng, coords, 0.3))
    return MetricSpec.from_dict(out)


def _add_gauge_data(out: dict, dim: int, rank: int, bind, comp, rng, ups: bool, ups_comp) -> None:
    if ups:
        out["ups"] = ups_comp()
    if rank:
        out["potential"] = [[[comp() for _ in range(rank)] for _ in range(rank)] for _ in range(dim)]
    fields = {}
    for key in bind:
        if key == "sec":
            fields[key] = [comp() for _ in range(max(rank, 1))]
            continue
        r = max(rank, 1)
        arr = [[[["0"] * r for _ in range(r)] for _ in range(dim)] for _ in range(dim)]
        for i in range(dim):
            for j in range(i + 1, dim):
                for B in range(r):
                    for C in range(r):
                        s = comp()
                        arr[i][j][B][C] = s
                        arr[j][i][B][C] = f"-({s})"
        fields[key] = arr
    if fields:
        out["fields"] = fields


__all__ = [
    "MetricSpec", "SpecError", "compile_expr", "conformal_rescale", "random_rational_metric",
    "conformally_flat_metric", "random_periodic_metric", "FIELD_LAYOUT",
]
