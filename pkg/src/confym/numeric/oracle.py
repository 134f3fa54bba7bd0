"""Numeric certificates: exact rational jets and torus quadrature.

:func:`rational_jet_zero` evaluates an expression exactly on seeded random
rational polynomial metrics at rational points; a nonzero identity is
detected with probability one.  :func:`torus_zero_integral` integrates a
scalar density over the flat torus ``T^n`` carrying seeded trigonometric
metrics, which certifies that the density is a divergence up to quadrature
error.  The action integral and its conformal invariance use the same
quadrature.
"""

from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction

import numpy as np

from ..expr import Expr
from .evaluate import demands, evaluate, prepare
from .geometry import GeometryPoint, required_jet_degree
from .metricspec import (MetricSpec, SpecError, conformal_rescale, random_periodic_metric,
                         random_rational_metric)

GAUGE_SYMBOLS = frozenset(("F", "omc", "om", "eta", "sec"))
BOUND_SYMBOLS = ("eta", "om", "sec")
DEFAULT_GRIDS = (16, 32)


def _symbols(e: Expr) -> set:
    return {f.symbol for t in e.terms for f in t.factors}


def _spec_options(e: Expr) -> dict:
    syms = _symbols(e)
    return {"gauge_rank": 2 if syms & GAUGE_SYMBOLS else 0,
            "bind": tuple(s for s in BOUND_SYMBOLS if s in syms),
            "ups": bool(syms & {"Ups", "Ups1"})}


def rational_points(dim: int, count: int, seed: int) -> list[list[Fraction]]:
    """The origin followed by seeded points with coordinates in ``{-1, -1/2, 0, 1/2, 1}``.

    Small coordinates keep the exact rationals short.
    """
    rng = random.Random(seed)
    choices = [Fraction(k, 2) for k in range(-2, 3)]
    pts = [[Fraction(0)] * dim]
    while len(pts) < count:
        pts.append([rng.choice(choices) for _ in range(dim)])
    return pts[:count]


def rational_jet_zero(e: Expr, dim: int, n_metrics: int = 3, n_points: int = 3,
                      jet_degree: int | None = None, seed: int = 0,
                      definitions: dict | None = None) -> tuple[bool, dict]:
    """Exact check that ``e`` vanishes on random rational metrics.

    Parameters
    ----------
    e
        Expression with any free indices; every component is tested.
    dim
        Manifold dimension (also substituted for ``n``).
    n_metrics, n_points
        Number of seeded random metrics and of points per metric.
    jet_degree
        Upper bound on the jet degree; by default the exact requirement of
        ``e`` is used.
    seed
        Seed of the metric and point generators (recorded in ``info``).

    Returns
    -------
    ok, info
        ``ok`` is ``True`` when every component is exactly zero; ``info``
        records seeds, degree and the first nonzero residual.

    Raises
    ------
    InsufficientDegree
        If ``jet_degree`` is below what ``e`` needs.
    """
    prepared = prepare(e, definitions)
    need = required_jet_degree(demands(prepared))
    degree = need if jet_degree is None else jet_degree
    opts = _spec_options(prepared)
    info: dict = {"seed": seed, "n_metrics": n_metrics, "n_points": n_points, "jet_degree": degree,
                  "metric_seeds": []}
    pts = rational_points(dim, n_points, seed)
    for k in range(n_metrics):
        mseed = seed * 1000 + k
        spec = random_rational_metric(dim, mseed, **opts)
        info["metric_seeds"].append(mseed)
        gp = GeometryPoint(spec, pts, max_degree=degree, exact=True)
        vals, _ = evaluate(prepared, gp)
        nz = [v for v in np.ravel(vals) if v != 0]
        if nz:
            info["residual"] = str(nz[0])
            info["failing_metric_seed"] = mseed
            return False, info
    return True, info


# ---------------------------------------------------------------------------
# torus quadrature


def torus_grid(spec: MetricSpec, N: int) -> tuple[np.ndarray, float]:
    """Uniform periodic grid over the active coordinates and the cell volume factor.

    Returns the points (``N^k x dim``, other coordinates zero) and the factor
    turning a grid mean into an integral over ``T^dim``.
    """
    if not all(spec.periodic):
        raise SpecError("torus quadrature needs a spec periodic in every coordinate")
    active = spec.active_coordinates() or (0,)
    if len(active) > 3:
        raise SpecError("torus quadrature supports fields varying in at most three coordinates")
    axis = 2 * np.pi * np.arange(N) / N
    pts = np.zeros((N ** len(active), spec.dim))
    for row, combo in enumerate(itertools.product(axis, repeat=len(active))):
        pts[row, list(active)] = combo
    return pts, (2 * np.pi) ** spec.dim


def integrate_density(e: Expr, spec: MetricSpec, N: int, definitions: dict | None = None
                      ) -> tuple[float, float]:
    """``∫ e dμ_g`` over the torus by the trapezoidal rule with ``N`` points per active axis.

    Returns the integral and ``∫ |e| dμ_g`` (a scale for relative errors).
    """
    prepared = prepare(e, definitions)
    if prepared.terms and prepared.free:
        raise SpecError("only scalar densities can be integrated")
    pts, vol = torus_grid(spec, N)
    degree = required_jet_degree(demands(prepared))
    gp = GeometryPoint(spec, pts, max_degree=degree, exact=False)
    vals, _ = evaluate(prepared, gp)
    g = gp.tensor("g")
    mu = np.sqrt(np.linalg.det(np.moveaxis(g, -1, 0)))
    return float(np.mean(vals * mu) * vol), float(np.mean(np.abs(vals) * mu) * vol)


def torus_zero_integral(e: Expr, dim: int, n_metrics: int = 3, seed: int = 0,
                        grids: tuple[int, int] = DEFAULT_GRIDS, tol: float = 1e-8,
                        definitions: dict | None = None) -> tuple[bool, dict]:
    """Check ``∫_{T^dim} e dμ = 0`` on seeded periodic metrics.

    The residual is ``|∫ e| / ∫ |e|`` at the finer grid; both grid values are
    reported.
    """
    prepared = prepare(e, definitions)
    opts = _spec_options(prepared)
    info: dict = {"seed": seed, "grids": list(grids), "tol": tol, "runs": []}
    ok = True
    for k in range(n_metrics):
        mseed = seed * 1000 + k
        spec = random_periodic_metric(dim, mseed, **opts)
        run = {"metric_seed": mseed}
        for N in grids:
            val, scale = integrate_density(prepared, spec, N)
            run[f"integral_{N}"] = val
            run[f"relative_{N}"] = abs(val) / scale if scale else 0.0
        rel = run[f"relative_{grids[-1]}"]
        ok = ok and rel < tol
        info["runs"].append(run)
    info["max_relative"] = max(r[f"relative_{grids[-1]}"] for r in info["runs"])
    return ok, info


# ---------------------------------------------------------------------------
# the action


def _action_expr(dim: int) -> Expr:
    from ..conformal_ops import action_density, form

    return action_density(form("F[a,b,^%G,%H]", "ab", "^%G,%H"), dim)


def action_integral(m: MetricSpec, grid: int = DEFAULT_GRIDS[-1]) -> float:
    """``S(A) = ∫ ⟨F, Q_2 F⟩ dμ`` on the torus for the potential of ``m``.

    Raises
    ------
    SpecError
        If ``m`` is not periodic or has no gauge potential.
    """
    if m.potential is None:
        raise SpecError("the action needs a gauge potential")
    return integrate_density(_action_expr(m.dim), m, grid)[0]


def action_invariance(m: MetricSpec, grids: tuple[int, int] = DEFAULT_GRIDS) -> dict:
    """Compare ``S`` for ``g`` and ``exp(2 Ups) g`` at two grid resolutions.

    Returns a dict with the actions and the relative residual
    ``|S(ĝ) - S(g)| / |S(g)|`` per grid; ``residual`` is the finer one.
    """
    if m.ups is None:
        raise SpecError("action invariance needs an Ups expression in the spec")
    base = m.with_fields(ups=None)
    hat = conformal_rescale(m)
    out: dict = {"metric": m.name, "seed": m.seed, "grids": list(grids)}
    for N in grids:
        s0 = action_integral(base, N)
        s1 = action_integral(hat, N)
        out[f"S_{N}"] = s0
        out[f"S_hat_{N}"] = s1
        out[f"residual_{N}"] = abs(s1 - s0) / abs(s0) if s0 else math.inf
    out["residual"] = out[f"residual_{grids[-1]}"]
    return out


def default_torus_spec(seed: int = 42) -> MetricSpec:
    """Seeded periodic metric with a rank-2 potential and periodic ``Ups`` on ``T^6``."""
    spec = random_periodic_metric(6, seed, gauge_rank=2, ups=True)
    return spec.with_fields(name=f"torus-{seed}")


__all__ = [
    "rational_jet_zero", "torus_zero_integral", "integrate_density", "action_integral",
    "action_invariance", "rational_points", "torus_grid", "default_torus_spec",
]
