"""Truncated multivariate Taylor series (jets) with batched tensor arithmetic.

A jet of degree ``d`` in ``m`` variables holds the Taylor coefficients of
all monomials of total degree ``<= d`` in graded order (degree first).  The
monomials of degree ``<= d'`` form a prefix for every ``d' < d``, so
truncation is slicing and the degree of an array is read off its length.

Arrays have shape ``(*tensor_axes, batch, coeffs)``: the batch axis runs
over evaluation points (all points share one expansion structure), the last
axis over monomials.  Scalars are ``float64`` in float mode and
``gmpy2.mpq`` in exact mode; both use the same numpy code paths.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np
from gmpy2 import mpq


def monomials(nvars: int, degree: int) -> list[tuple[int, ...]]:
    """Exponent tuples of total degree ``<= degree`` in graded order."""
    out = []
    for d in range(degree + 1):
        block = [e for e in itertools.product(range(d + 1), repeat=nvars) if sum(e) == d]
        out.extend(sorted(block, reverse=True))
    return out


@lru_cache(maxsize=None)
def _tables(nvars: int, degree: int):
    mons = monomials(nvars, degree)
    index = {e: i for i, e in enumerate(mons)}
    sizes = [math.comb(d + nvars, nvars) for d in range(degree + 1)]
    I, J, K = [], [], []
    for i, ei in enumerate(mons):
        room = degree - sum(ei)
        for j in range(sizes[room]):
            ej = mons[j]
            I.append(i)
            J.append(j)
            K.append(index[tuple(a + b for a, b in zip(ei, ej))])
    I, J, K = np.array(I, dtype=np.intp), np.array(J, dtype=np.intp), np.array(K, dtype=np.intp)
    order = np.lexsort((J, I, K))
    I, J, K = I[order], J[order], K[order]
    starts = np.searchsorted(K, np.arange(len(mons)))
    npairs = [int(np.searchsorted(K, s)) for s in sizes]
    return mons, index, sizes, I, J, starts, npairs


class JetSpace:
    """Arithmetic on jets in ``nvars`` variables up to ``degree``.

    Parameters
    ----------
    nvars
        Number of jet variables.
    degree
        Maximal truncation degree handled by this space.
    exact
        Use exact rationals (``gmpy2.mpq``) instead of ``float64``.
    batch
        Length of the point axis carried by every array.
    """

    def __init__(self, nvars: int, degree: int, exact: bool = False, batch: int = 1):
        if degree < 0:
            raise ValueError("jet degree must be non-negative")
        self.nvars = nvars
        self.degree = degree
        self.exact = exact
        self.batch = batch
        (self.mons, self.index, self.sizes, self._I, self._J, self._starts,
         self._npairs) = _tables(nvars, degree)
        self._deg_of_size = {s: d for d, s in enumerate(self.sizes)}
        self._dtabs: dict = {}

    # -- helpers ----------------------------------------------------------

    @property
    def dtype(self):
        return object if self.exact else np.float64

    def deg(self, a: np.ndarray) -> int:
        try:
            return self._deg_of_size[a.shape[-1]]
        except KeyError:
            raise ValueError(f"array of trailing length {a.shape[-1]} is not a jet") from None

    def scalar(self, x):
        """Coerce a Python number to the scalar type of this space."""
        if self.exact:
            if isinstance(x, float):
                raise TypeError("floating point constants are not allowed in exact mode")
            return mpq(x)
        return float(x)

    def convert(self, a) -> np.ndarray:
        """Coerce an array of Python numbers to this space's scalar type."""
        a = np.asarray(a, dtype=object if self.exact else None)
        if self.exact:
            out = np.empty(a.shape, dtype=object)
            out.flat[:] = [mpq(x) for x in a.flat]
            return out
        return a.astype(np.float64)

    def zeros(self, shape: tuple, d: int) -> np.ndarray:
        """Zero jets with tensor shape ``shape`` (batch axis added)."""
        full = tuple(shape) + (self.batch, self.sizes[d])
        if self.exact:
            out = np.empty(full, dtype=object)
            out.fill(mpq(0))
            return out
        return np.zeros(full)

    def const(self, c, d: int, shape: tuple = ()) -> np.ndarray:
        """Constant jets; ``c`` is a number or an array broadcastable to ``shape + (batch,)``."""
        out = self.zeros(shape, d)
        if isinstance(c, np.ndarray):
            out[..., 0] = c
        else:
            out[..., 0] = self.scalar(c)
        return out

    def variable(self, v: int, x0, d: int) -> np.ndarray:
        """The jet of ``x0 + t_v``; ``x0`` is a number or a batch vector."""
        out = self.const(np.asarray(x0) if np.ndim(x0) else x0, d)
        if d >= 1:
            unit = [0] * self.nvars
            unit[v] = 1
            out[..., self.index[tuple(unit)]] = self.scalar(1)
        return out

    def truncate(self, a: np.ndarray, d: int) -> np.ndarray:
        if d > self.deg(a):
            raise ValueError(f"cannot raise jet degree from {self.deg(a)} to {d}")
        return a[..., : self.sizes[d]]

    @staticmethod
    def value(a: np.ndarray) -> np.ndarray:
        """Constant terms, i.e. the values at the expansion points."""
        return a[..., 0]

    # -- arithmetic -------------------------------------------------------

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Elementwise (broadcast) jet product, truncated to the lower degree."""
        d = min(self.deg(a), self.deg(b))
        p = self._npairs[d]
        prod = a[..., self._I[:p]] * b[..., self._J[:p]]
        return np.add.reduceat(prod, self._starts[: self.sizes[d]], axis=-1)

    def contract(self, spec: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """``einsum(spec)`` over the tensor axes combined with the jet product.

        ``spec`` names only tensor axes, e.g. ``"aeb,ecd->abcd"``; the batch
        axis is carried along.
        """
        d = min(self.deg(a), self.deg(b))
        p = self._npairs[d]
        ins, out = spec.split("->")
        sa, sb = ins.split(",")
        ga = a[..., self._I[:p]]
        gb = b[..., self._J[:p]]
        prod = np.einsum(f"{sa}YZ,{sb}YZ->{out}YZ", ga, gb)
        return np.add.reduceat(prod, self._starts[: self.sizes[d]], axis=-1)

    def _deriv_table(self, d: int, v: int):
        key = (d, v)
        tab = self._dtabs.get(key)
        if tab is None:
            src, fac = [], []
            for e in self.mons[: self.sizes[d - 1]]:
                up = list(e)
                up[v] += 1
                src.append(self.index[tuple(up)])
                fac.append(up[v])
            tab = (np.array(src, dtype=np.intp), self.convert(fac))
            self._dtabs[key] = tab
        return tab

    def deriv(self, a: np.ndarray, v: int) -> np.ndarray:
        """Partial derivative in jet variable ``v`` (degree drops by one)."""
        d = self.deg(a)
        if d == 0:
            raise ValueError("cannot differentiate a degree-0 jet")
        src, fac = self._deriv_table(d, v)
        return a[..., src] * fac

    def reciprocal(self, a: np.ndarray) -> np.ndarray:
        """``1/a`` for jets with invertible constant terms (elementwise)."""
        c = a[..., :1]
        if np.any(c == 0):
            raise ZeroDivisionError("jet with zero constant term is not invertible")
        inv_c = (mpq(1) / c) if self.exact else 1.0 / c
        h = a * inv_c
        h[..., 0] = self.scalar(0)
        d = self.deg(a)
        # 1/(1+h) = sum (-h)^k with h nilpotent
        term = self.const(1, d, a.shape[:-2])
        total = term.copy()
        for _ in range(d):
            term = -self.mul(term, h)
            total = total + term
        return total * inv_c

    def _series(self, a: np.ndarray, coeffs: list) -> np.ndarray:
        """``sum_k coeffs[k] h^k`` with ``h = a - a(0)``; coeffs may be batch vectors."""
        d = self.deg(a)
        h = a.copy()
        h[..., 0] = self.scalar(0)
        total = self.zeros(a.shape[:-2], d)
        total[..., 0] = coeffs[0]
        power = self.const(1, d, a.shape[:-2])
        for k in range(1, d + 1):
            power = self.mul(power, h)
            ck = coeffs[k][..., None] if isinstance(coeffs[k], np.ndarray) else coeffs[k]
            total = total + power * ck
        return total

    def _center(self, a: np.ndarray):
        c = a[..., 0]
        if self.exact:
            if np.any(c != 0):
                raise ValueError("exp/sin/cos in exact mode need a vanishing constant term")
            return None
        return c

    def exp(self, a: np.ndarray) -> np.ndarray:
        c = self._center(a)
        d = self.deg(a)
        if c is None:
            return self._series(a, [mpq(1, math.factorial(k)) for k in range(d + 1)])
        e = np.exp(c)
        return self._series(a, [e / math.factorial(k) for k in range(d + 1)])

    def sin(self, a: np.ndarray) -> np.ndarray:
        return self._trig(a, 0)

    def cos(self, a: np.ndarray) -> np.ndarray:
        return self._trig(a, 1)

    def _trig(self, a: np.ndarray, shift: int) -> np.ndarray:
        c = self._center(a)
        d = self.deg(a)
        # the k-th derivative of sin at c is sin(c + k pi / 2)
        if c is None:
            vals = [(0, 1, 0, -1)[(k + shift) % 4] for k in range(d + 1)]
            return self._series(a, [mpq(v, math.factorial(k)) for k, v in enumerate(vals)])
        s, co = np.sin(c), np.cos(c)
        cyc = (s, co, -s, -co)
        return self._series(a, [cyc[(k + shift) % 4] / math.factorial(k) for k in range(d + 1)])

    def power(self, a: np.ndarray, k: int) -> np.ndarray:
        if k < 0:
            return self.power(self.reciprocal(a), -k)
        out = self.const(1, self.deg(a), a.shape[:-2])
        for _ in range(k):
            out = self.mul(out, a)
        return out

    def inverse_matrix(self, m: np.ndarray) -> np.ndarray:
        """Inverse of a matrix-valued jet ``m[i, j, batch, :]``, solved degree by degree."""
        n = m.shape[0]
        d = self.deg(m)
        m0 = m[..., 0]
        if self.exact:
            inv0 = np.empty_like(m0)
            for b in range(m0.shape[-1]):
                inv0[..., b] = _exact_inverse(m0[..., b])
        else:
            inv0 = np.moveaxis(np.linalg.inv(np.moveaxis(m0, -1, 0)), 0, -1)
        out = self.const(inv0, d, (n, n))
        h = m.copy()
        h[..., 0] = self.scalar(0)
        # solve (m0 + h) X = 1 degree by degree: X_k = -m0^-1 (h X)_k
        for k in range(1, d + 1):
            lo, hi = self._npairs[k - 1], self._npairs[k]
            prod = np.einsum("ijYZ,jkYZ->ikYZ", h[..., self._I[lo:hi]], out[..., self._J[lo:hi]])
            starts = self._starts[self.sizes[k - 1]: self.sizes[k]] - lo
            block = np.add.reduceat(prod, starts, axis=-1)
            out[..., self.sizes[k - 1]: self.sizes[k]] = -np.einsum("ijY,jkYZ->ikYZ", inv0, block)
        return out


def _exact_inverse(m: np.ndarray) -> np.ndarray:
    """Gauss-Jordan inverse of a small rational matrix."""
    n = m.shape[0]
    a = [[mpq(m[i, j]) for j in range(n)] + [mpq(int(i == j)) for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular metric at the evaluation point")
        a[col], a[piv] = a[piv], a[col]
        p = a[col][col]
        a[col] = [x / p for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            out[i, j] = a[i][n + j]
    return out


__all__ = ["JetSpace", "monomials", "mpq"]
