"""Rational functions in the dimension symbol ``n`` over the rationals.

Coefficients of symbolic tensor expressions live in the field Q(n).  Most
coefficients are plain rationals, so the common case is represented by
:class:`fractions.Fraction` directly; a :class:`RatFunc` appears only when
``n`` genuinely occurs.  Arithmetic between the two kinds goes through the
usual operator protocol and collapses back to ``Fraction`` whenever the
result is constant.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Union

Poly = tuple  # tuple[Fraction, ...], lowest degree first, no trailing zeros

_ZERO = Fraction(0)
_ONE = Fraction(1)


def _trim(p: Iterable[Fraction]) -> Poly:
    c = list(p)
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def _padd(p: Poly, q: Poly) -> Poly:
    m = max(len(p), len(q))
    return _trim((p[i] if i < len(p) else _ZERO) + (q[i] if i < len(q) else _ZERO) for i in range(m))


def _pneg(p: Poly) -> Poly:
    return tuple(-c for c in p)


def _pmul(p: Poly, q: Poly) -> Poly:
    if not p or not q:
        return ()
    out = [_ZERO] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return _trim(out)


def _pscale(p: Poly, s: Fraction) -> Poly:
    if s == 0:
        return ()
    return tuple(c * s for c in p)


def _pdivmod(p: Poly, q: Poly) -> tuple[Poly, Poly]:
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(p)
    dq = len(q) - 1
    lead = q[-1]
    quot = [_ZERO] * max(len(p) - dq, 1)
    while len(r) - 1 >= dq and r:
        k = len(r) - 1 - dq
        f = r[-1] / lead
        quot[k] = f
        for i, c in enumerate(q):
            r[i + k] -= f * c
        r = list(_trim(r))
    return _trim(quot), tuple(r)


def _pgcd(p: Poly, q: Poly) -> Poly:
    while q:
        _, r = _pdivmod(p, q)
        p, q = q, r
    if not p:
        return ()
    return _pscale(p, 1 / p[-1])


def _peval(p: Poly, x: Fraction) -> Fraction:
    acc = _ZERO
    for c in reversed(p):
        acc = acc * x + c
    return acc


class RatFunc:
    """A non-constant element of Q(n), stored as ``num/den``.

    The pair is kept coprime with a monic denominator.  Instances are
    immutable and hashable; constructing one from data that reduces to a
    constant is done through :func:`ratfunc`, which then returns a
    ``Fraction`` instead.
    """

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: Poly, den: Poly):
        self.num = num
        self.den = den
        self._hash = hash((num, den))

    # arithmetic ---------------------------------------------------------
    @staticmethod
    def _parts(x) -> tuple[Poly, Poly]:
        if isinstance(x, RatFunc):
            return x.num, x.den
        if isinstance(x, (int, Fraction)):
            return _trim((Fraction(x),)), (_ONE,)
        return NotImplemented  # type: ignore[return-value]

    def __add__(self, other):
        o = self._parts(other)
        if o is NotImplemented:
            return NotImplemented
        on, od = o
        if od == self.den:
            return ratfunc(_padd(self.num, on), od)
        return ratfunc(_padd(_pmul(self.num, od), _pmul(on, self.den)), _pmul(self.den, od))

    __radd__ = __add__

    def __neg__(self):
        return RatFunc(_pneg(self.num), self.den)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._parts(other)
        if o is NotImplemented:
            return NotImplemented
        return self + ratfunc(_pneg(o[0]), o[1])

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._parts(other)
        if o is NotImplemented:
            return NotImplemented
        on, od = o
        return ratfunc(_pmul(self.num, on), _pmul(self.den, od))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._parts(other)
        if o is NotImplemented:
            return NotImplemented
        on, od = o
        if not on:
            raise ZeroDivisionError("division by zero coefficient")
        return ratfunc(_pmul(self.num, od), _pmul(self.den, on))

    def __rtruediv__(self, other):
        o = self._parts(other)
        if o is NotImplemented:
            return NotImplemented
        return ratfunc(_pmul(o[0], self.den), _pmul(o[1], self.num))

    def __eq__(self, other):
        if isinstance(other, RatFunc):
            return self.num == other.num and self.den == other.den
        return False

    def __hash__(self):
        return self._hash

    def __bool__(self):
        return True

    def __repr__(self):
        return f"RatFunc({format_coef(self)!r})"

    def __call__(self, value) -> Fraction:
        return specialize(self, value)


Coefficient = Union[Fraction, RatFunc]


def ratfunc(num: Poly, den: Poly) -> Coefficient:
    """Build a reduced coefficient from numerator and denominator polynomials."""
    num = _trim(Fraction(c) for c in num)
    den = _trim(Fraction(c) for c in den)
    if not den:
        raise ZeroDivisionError("zero denominator polynomial")
    if not num:
        return _ZERO
    if len(den) > 1:
        g = _pgcd(num, den)
        if len(g) > 1:
            num = _pdivmod(num, g)[0]
            den = _pdivmod(den, g)[0]
    lead = den[-1]
    if lead != 1:
        num = _pscale(num, 1 / lead)
        den = _pscale(den, 1 / lead)
    if len(den) == 1 and len(num) == 1:
        return num[0]
    return RatFunc(num, den)


N: Coefficient = ratfunc((0, 1), (1,))
"""The dimension symbol ``n`` as a coefficient."""


def as_coef(x) -> Coefficient:
    """Coerce ints, Fractions, strings, and coefficients to a coefficient."""
    if isinstance(x, RatFunc):
        return x
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return parse_coef(x)
    raise TypeError(f"cannot use {type(x).__name__} as a coefficient")


def is_constant(c: Coefficient) -> bool:
    return not isinstance(c, RatFunc)


def specialize(c: Coefficient, value) -> Fraction:
    """Evaluate ``c`` at ``n = value``.

    Raises
    ------
    ZeroDivisionError
        If the denominator vanishes at ``value``.
    """
    if not isinstance(c, RatFunc):
        return Fraction(c)
    v = Fraction(value)
    d = _peval(c.den, v)
    if d == 0:
        raise ZeroDivisionError(f"coefficient {format_coef(c)} has a pole at n={v}")
    return _peval(c.num, v) / d


def numerator_denominator(c: Coefficient) -> tuple[Poly, Poly]:
    """Return ``(num, den)`` polynomial tuples for any coefficient."""
    if isinstance(c, RatFunc):
        return c.num, c.den
    return _trim((Fraction(c),)), (_ONE,)


# printing ---------------------------------------------------------------

def _fmt_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_poly(p: Poly) -> str:
    """Render a polynomial in ``n``, highest degree first (``2*n^2-3*n+1``)."""
    if not p:
        return "0"
    parts: list[str] = []
    for k in range(len(p) - 1, -1, -1):
        c = p[k]
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        a = abs(c)
        if k == 0:
            body = _fmt_rational(a)
        else:
            mono = "n" if k == 1 else f"n^{k}"
            body = mono if a == 1 else f"{_fmt_rational(a)}*{mono}"
        parts.append((sign, body))
    first_sign, first_body = parts[0]
    out = ("-" if first_sign == "-" else "") + first_body
    for s, b in parts[1:]:
        out += s + b
    return out


def format_coef(c: Coefficient) -> str:
    """Render a coefficient in the expression-language ``coef`` syntax."""
    if not isinstance(c, RatFunc):
        return _fmt_rational(Fraction(c))
    return f"({format_poly(c.num)})/({format_poly(c.den)})"


def latex_coef(c: Coefficient) -> str:
    if not isinstance(c, RatFunc):
        q = Fraction(c)
        if q.denominator == 1:
            return str(q.numerator)
        return rf"\frac{{{q.numerator}}}{{{q.denominator}}}"
    num = format_poly(c.num).replace("*", "")
    den = format_poly(c.den).replace("*", "")
    return rf"\frac{{{num}}}{{{den}}}"


# parsing ----------------------------------------------------------------

_POLY_TOKEN = re.compile(r"\s*(?:(\d+(?:/\d+)?)|(n)|([-+*^()]))")


def parse_poly(text: str) -> Poly:
    """Parse a polynomial in ``n`` such as ``n^2 - 3*n + 1/2``.

    Supports ``+ - *``, non-negative integer powers via ``^``, parentheses,
    and rational literals.
    """
    toks: list[str] = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _POLY_TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"bad polynomial syntax at {pos}: {text!r}")
        toks.append(m.group(m.lastindex))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    it = _PolyParser(toks)
    p = it.expr()
    if it.i != len(toks):
        raise ValueError(f"trailing tokens in polynomial {text!r}")
    return p


class _PolyParser:
    def __init__(self, toks: list[str]):
        self.toks = toks
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self):
        t = self.peek()
        self.i += 1
        return t

    def expr(self) -> Poly:
        sign = 1
        if self.peek() in ("+", "-"):
            sign = -1 if self.take() == "-" else 1
        acc = _pscale(self.term(), Fraction(sign))
        while self.peek() in ("+", "-"):
            s = self.take()
            t = self.term()
            acc = _padd(acc, t if s == "+" else _pneg(t))
        return acc

    def term(self) -> Poly:
        acc = self.power()
        while self.peek() == "*":
            self.take()
            acc = _pmul(acc, self.power())
        return acc

    def power(self) -> Poly:
        base = self.atom()
        if self.peek() == "^":
            self.take()
            e = self.take()
            if e is None or not e.isdigit():
                raise ValueError("exponent must be a non-negative integer")
            out: Poly = (_ONE,)
            for _ in range(int(e)):
                out = _pmul(out, base)
            return out
        return base

    def atom(self) -> Poly:
        t = self.take()
        if t is None:
            raise ValueError("unexpected end of polynomial")
        if t == "n":
            return (_ZERO, _ONE)
        if t == "(":
            p = self.expr()
            if self.take() != ")":
                raise ValueError("unbalanced parenthesis in polynomial")
            return p
        if t == "-":
            return _pneg(self.atom())
        if re.fullmatch(r"\d+(?:/\d+)?", t):
            return _trim((Fraction(t),))
        raise ValueError(f"unexpected token {t!r} in polynomial")


def parse_coef(text: str) -> Coefficient:
    """Parse ``"3/2"``, ``"(n-4)/(1)"`` or any ``(poly)/(poly)`` form."""
    text = text.strip()
    m = re.fullmatch(r"\((.*)\)\s*/\s*\((.*)\)", text)
    if m and _balanced(m.group(1)) and _balanced(m.group(2)):
        return ratfunc(parse_poly(m.group(1)), parse_poly(m.group(2)))
    p = parse_poly(text)
    return ratfunc(p, (_ONE,))


def _balanced(s: str) -> bool:
    depth = 0
    for ch in s:
        depth += ch == "("
        depth -= ch == ")"
        if depth < 0:
            return False
    return depth == 0
