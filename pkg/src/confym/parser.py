"""Parser for the ASCII tensor expression language.

Grammar::

    expr   := ["+"|"-"] term (("+"|"-") term)*  |  "0"
    term   := coef | [coef "*"] factor ("*" factor)*
    coef   := rational | "(" poly ")" ["/" "(" poly ")"]
    factor := ["nd[" indexlist "]" "("] symbol "[" indexlist "]" [")"]
    index  := ["^"] identifier

Spacetime indices are lowercase identifiers, tractor indices uppercase,
gauge indices are uppercase names prefixed with ``%``.  ``delta`` is
accepted as a spelling of the metric ``g`` (in mixed position it is the
Kronecker delta).
"""

from __future__ import annotations

import re
from fractions import Fraction

from .coeff import parse_coef
from .expr import Expr, ExprError, Factor, Index, Term, validate
from .symbols import TABLE, family_of_name

_ALIASES = {"delta": "g"}


class ParseError(ExprError):
    """Syntax or semantic error with a source position."""

    def __init__(self, msg: str, text: str = "", pos: int = 0):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"{msg} (line {line}, column {col})")
        self.line = line
        self.column = col


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:/\d+)?)
  | (?P<ident>%?[A-Za-z][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()\[\],])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind != "ws":
            toks.append((kind, m.group(kind), pos))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    # helpers
    def peek(self, k: int = 0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value:
            raise ParseError(f"expected {value!r}, found {val or 'end of input'!r}", self.text, pos)
        return pos

    def error(self, msg: str):
        raise ParseError(msg, self.text, self.peek()[2])

    # grammar
    def expr(self) -> Expr:
        terms = []
        sign = 1
        if self.peek()[1] in ("+", "-"):
            sign = -1 if self.take()[1] == "-" else 1
        terms.append(self.term(sign))
        while self.peek()[1] in ("+", "-"):
            sign = -1 if self.take()[1] == "-" else 1
            terms.append(self.term(sign))
        if self.peek()[0] != "end":
            self.error(f"unexpected token {self.peek()[1]!r}")
        return Expr(terms)

    def _coef_ahead(self) -> bool:
        kind, val, _ = self.peek()
        return kind == "num" or val == "("

    def coef(self):
        kind, val, pos = self.peek()
        if kind == "num":
            self.take()
            return Fraction(val)
        # parenthesised polynomial, optional "/ (poly)"
        start = self.expect("(")
        depth = 1
        while depth:
            k, v, p = self.take()
            if k == "end":
                raise ParseError("unbalanced parenthesis", self.text, start)
            depth += v == "("
            depth -= v == ")"
        end = self.toks[self.i - 1][2]
        num_text = self.text[start + 1:end]
        den_text = "1"
        if self.peek()[1] == "/" and self.peek(1)[1] == "(":
            self.take()
            s2 = self.expect("(")
            depth = 1
            while depth:
                k, v, p = self.take()
                if k == "end":
                    raise ParseError("unbalanced parenthesis", self.text, s2)
                depth += v == "("
                depth -= v == ")"
            den_text = self.text[s2 + 1:self.toks[self.i - 1][2]]
        try:
            return parse_coef(f"({num_text})/({den_text})")
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"bad coefficient: {exc}", self.text, start) from None

    def term(self, sign: int) -> Term:
        coef = Fraction(sign)
        factors = []
        if self._coef_ahead():
            c = self.coef()
            coef = coef * c if not isinstance(c, Fraction) else c * sign
            if self.peek()[1] != "*":
                return Term(coef, ())
            self.take()
        factors.append(self.factor())
        while self.peek()[1] == "*":
            self.take()
            factors.append(self.factor())
        return Term(coef, tuple(factors))

    def indexlist(self) -> tuple:
        self.expect("[")
        out = []
        if self.peek()[1] == "]":
            self.take()
            return ()
        while True:
            up = False
            if self.peek()[1] == "^":
                self.take()
                up = True
            kind, val, pos = self.take()
            if kind != "ident":
                raise ParseError(f"expected an index name, found {val!r}", self.text, pos)
            out.append(Index(val, family_of_name(val), up))
            k2, v2, p2 = self.take()
            if v2 == "]":
                return tuple(out)
            if v2 != ",":
                raise ParseError(f"expected ',' or ']', found {v2!r}", self.text, p2)

    def factor(self) -> Factor:
        kind, val, pos = self.peek()
        derivs: tuple = ()
        wrapped = False
        if kind == "ident" and val == "nd" and self.peek(1)[1] == "[":
            self.take()
            derivs = self.indexlist()
            self.expect("(")
            wrapped = True
        kind, val, pos = self.take()
        if kind != "ident" or val.startswith("%"):
            raise ParseError(f"expected a symbol name, found {val!r}", self.text, pos)
        name = _ALIASES.get(val, val)
        if name not in TABLE:
            raise ParseError(f"unknown symbol {val!r}", self.text, pos)
        slots = self.indexlist()
        if wrapped:
            self.expect(")")
        decl = TABLE[name]
        if len(slots) != decl.rank:
            raise ParseError(f"symbol {name} takes {decl.rank} indices, got {len(slots)}", self.text, pos)
        for k, (i, (fam, _)) in enumerate(zip(slots, decl.slots)):
            if i.family != fam:
                raise ParseError(f"index {i.name} has the wrong family for slot {k} of {name}", self.text, pos)
        for i in derivs:
            if i.family.name != "SPACETIME":
                raise ParseError(f"derivative index {i.name} must be a spacetime index", self.text, pos)
        return Factor(name, derivs, slots)


def parse(text: str, check: bool = True) -> Expr:
    """Parse ``text`` into a validated :class:`Expr`.

    Parameters
    ----------
    text
        Source in the expression language; ``"0"`` denotes the empty sum.
    check
        When true (default) structural diagnostics raise :class:`ParseError`.

    Raises
    ------
    ParseError
        On syntax errors (with line and column), unknown symbols, index
        family mismatches, free-index or weight mismatches across terms.
    """
    if text.strip() == "0":
        return Expr()
    p = _Parser(text)
    e = p.expr()
    if check:
        diags = validate(e)
        if diags:
            d = diags[0]
            if "free index mismatch" in d:
                msg = f"free-index mismatch: {d}"
            else:
                msg = d
            raise ParseError(msg, text, 0)
    return e

