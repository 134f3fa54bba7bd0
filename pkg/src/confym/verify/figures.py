"""Reference term lists for the tractor computation of the 𝔇 operator.

Every list is written in the ASCII expression language, one term per
string.  In the two lists that carry an antisymmetrised index pair the
pair is spelled ``q`` (first) and ``c`` (second); see :func:`antisym_lower`.
All lists are dimension-six statements with tractor indices ``D`` (up) and
``E`` (down) and the free form index ``c``.
"""

from __future__ import annotations

import re
from fractions import Fraction

from ..expr import Expr
from ..parser import parse

# (d δ Ω)_{qc}; antisymmetrise q and c.
DDELTA_OMEGA = [
    "4*P[q,^d]*X[^D]*Z[E,^e]*A[c,d,e]",
    "4*Y[^D]*Z[E,^e]*A[c,q,e]",
    "4*Z[^D,^d]*P[q,^e]*X[E]*A[c,d,e]",
    "4*Z[^D,^d]*Y[E]*A[c,d,q]",
    "-4*Z[^D,^d]*Z[E,^e]*nd[q](A[c,d,e])",
    "2*Z[^D,q]*Z[E,^e]*B[e,c]",
    "2*X[^D]*Z[E,^e]*nd[q](B[e,c])",
    "-2*Z[E,q]*Z[^D,^e]*B[e,c]",
    "-2*X[E]*Z[^D,^e]*nd[q](B[e,c])",
]

# (δ d δ Ω)_c; antisymmetrise the lower q with c, the upper q stays.
DELTA_DDELTA_OMEGA = [
    "4*X[^D]*X[E]*P[q,^d]*P[^q,^e]*A[c,d,e]",
    "4*X[^D]*Y[E]*P[q,^d]*A[c,d,^q]",
    "-4*X[^D]*Z[E,^e]*P[q,^d]*nd[^q](A[c,d,e])",
    "-4*X[^D]*Z[E,^e]*nd[^q](P[q,^d])*A[c,d,e]",
    "-4*Z[^D,^q]*Z[E,^e]*P[q,^d]*A[c,d,e]",
    "4*Y[^D]*X[E]*P[^q,^e]*A[c,q,e]",
    "-4*Y[^D]*Z[E,^e]*nd[^q](A[c,q,e])",
    "-4*Z[^D,^d]*Z[E,^e]*P[^q,d]*A[c,q,e]",
    "4*X[^D]*X[E]*P[^q,^d]*P[q,^e]*A[c,d,e]",
    "4*Y[^D]*X[E]*P[q,^e]*A[c,^q,e]",
    "-4*Z[^D,^d]*X[E]*P[q,^e]*nd[^q](A[c,d,e])",
    "-4*Z[^D,^d]*X[E]*nd[^q](P[q,^e])*A[c,d,e]",
    "-4*Z[^D,^d]*Z[E,^q]*P[q,^e]*A[c,d,e]",
    "4*X[^D]*Y[E]*P[^q,^d]*A[c,d,q]",
    "-4*Z[^D,^d]*Y[E]*nd[^q](A[c,d,q])",
    "-4*Z[^D,^d]*Z[E,^e]*P[^q,e]*A[c,d,q]",
    "-4*X[^D]*Z[E,^e]*P[^q,^d]*nd[q](A[c,d,e])",
    "-4*Y[^D]*Z[E,^e]*nd[q](A[c,^q,e])",
    "-4*Z[^D,^d]*X[E]*P[^q,^e]*nd[q](A[c,d,e])",
    "-4*Z[^D,^d]*Y[E]*nd[q](A[c,d,^q])",
    "4*Z[^D,^d]*Z[E,^e]*nd[^q,q](A[c,d,e])",
    "2*X[^D]*Z[E,^e]*P[^q,q]*B[e,c]",
    "2*Y[^D]*Z[E,^e]*g[^q,q]*B[e,c]",
    "2*Z[^D,q]*X[E]*P[^q,^e]*B[e,c]",
    "2*Z[^D,q]*Y[E]*B[^q,c]",
    "-2*Z[^D,q]*Z[E,^e]*nd[^q](B[e,c])",
    "2*X[^D]*Y[E]*nd[q](B[^q,c])",
    "-2*X[^D]*Z[E,^e]*nd[^q,q](B[e,c])",
    "-2*Z[^D,^q]*Z[E,^e]*nd[q](B[e,c])",
    "-2*Z[E,q]*X[^D]*P[^q,^e]*B[e,c]",
    "-2*Z[E,q]*Y[^D]*B[^q,c]",
    "-2*X[E]*Z[^D,^e]*P[^q,q]*B[e,c]",
    "-2*Y[E]*Z[^D,^e]*g[^q,q]*B[e,c]",
    "2*Z[E,q]*Z[^D,^e]*nd[^q](B[e,c])",
    "-2*X[E]*Y[^D]*nd[q](B[^q,c])",
    "2*X[E]*Z[^D,^e]*nd[^q,q](B[e,c])",
    "2*Z[E,^q]*Z[^D,^e]*nd[q](B[e,c])",
]

# -4 (δ (P # Ω))_c
DELTA_PHASH_OMEGA = [
    "-4*X[^D]*Z[E,^e]*P[b,^k]*P[^b,^d]*C[k,c,d,e]",
    "-4*Y[^D]*Z[E,^e]*P[^d,^k]*C[k,c,d,e]",
    "-4*Z[^D,^d]*X[E]*P[b,^k]*P[^b,^e]*C[k,c,d,e]",
    "-4*Z[^D,^d]*Y[E]*P[^e,^k]*C[k,c,d,e]",
    "4*Z[^D,^d]*Z[E,^e]*nd[^b](P[b,^k])*C[k,c,d,e]",
    "4*Z[^D,^d]*Z[E,^e]*P[b,^k]*nd[^b](C[k,c,d,e])",
    "4*X[^D]*X[E]*P[b,^k]*P[^b,^e]*A[e,k,c]",
    "4*X[^D]*Y[E]*P[^e,^k]*A[e,k,c]",
    "-4*X[^D]*Z[E,^e]*P[b,^k]*nd[^b](A[e,k,c])",
    "-4*X[^D]*Z[E,^e]*nd[^b](P[b,^k])*A[e,k,c]",
    "-4*Z[^D,^b]*Z[E,^e]*P[b,^k]*A[e,k,c]",
    "-4*X[E]*X[^D]*P[b,^k]*P[^b,^d]*A[d,k,c]",
    "-4*X[E]*Y[^D]*P[^d,^k]*A[d,k,c]",
    "4*X[E]*Z[^D,^d]*P[b,^k]*nd[^b](A[d,k,c])",
    "4*X[E]*Z[^D,^d]*nd[^b](P[b,^k])*A[d,k,c]",
    "4*Z[E,^b]*Z[^D,^d]*P[b,^k]*A[d,k,c]",
    "-4*X[^D]*Z[E,^e]*P[c,^k]*P[^b,^d]*C[b,k,d,e]",
    "-4*Z[^D,^d]*X[E]*P[c,^k]*P[^b,^e]*C[b,k,d,e]",
    "4*Z[^D,^d]*Z[E,^e]*nd[^b](P[c,^k])*C[b,k,d,e]",
    "4*Z[^D,^d]*Z[E,^e]*P[c,^k]*nd[^b](C[b,k,d,e])",
    "4*X[^D]*X[E]*P[c,^k]*P[^b,^e]*A[e,b,k]",
    "-4*X[^D]*Z[E,^e]*P[c,^k]*nd[^b](A[e,b,k])",
    "-4*X[^D]*Z[E,^e]*nd[^b](P[c,^k])*A[e,b,k]",
    "-4*Z[^D,^b]*Z[E,^e]*P[c,^k]*A[e,b,k]",
    "-4*X[E]*X[^D]*P[c,^k]*P[^b,^d]*A[d,b,k]",
    "4*X[E]*Z[^D,^d]*P[c,^k]*nd[^b](A[d,b,k])",
    "4*X[E]*Z[^D,^d]*nd[^b](P[c,^k])*A[d,b,k]",
    "4*Z[E,^b]*Z[^D,^d]*P[c,^k]*A[d,b,k]",
]

# 2 (δ (J Ω))_c
DELTA_J_OMEGA = [
    "-2*Z[^D,^d]*Z[E,^e]*nd[^a](J[])*C[a,c,d,e]",
    "2*X[^D]*Z[E,^e]*J[]*P[^a,^d]*C[a,c,d,e]",
    "-2*Z[^D,^d]*Z[E,^e]*J[]*nd[^a](C[a,c,d,e])",
    "2*X[E]*Z[^D,^d]*J[]*P[^a,^e]*C[a,c,d,e]",
    "2*X[^D]*Z[E,^e]*nd[^a](J[])*A[e,a,c]",
    "-2*X[E]*Z[^D,^e]*nd[^a](J[])*A[e,a,c]",
    "2*Z[^D,^a]*Z[E,^e]*J[]*A[e,a,c]",
    "-2*Z[E,^a]*Z[^D,^e]*J[]*A[e,a,c]",
    "2*X[^D]*Z[E,^e]*J[]*nd[^a](A[e,a,c])",
    "-2*X[E]*Z[^D,^e]*J[]*nd[^a](A[e,a,c])",
]

# -(δΩ)_b^D_G Ω^b_c^G_E
QUADRATIC_LEFT = [
    "2*Z[^D,^d]*Z[E,^e]*A[b,d,^i]*C[^b,c,i,e]",
    "2*Z[^D,^d]*X[E]*A[b,d,^e]*A[e,^b,c]",
    "-X[^D]*Z[E,^e]*B[^i,b]*C[^b,c,i,e]",
    "-X[^D]*X[E]*B[^e,b]*A[e,^b,c]",
]

# Ω^b_c^D_G (δΩ)_b^G_E
QUADRATIC_RIGHT = [
    "-2*Z[^D,^d]*Z[E,^e]*C[^b,c,d,^i]*A[b,i,e]",
    "-Z[^D,^d]*X[E]*C[^b,c,d,^e]*B[e,b]",
    "2*X[^D]*Z[E,^e]*A[^i,^b,c]*A[b,i,e]",
    "X[^D]*X[E]*A[^e,^b,c]*B[e,b]",
]

# Each group is a list of (tractor prefix, bracketed term list) pairs.
GROUP_XY = [
    ("X[^D]*Y[E] - X[E]*Y[^D]", [
        "2*P[q,^d]*A[c,d,^q]", "-2*P[c,^d]*A[q,d,^q]", "2*P[^q,^d]*A[c,d,q]",
        "-2*P[^q,^d]*A[q,d,c]", "nd[q](B[^q,c])", "-nd[c](B[^q,q])", "4*P[^e,^k]*A[e,k,c]",
    ]),
]

GROUP_XY_REDUCED = [
    ("X[^D]*Y[E] - X[E]*Y[^D]", ["nd[^a](B[a,c])", "2*P[^e,^k]*A[e,k,c]"]),
]

GROUP_XX = [
    ("X[^D]*X[E]", [
        "2*P[q,^d]*P[^q,^e]*A[c,d,e]", "-2*P[c,^d]*P[^q,^e]*A[q,d,e]",
        "2*P[^q,^d]*P[q,^e]*A[c,d,e]", "-2*P[^q,^d]*P[c,^e]*A[q,d,e]",
        "4*P[b,^k]*P[^b,^e]*A[e,k,c]", "-4*P[b,^k]*P[^b,^d]*A[d,k,c]",
        "4*P[c,^k]*P[^b,^e]*A[e,b,k]", "-4*P[c,^k]*P[^b,^d]*A[d,b,k]",
        "-B[^e,b]*A[e,^b,c]", "A[^e,^b,c]*B[e,b]",
    ]),
]

GROUP_YZ = [
    ("Y[^D]*Z[E,^i] - Y[E]*Z[^D,^i]", [
        "-2*nd[^q](A[c,q,i])", "2*nd[^q](A[q,c,i])", "-2*nd[q](A[c,^q,i])",
        "2*nd[c](A[q,^q,i])", "g[^q,q]*B[i,c]", "-g[^q,c]*B[i,q]", "-B[i,c]",
        "-4*P[^d,^k]*C[k,c,d,i]",
    ]),
    ("Y[^D]*Z[E,c] - Y[E]*Z[^D,c]", ["B[^q,q]"]),
]

GROUP_YZ_REDUCED = [
    ("Y[^D]*Z[E,^i] - Y[E]*Z[^D,^i]", [
        "4*B[c,i]", "-4*nd[^q](A[c,q,i])", "-4*P[^k,^d]*C[k,c,d,i]", "2*nd[^q](A[q,c,i])",
    ]),
]

_ZZ_TAIL = [("Z[^D,c]*Z[E,^e] - Z[^D,^e]*Z[E,c]", ["nd[^q](B[e,q])"])]

GROUP_ZZ = [
    ("Z[^D,^i]*Z[E,^k]", [
        "-2*P[i,^d]*A[c,d,k]", "2*P[c,^d]*A[i,d,k]", "-2*P[^q,i]*A[c,q,k]",
        "2*P[^q,i]*A[q,c,k]", "-2*P[k,^e]*A[c,i,e]", "2*P[c,^e]*A[k,i,e]",
        "-2*P[^q,k]*A[c,i,q]", "2*P[^q,k]*A[q,i,c]", "2*nd[^q,q](A[c,i,k])",
        "-2*nd[^q,c](A[q,i,k])", "-nd[i](B[k,c])", "-nd[i](B[k,c])", "nd[c](B[k,i])",
        "nd[k](B[i,c])", "nd[k](B[i,c])", "-nd[c](B[i,k])",
        "4*nd[^b](P[b,^a])*C[a,c,i,k]", "4*P[b,^a]*nd[^b](C[a,c,i,k])",
        "-4*P[i,^a]*A[k,a,c]", "4*P[k,^a]*A[i,a,c]", "4*nd[^b](P[c,^a])*C[b,a,i,k]",
        "4*P[c,^a]*nd[^b](C[b,a,i,k])", "-4*P[c,^a]*A[k,i,a]", "4*P[c,^a]*A[i,k,a]",
        "-2*nd[^a](J[])*C[a,c,i,k]", "-2*J[]*nd[^a](C[a,c,i,k])", "2*J[]*A[k,i,c]",
        "-2*J[]*A[i,k,c]", "2*A[b,i,^a]*C[^b,c,a,k]", "-2*C[^b,c,i,^a]*A[b,a,k]",
    ]),
] + _ZZ_TAIL

GROUP_ZZ_REDUCED = [
    ("Z[^D,^i]*Z[E,^k]", [
        "-4*P[i,^d]*A[c,d,k]", "2*P[c,^a]*A[i,k,a]", "2*P[^q,i]*A[q,c,k]",
        "-4*P[k,^e]*A[c,i,e]", "-2*P[c,^a]*A[k,i,a]", "2*P[^q,k]*A[q,i,c]",
        "2*nd[^q,q](A[c,i,k])", "-2*nd[^q,c](A[q,i,k])", "-2*nd[i](B[k,c])",
        "2*nd[k](B[i,c])", "2*nd[^a](J[])*C[a,c,i,k]", "4*P[b,^a]*nd[^b](C[a,c,i,k])",
        "-4*P[i,^a]*A[k,a,c]", "4*P[k,^a]*A[i,a,c]", "4*nd[^b](P[c,^a])*C[b,a,i,k]",
        "4*P[c,^a]*nd[^b](C[b,a,i,k])", "-2*J[]*nd[^a](C[a,c,i,k])", "2*J[]*A[k,i,c]",
        "-2*J[]*A[i,k,c]", "2*A[b,i,^a]*C[^b,c,a,k]", "-2*C[^b,c,i,^a]*A[b,a,k]",
    ]),
] + _ZZ_TAIL

GROUP_XZ = [
    ("X[E]*Z[^D,^i]", [
        "-2*P[q,^e]*nd[^q](A[c,i,e])", "2*P[c,^e]*nd[^q](A[q,i,e])",
        "-2*nd[^q](P[q,^e])*A[c,i,e]", "2*nd[^q](P[c,^e])*A[q,i,e]",
        "-2*P[^q,^e]*nd[q](A[c,i,e])", "2*P[^q,^e]*nd[c](A[q,i,e])", "P[i,^e]*B[e,c]",
        "-P[^q,q]*B[i,c]", "P[^q,c]*B[i,q]", "nd[^q,q](B[i,c])", "-nd[^q,c](B[i,q])",
        "-4*P[b,^k]*P[^b,^e]*C[k,c,i,e]", "4*P[b,^k]*nd[^b](A[i,k,c])",
        "4*nd[^b](P[b,^k])*A[i,k,c]", "-4*P[c,^k]*P[^b,^e]*C[b,k,i,e]",
        "4*P[c,^k]*nd[^b](A[i,b,k])", "4*nd[^b](P[c,^k])*A[i,b,k]",
        "2*J[]*P[^a,^e]*C[a,c,i,e]", "-2*nd[^a](J[])*A[i,a,c]", "-2*J[]*nd[^a](A[i,a,c])",
        "2*A[b,i,^e]*A[e,^b,c]", "-C[^b,c,i,^e]*B[e,b]",
    ]),
    ("Z[^D,c]*X[E]", ["-P[^q,^e]*B[e,q]"]),
    ("X[^D]*Z[E,^i]", [
        "-2*P[q,^d]*nd[^q](A[c,d,i])", "2*P[c,^d]*nd[^q](A[q,d,i])",
        "-2*nd[^q](P[q,^d])*A[c,d,i]", "2*nd[^q](P[c,^d])*A[q,d,i]",
        "-2*P[^q,^d]*nd[q](A[c,d,i])", "2*P[^q,^d]*nd[c](A[q,d,i])", "P[^q,q]*B[i,c]",
        "-P[^q,c]*B[i,q]", "-nd[^q,q](B[i,c])", "nd[^q,c](B[i,q])", "-P[i,^e]*B[e,c]",
        "-4*P[b,^k]*P[^b,^d]*C[k,c,d,i]", "-4*P[b,^k]*nd[^b](A[i,k,c])",
        "-4*nd[^b](P[b,^k])*A[i,k,c]", "-4*P[c,^k]*P[^b,^d]*C[b,k,d,i]",
        "-4*P[c,^k]*nd[^b](A[i,b,k])", "-4*nd[^b](P[c,^k])*A[i,b,k]",
        "2*J[]*P[^a,^d]*C[a,c,d,i]", "2*nd[^a](J[])*A[i,a,c]", "2*J[]*nd[^a](A[i,a,c])",
        "-B[^a,b]*C[^b,c,a,i]", "2*A[^a,^b,c]*A[b,a,i]",
    ]),
    ("Z[E,c]*X[^D]", ["P[^q,^e]*B[e,q]"]),
]

_XZ_PREFIX = "X[E]*Z[^D,^i] - X[^D]*Z[E,^i]"

GROUP_XZ_FACTORED = [
    (_XZ_PREFIX, GROUP_XZ[0][1] + ["-g[i,c]*P[^q,^e]*B[e,q]"]),
]

# The bracket equals 16 O_{ci} in dimension six.
GROUP_XZ_FINAL = [
    (_XZ_PREFIX, [
        "-4*P[a,b]*nd[^a](A[i,c,^b])", "-4*P[a,b]*nd[^a](A[c,i,^b])",
        "2*P[c,^e]*nd[^q](A[q,i,e])", "-2*A[i,c,a]*nd[^a](J[])", "-2*A[c,i,a]*nd[^a](J[])",
        "2*nd[^q](P[c,^e])*A[q,i,e]", "2*P[^q,^e]*nd[c](A[q,i,e])", "P[i,^e]*B[e,c]",
        "-3*J[]*B[i,c]", "5*P[c,^k]*B[i,k]", "nd[^q,q](B[i,c])", "-nd[^q,c](B[i,q])",
        "4*P[b,^k]*P[^b,^e]*C[i,e,c,k]", "4*nd[^b](P[c,^k])*A[i,b,k]",
        "-2*A[b,i,e]*A[^e,c,^b]", "B[e,b]*C[i,^e,c,^b]", "-g[i,c]*P[^q,^e]*B[e,q]",
    ]),
]

_LOWER = {"q": "c", "c": "q"}
_SWAP_RE = re.compile(r"(?<=[\[,])(q|c)(?=[,\]])")


def swap_lower(text: str) -> str:
    """Exchange the lower occurrences of ``q`` and ``c``; raised ``^q`` is left alone."""
    return _SWAP_RE.sub(lambda m: _LOWER[m.group(1)], text)


def antisym_lower(terms: list[str]) -> Expr:
    """``½ (T − T')`` summed over ``terms``, where ``T'`` swaps the lower ``q`` and ``c``."""
    out = Expr()
    for t in terms:
        out = out + parse(t) - parse(swap_lower(t))
    return out.scale(Fraction(1, 2))


def plain(terms: list[str]) -> Expr:
    out = Expr()
    for t in terms:
        out = out + parse(t)
    return out


def grouped(groups: list[tuple[str, list[str]]]) -> Expr:
    """Sum of ``prefix * (bracket)`` over the pairs of a group list."""
    out = Expr()
    for prefix, body in groups:
        out = out + parse(prefix) * plain(body)
    return out


__all__ = [
    "DDELTA_OMEGA", "DELTA_DDELTA_OMEGA", "DELTA_PHASH_OMEGA", "DELTA_J_OMEGA",
    "QUADRATIC_LEFT", "QUADRATIC_RIGHT", "GROUP_XY", "GROUP_XY_REDUCED", "GROUP_XX",
    "GROUP_YZ", "GROUP_YZ_REDUCED", "GROUP_ZZ", "GROUP_ZZ_REDUCED", "GROUP_XZ",
    "GROUP_XZ_FACTORED", "GROUP_XZ_FINAL", "swap_lower", "antisym_lower", "plain", "grouped",
]
