"""Built-in operators and the operator spec file format.

Sign and basis conventions (the single place they are fixed):

* ``Lambda^m R^n`` uses the lexicographic basis of m-element subsets
  ``I = (i_1 < ... < i_m)``.
* Wedge: ``e_i ^ e_I = (-1)^#{j in I : j < i} e_(I + i)``.
* Contraction: ``e_i _| e_I = (-1)^(position of i in I) e_(I - i)``
  (0-based position), so the Hodge symbol is ``(xi ^ v, xi _| v)``.
* The symmetric derivative targets full ``n x n`` matrices (row-major,
  ``dim E = n^2``) by default; ``encoding="packed"`` keeps only ``i <= j``.
* curl on ``R^n`` has one row per pair ``i < j``: ``d_i v_j - d_j v_i``;
  the 3-d ``divcurl`` operator uses the cross product ordering instead.

Spec files are line based::

    format_version: 1
    name: divcurl
    n: 3
    k: 1
    dimV: 3
    dimE: 4
    entry: 1,0,0 0 0 1

Each ``entry`` is ``multiindex row col value`` with a rational ``p/q``
value. ``#`` starts a comment. Serialisation is canonical (entries sorted
by multiindex, row, column), so files round-trip byte for byte.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Callable

from .symbols import SymbolError, SymbolOperator

FORMAT_VERSION = 1


class CatalogError(ValueError):
    """Unknown catalog id or parameters outside the valid range."""


class SpecParseError(ValueError):
    def __init__(self, line, col, message):
        self.line, self.col = line, col
        super().__init__(f"line {line}, column {col}: {message}")


def _unit(n, i, power=1):
    return tuple(power if j == i else 0 for j in range(n))


# -- constructors ---------------------------------------------------------------------

def gradient(n):
    return SymbolOperator.from_entries(
        n, 1, 1, n, [(_unit(n, i), i, 0, 1) for i in range(n)], name=f"gradient(n={n})"
    )


def divergence(n):
    return SymbolOperator.from_entries(
        n, 1, n, 1, [(_unit(n, i), 0, i, 1) for i in range(n)], name=f"divergence(n={n})"
    )


def curl(n):
    if n < 2:
        raise CatalogError("curl needs n >= 2")
    entries = []
    for r, (i, j) in enumerate(itertools.combinations(range(n), 2)):
        entries.append((_unit(n, i), r, j, 1))
        entries.append((_unit(n, j), r, i, -1))
    return SymbolOperator.from_entries(n, 1, n, comb(n, 2), entries, name=f"curl(n={n})")


def divcurl():
    """``u -> (div u, curl u)`` on ``R^3``; symbol ``v -> (xi . v, xi x v)``."""
    e = [((1, 0, 0), 0, 0, 1), ((0, 1, 0), 0, 1, 1), ((0, 0, 1), 0, 2, 1)]
    for r, (a, b) in enumerate([(1, 2), (2, 0), (0, 1)], start=1):
        e.append((_unit(3, a), r, b, 1))
        e.append((_unit(3, b), r, a, -1))
    return SymbolOperator.from_entries(3, 1, 3, 4, e, name="divcurl")


def symder(n, encoding="full"):
    half = Fraction(1, 2)
    if encoding == "full":
        rows = [(i, j) for i in range(n) for j in range(n)]
    elif encoding == "packed":
        rows = [(i, j) for i in range(n) for j in range(i, n)]
    else:
        raise CatalogError(f"unknown symder encoding {encoding!r}")
    entries = []
    for r, (i, j) in enumerate(rows):
        entries.append((_unit(n, i), r, j, half))
        entries.append((_unit(n, j), r, i, half))
    suffix = "" if encoding == "full" else ", packed"
    return SymbolOperator.from_entries(n, 1, n, len(rows), entries, name=f"symder(n={n}{suffix})")


def _subsets(n, m):
    return list(itertools.combinations(range(n), m))


def hodge(n, m):
    """``u -> (du, d*u)`` on m-forms; symbol ``v -> (xi ^ v, xi _| v)``."""
    if not 1 <= m <= n - 1:
        raise CatalogError(f"hodge needs 1 <= m <= n-1, got n={n}, m={m}")
    cols = _subsets(n, m)
    up = {s: r for r, s in enumerate(_subsets(n, m + 1))}
    down = {s: r for r, s in enumerate(_subsets(n, m - 1))}
    offset = len(up)
    entries = []
    for c, subset in enumerate(cols):
        for i in range(n):
            if i in subset:
                pos = subset.index(i)
                rest = tuple(x for x in subset if x != i)
                entries.append((_unit(n, i), offset + down[rest], c, (-1) ** pos))
            else:
                below = sum(1 for x in subset if x < i)
                merged = tuple(sorted(subset + (i,)))
                entries.append((_unit(n, i), up[merged], c, (-1) ** below))
    return SymbolOperator.from_entries(
        n, 1, len(cols), len(up) + len(down), entries, name=f"hodge(n={n}, m={m})"
    )


def laplacian(n):
    return SymbolOperator.from_entries(
        n, 2, 1, 1, [(_unit(n, i, 2), 0, 0, 1) for i in range(n)], name=f"laplacian(n={n})"
    )


def kpowers(n, k):
    """``v -> d_1^k v_1 + ... + d_n^k v_n``."""
    if k < 1:
        raise CatalogError("kpowers needs k >= 1")
    return SymbolOperator.from_entries(
        n, k, n, 1, [(_unit(n, i, k), 0, i, 1) for i in range(n)], name=f"kpowers(n={n}, k={k})"
    )


# -- catalog -------------------------------------------------------------------------------

@dataclass(frozen=True)
class CatalogEntry:
    id: str
    params: tuple
    build: Callable
    expected: Callable  # params dict -> {"elliptic": ..., "cancelling": ..., "cocancelling": ...}
    provenance: str
    valid: str


def _exp(elliptic, cancelling=None, cocancelling=None):
    """Golden verdicts; ``cocancelling`` refers to the compatibility operator
    when ``elliptic`` is yes and to the operator itself otherwise."""
    out = {"elliptic": elliptic}
    if cancelling is not None:
        out["cancelling"] = cancelling
        out["cocancelling"] = cancelling
    if cocancelling is not None:
        out["cocancelling"] = cocancelling
    return out


CATALOG = {
    "gradient": CatalogEntry(
        "gradient", ("n",), lambda p: gradient(p["n"]),
        lambda p: _exp("yes", "yes" if p["n"] >= 2 else "no"),
        "image R xi; intersection {0} when n >= 2, all of R when n = 1", "n >= 1",
    ),
    "divergence": CatalogEntry(
        "divergence", ("n",), lambda p: divergence(p["n"]),
        lambda p: _exp("no", None, "yes") if p["n"] >= 2 else _exp("yes", "no"),
        "kernel {xi}^perp; intersection {0} for n >= 2", "n >= 1",
    ),
    "curl": CatalogEntry(
        "curl", ("n",), lambda p: curl(p["n"]),
        lambda p: _exp("no", None, "yes"),
        "kernel R xi; intersection {0} for n >= 2", "n >= 2",
    ),
    "divcurl": CatalogEntry(
        "divcurl", (), lambda p: divcurl(),
        lambda p: _exp("yes", "no"),
        "Lagrange identity |A(xi)v| = |xi||v|; images R x {xi}^perp meet in R x {0}", "n = 3 only",
    ),
    "symder": CatalogEntry(
        "symder", ("n",), lambda p: symder(p["n"]),
        lambda p: _exp("yes", "yes" if p["n"] >= 2 else "no"),
        "|A(xi)v|^2 = (|xi|^2|v|^2 + (xi.v)^2)/2; cancelling iff n >= 2", "n >= 1",
    ),
    "hodge": CatalogEntry(
        "hodge", ("n", "m"), lambda p: hodge(p["n"], p["m"]),
        lambda p: _exp("yes", "yes" if 2 <= p["m"] <= p["n"] - 2 else "no"),
        "(d, d*) on m-forms; cancelling iff 2 <= m <= n-2", "n >= 2, 1 <= m <= n-1",
    ),
    "laplacian": CatalogEntry(
        "laplacian", ("n",), lambda p: laplacian(p["n"]),
        lambda p: _exp("yes", "no"),
        "scalar symbol |xi|^2; every image is all of E = R", "n >= 1",
    ),
    "kpowers": CatalogEntry(
        "kpowers", ("n", "k"), lambda p: kpowers(p["n"], p["k"]),
        lambda p: _exp("no", None, "yes") if p["n"] >= 2 else _exp("yes", "no"),
        "d_1^k v_1 + ... + d_n^k v_n; kernels meet in {0} for n >= 2", "n >= 1, k >= 1",
    ),
}

_DEFAULTS = {"n": 3, "m": 2, "k": 2}


def _validate(entry, params):
    n = params.get("n")
    if "n" in entry.params and (not isinstance(n, int) or n < 1):
        raise CatalogError(f"{entry.id}: invalid n={n!r}; valid: {entry.valid}")
    if entry.id == "curl" and n < 2:
        raise CatalogError(f"curl: invalid n={n}; valid: {entry.valid}")
    if entry.id == "hodge":
        m = params.get("m")
        if n < 2 or not isinstance(m, int) or not 1 <= m <= n - 1:
            raise CatalogError(f"hodge: invalid n={n}, m={m!r}; valid: {entry.valid}")
    if entry.id == "kpowers" and (not isinstance(params.get("k"), int) or params["k"] < 1):
        raise CatalogError(f"kpowers: invalid k={params.get('k')!r}; valid: {entry.valid}")


def resolve_params(id, **params):
    """Fill defaults for the parameters ``id`` uses and drop the others."""
    if id not in CATALOG:
        raise CatalogError(f"unknown catalog id {id!r}; known: {', '.join(sorted(CATALOG))}")
    entry = CATALOG[id]
    out = {}
    for name in entry.params:
        value = params.get(name)
        out[name] = _DEFAULTS[name] if value is None else value
    _validate(entry, out)
    return out


def catalog_get(id, **params) -> SymbolOperator:
    """Exact operator for a catalog id, e.g. ``catalog_get("hodge", n=4, m=2)``."""
    p = resolve_params(id, **params)
    return CATALOG[id].build(p)


def expected_verdicts(id, **params) -> dict:
    p = resolve_params(id, **params)
    return CATALOG[id].expected(p)


# -- spec files ---------------------------------------------------------------------------

_RATIONAL = re.compile(r"[+-]?\d+(/\d+)?\Z")
_HEADER = ("format_version", "name", "n", "k", "dimV", "dimE")


def format_rational(c) -> str:
    c = Fraction(c)
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def parse_rational(text, line=0, col=0) -> Fraction:
    if not _RATIONAL.match(text):
        raise SpecParseError(line, col, f"bad rational {text!r} (expected p or p/q)")
    if "/" in text and int(text.split("/")[1]) == 0:
        raise SpecParseError(line, col, "zero denominator")
    return Fraction(text)


def serialize_operator(op: SymbolOperator) -> str:
    lines = [
        f"format_version: {FORMAT_VERSION}",
        f"name: {op.name}",
        f"n: {op.n}",
        f"k: {op.k}",
        f"dimV: {op.dim_v}",
        f"dimE: {op.dim_e}",
    ]
    for alpha, i, j, c in op.entries():
        lines.append(f"entry: {','.join(map(str, alpha))} {i} {j} {format_rational(c)}")
    return "\n".join(lines) + "\n"


def parse_operator(text: str) -> SymbolOperator:
    header = {}
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].rstrip()
        if not body.strip():
            continue
        col0 = len(body) - len(body.lstrip()) + 1
        if ":" not in body:
            raise SpecParseError(lineno, col0, "expected 'key: value'")
        key, _, value = body.strip().partition(":")
        colon = body.index(":")
        rest = body[colon + 1:]
        vcol = colon + 2 + len(rest) - len(rest.lstrip())
        value = value.strip()
        if key == "entry":
            fields = value.split()
            if len(fields) != 4:
                raise SpecParseError(lineno, vcol, "entry needs 'multiindex row col value'")
            try:
                alpha = tuple(int(a) for a in fields[0].split(","))
                row, col = int(fields[1]), int(fields[2])
            except ValueError:
                raise SpecParseError(lineno, vcol, "multiindex, row and col must be integers") from None
            vpos = body.rindex(fields[3]) + 1
            entries.append((lineno, vcol, alpha, row, col, parse_rational(fields[3], lineno, vpos)))
        elif key in _HEADER:
            if key in header:
                raise SpecParseError(lineno, col0, f"duplicate field {key!r}")
            header[key] = (value, lineno, vcol)
        else:
            raise SpecParseError(lineno, col0, f"unknown field {key!r}")
    for key in _HEADER:
        if key not in header and key != "name":
            raise SpecParseError(0, 0, f"missing field {key!r}")

    def as_int(key):
        value, ln, cl = header[key]
        try:
            return int(value)
        except ValueError:
            raise SpecParseError(ln, cl, f"{key} must be an integer, got {value!r}") from None

    version = as_int("format_version")
    if version != FORMAT_VERSION:
        raise SpecParseError(header["format_version"][1], header["format_version"][2],
                             f"unsupported format_version {version}")
    n, k, dim_v, dim_e = as_int("n"), as_int("k"), as_int("dimV"), as_int("dimE")
    name = header.get("name", ("", 0, 0))[0]
    seen = set()
    for ln, cl, alpha, row, col, _ in entries:
        if len(alpha) != n:
            raise SpecParseError(ln, cl, f"multiindex {alpha} has length {len(alpha)} != n={n}")
        if sum(alpha) != k or any(a < 0 for a in alpha):
            raise SpecParseError(ln, cl, f"multiindex {alpha} has order {sum(alpha)} != k={k}")
        if not (0 <= row < dim_e and 0 <= col < dim_v):
            raise SpecParseError(ln, cl, f"cell ({row}, {col}) outside {dim_e}x{dim_v}")
        if (alpha, row, col) in seen:
            raise SpecParseError(ln, cl, f"duplicate entry for {alpha} ({row}, {col})")
        seen.add((alpha, row, col))
    try:
        return SymbolOperator.from_entries(
            n, k, dim_v, dim_e, [(a, r, c, v) for _, _, a, r, c, v in entries], name=name
        )
    except SymbolError as exc:
        raise SpecParseError(0, 0, str(exc)) from None
