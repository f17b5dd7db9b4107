"""Sparse multivariate polynomials / truncated power series with exact rational coefficients.

A `Series` in n variables stores a map from exponent tuples to nonzero
`Fraction` coefficients. `trunc` is either None (the stored terms are the
whole function) or an integer T meaning: terms of total degree <= T are
exact, anything of higher degree is unknown and never stored.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import BudgetError, DimensionError, InputZeroError, MonoresError, ParseError
from .scalars import Norm, Rational

# Hard cap on stored terms; guards runaway substitutions.
TERM_BUDGET = 200_000


class Series:
    """Immutable sparse series: {exponent tuple -> nonzero Fraction}, optional truncation order."""

    __slots__ = ("n", "terms", "trunc")

    def __init__(self, n: int, terms: Mapping[tuple, Rational] | None = None, trunc: int | None = None):
        if n < 1:
            raise DimensionError(f"need at least one variable, got n={n}")
        clean: dict[tuple, Fraction] = {}
        if terms:
            for exp, coeff in terms.items():
                exp = tuple(int(e) for e in exp)
                if len(exp) != n:
                    raise DimensionError(f"exponent {exp} has wrong length for n={n}")
                if any(e < 0 for e in exp):
                    raise MonoresError(f"negative exponent in {exp}")
                c = Fraction(coeff)
                if c == 0:
                    continue
                if trunc is not None and sum(exp) > trunc:
                    continue
                clean[exp] = c
        if len(clean) > TERM_BUDGET:
            raise BudgetError(f"series exceeds term budget ({len(clean)} > {TERM_BUDGET})")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "trunc", trunc)

    def __setattr__(self, *a):
        raise AttributeError("Series is immutable")

    # -- basic queries ------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * self.n, Fraction(0))

    def total_degree(self) -> int:
        """Largest stored total degree (-1 for the zero series)."""
        return max((sum(e) for e in self.terms), default=-1)

    def min_degree(self) -> int:
        """Smallest stored total degree (-1 for the zero series)."""
        return min((sum(e) for e in self.terms), default=-1)

    def support_vars(self) -> tuple[int, ...]:
        """0-based indices of variables that actually occur."""
        seen = set()
        for e in self.terms:
            for i, v in enumerate(e):
                if v:
                    seen.add(i)
        return tuple(sorted(seen))

    def axis_order(self, axis: int) -> int | None:
        """Smallest k with a nonzero pure x_axis^k term; None if no pure term exists.

        The constant term counts as k = 0.
        """
        best = None
        for e, _ in self.terms.items():
            if all(v == 0 for i, v in enumerate(e) if i != axis):
                k = e[axis]
                if best is None or k < best:
                    best = k
        return best

    def coefficient_of_axis_power(self, axis: int, k: int) -> "Series":
        """Series in the remaining variables multiplying x_axis^k (returned in n vars, axis-free)."""
        out = {}
        for e, c in self.terms.items():
            if e[axis] == k:
                reduced = e[:axis] + (0,) + e[axis + 1 :]
                out[reduced] = c
        return Series(self.n, out, self.trunc)

    def __eq__(self, other):
        return (
            isinstance(other, Series)
            and self.n == other.n
            and self.terms == other.terms
            and self.trunc == other.trunc
        )

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items()), self.trunc))

    def __repr__(self):
        return f"Series({self.n}, {format_series(self)!r}, trunc={self.trunc})"

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: "Series") -> "Series":
        self._check(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e, Fraction(0)) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return Series(self.n, out, _min_trunc(self.trunc, other.trunc))

    def __sub__(self, other: "Series") -> "Series":
        return self + (-other)

    def __neg__(self) -> "Series":
        return Series(self.n, {e: -c for e, c in self.terms.items()}, self.trunc)

    def __mul__(self, other: "Series") -> "Series":
        self._check(other)
        trunc = _min_trunc(self.trunc, other.trunc)
        out: dict[tuple, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                if trunc is not None and sum(e) > trunc:
                    continue
                s = out.get(e, Fraction(0)) + c1 * c2
                if s:
                    out[e] = s
                else:
                    out.pop(e, None)
                if len(out) > TERM_BUDGET:
                    raise BudgetError("product exceeds term budget")
        return Series(self.n, out, trunc)

    def scale(self, c) -> "Series":
        c = Fraction(c)
        if c == 0:
            return Series(self.n, {}, self.trunc)
        return Series(self.n, {e: c * v for e, v in self.terms.items()}, self.trunc)

    def power(self, k: int) -> "Series":
        if k < 0:
            raise MonoresError("negative power of a series")
        result = constant(self.n, 1, self.trunc)
        base = self
        while k:
            if k & 1:
                result = result * base
            base_needed = k >> 1
            if base_needed:
                base = base * base
            k >>= 1
        return result

    def truncate(self, order: int | None) -> "Series":
        """Tighten the truncation order (None leaves it unchanged)."""
        if order is None:
            return self
        new = order if self.trunc is None else min(order, self.trunc)
        return Series(self.n, self.terms, new)

    def _check(self, other: "Series"):
        if not isinstance(other, Series):
            raise TypeError(f"expected Series, got {type(other).__name__}")
        if self.n != other.n:
            raise DimensionError(f"mixed variable counts {self.n} and {other.n}")


def _min_trunc(a: int | None, b: int | None) -> int | None:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


# -- constructors -----------------------------------------------------------


def constant(n: int, value, trunc: int | None = None) -> Series:
    return Series(n, {(0,) * n: Fraction(value)}, trunc)


def monomial(n: int, exponent: Iterable[int], coeff=1, trunc: int | None = None) -> Series:
    return Series(n, {tuple(exponent): Fraction(coeff)}, trunc)


def variable(n: int, index: int, trunc: int | None = None) -> Series:
    """x_{index+1} as a series (index is 0-based)."""
    e = [0] * n
    e[index] = 1
    return Series(n, {tuple(e): Fraction(1)}, trunc)


# -- parsing and emission ---------------------------------------------------

_TOKEN = re.compile(
    r"""\s*(?:
        (?P<sign>[+-])
      | (?P<coeff>\d+(?:/\d+)?)
      | (?P<var>x\d+)
      | (?P<caret>\^)
      | (?P<star>\*)
    )""",
    re.VERBOSE,
)


def parse_series(text: str, n: int, trunc: int | None = None) -> Series:
    """Parse `a/b*x1^e1*x2^e2 + ...` into a Series in n variables.

    Terms are joined by + or -; each term is an optional rational coefficient
    and `*`-separated `xi^e` factors with i in 1..n and e >= 1 (^1 may be
    omitted). Whitespace is ignored. Raises ParseError with a position on
    malformed input.
    """
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", position=pos)
        tokens.append((m.lastgroup, m.group(m.lastgroup), pos))
        pos = m.end()
    if not tokens:
        raise ParseError("empty input", position=0)

    terms: dict[tuple, Fraction] = {}
    i = 0
    first = True

    def peek():
        return tokens[i] if i < len(tokens) else (None, None, len(text))

    while i < len(tokens):
        sign = Fraction(1)
        kind, val, at = peek()
        if kind == "sign":
            sign = Fraction(-1) if val == "-" else Fraction(1)
            i += 1
        elif not first:
            raise ParseError(f"expected '+' or '-' before {val!r}", position=at)
        first = False
        kind, val, at = peek()
        coeff = sign
        exponent = [0] * n
        saw_factor = False
        expect_var = False
        if kind == "coeff":
            if "/" in val:
                num, den = val.split("/")
                if int(den) == 0:
                    raise ParseError("zero denominator", position=at)
                coeff *= Fraction(int(num), int(den))
            else:
                coeff *= int(val)
            saw_factor = True
            i += 1
            kind, val, at = peek()
            if kind == "star":
                i += 1
                expect_var = True
                kind, val, at = peek()
        while kind == "var" or expect_var:
            if kind != "var":
                raise ParseError("expected a variable after '*'", position=at)
            idx = int(val[1:])
            if idx < 1 or idx > n:
                raise ParseError(f"variable {val} out of range for n={n}", position=at)
            i += 1
            e = 1
            kind, val, at = peek()
            if kind == "caret":
                i += 1
                kind, val, at = peek()
                if kind != "coeff" or "/" in (val or ""):
                    raise ParseError("expected an integer exponent after '^'", position=at)
                e = int(val)
                if e < 1:
                    raise ParseError("exponents must be >= 1", position=at)
                i += 1
                kind, val, at = peek()
            exponent[idx - 1] += e
            saw_factor = True
            expect_var = False
            if kind == "star":
                i += 1
                expect_var = True
                kind, val, at = peek()
        if not saw_factor:
            raise ParseError("expected a coefficient or a variable", position=at)
        key = tuple(exponent)
        s = terms.get(key, Fraction(0)) + coeff
        if s:
            terms[key] = s
        else:
            terms.pop(key, None)
    return Series(n, terms, trunc)


def format_series(s: Series) -> str:
    """Canonical text form: terms sorted lexicographically by exponent."""
    if s.is_zero():
        return "0"
    parts = []
    for e in sorted(s.terms):
        c = s.terms[e]
        factors = []
        for i, k in enumerate(e):
            if k == 1:
                factors.append(f"x{i + 1}")
            elif k > 1:
                factors.append(f"x{i + 1}^{k}")
        mag = abs(c)
        coeff_txt = str(mag)
        if factors and mag == 1:
            body = "*".join(factors)
        elif factors:
            body = coeff_txt + "*" + "*".join(factors)
        else:
            body = coeff_txt
        parts.append(("- " if c < 0 else "+ ") + body)
    first = parts[0]
    text = ("-" + first[2:]) if first.startswith("- ") else first[2:]
    for p in parts[1:]:
        text += " " + p
    return text


# -- calculus and evaluation ------------------------------------------------


def derivative(s: Series, var: int) -> Series:
    """Partial derivative with respect to variable `var` (0-based)."""
    out = {}
    for e, c in s.terms.items():
        k = e[var]
        if k:
            reduced = e[:var] + (k - 1,) + e[var + 1 :]
            out[reduced] = out.get(reduced, Fraction(0)) + c * k
    trunc = None if s.trunc is None else s.trunc - 1
    return Series(s.n, out, trunc)


def directional_derivative(s: Series, beta: Iterable[Rational], order: int = 1) -> Series:
    """(sum_i beta_i d/dx_i)^order applied to s; truncation drops by order."""
    beta = [Fraction(b) for b in beta]
    if len(beta) != s.n:
        raise DimensionError("direction length must match variable count")
    cur = s
    for _ in range(order):
        acc = Series(s.n, {}, cur.trunc)
        for i, b in enumerate(beta):
            if b:
                acc = acc + derivative(cur, i).scale(b)
        if acc.trunc is None and cur.trunc is not None:
            acc = acc.truncate(cur.trunc - 1)
        cur = acc
    return cur


def evaluate(s: Series, point: Iterable[Rational], norm: Norm = Norm("real")) -> tuple[Fraction, Fraction]:
    """Exact value and its magnitude under `norm` at a rational point."""
    pt = [Fraction(v) for v in point]
    if len(pt) != s.n:
        raise DimensionError("point length must match variable count")
    total = Fraction(0)
    pow_cache: list[dict[int, Fraction]] = [dict() for _ in range(s.n)]
    for e, c in s.terms.items():
        v = c
        for i, k in enumerate(e):
            if k:
                p = pow_cache[i].get(k)
                if p is None:
                    p = pt[i] ** k
                    pow_cache[i][k] = p
                v *= p
        total += v
    return total, norm.abs(total)


def evaluate_value(s: Series, point: Iterable[Rational]) -> Fraction:
    return evaluate(s, point)[0]


# -- monomial factorization -------------------------------------------------


def factor_monomial(s: Series) -> tuple[tuple[int, ...], Series]:
    """Write s = x^m * u with m the componentwise minimum exponent.

    The cofactor u has componentwise-minimal exponent zero in every variable;
    u has a nonzero constant term exactly when m is itself a stored exponent.
    Raises InputZeroError on the zero series.
    """
    if s.is_zero():
        raise InputZeroError("cannot factor the zero series")
    exps = list(s.terms)
    m = tuple(min(e[i] for e in exps) for i in range(s.n))
    shifted = {tuple(a - b for a, b in zip(e, m)): c for e, c in s.terms.items()}
    trunc = None if s.trunc is None else s.trunc - sum(m)
    return m, Series(s.n, shifted, trunc)


def divide_by_monomial(s: Series, m: tuple[int, ...]) -> Series:
    """Exact division by x^m; raises if any stored term is not divisible."""
    out = {}
    for e, c in s.terms.items():
        if any(a < b for a, b in zip(e, m)):
            raise MonoresError(f"term {e} not divisible by monomial {m}")
        out[tuple(a - b for a, b in zip(e, m))] = c
    trunc = None if s.trunc is None else s.trunc - sum(m)
    return Series(s.n, out, trunc)


def invert_unit(s: Series, order: int) -> Series:
    """Multiplicative inverse of a series with nonzero constant term, to total degree `order`."""
    c0 = s.constant_term()
    if c0 == 0:
        raise MonoresError("cannot invert a series with zero constant term")
    t = s.truncate(order)
    rest = (t - constant(s.n, c0, t.trunc)).truncate(order)
    inv = constant(s.n, 1 / c0, order)
    # Newton doubling for the inverse: x <- x(2 - s x).
    two = constant(s.n, 2, order)
    known = 1
    while known < order + 1:
        known = min(2 * known, order + 1)
        inv = (inv * (two - (rest + constant(s.n, c0, order)) * inv)).truncate(order)
    return inv


# -- embeddings across variable counts ---------------------------------------


def embed(s: Series, n: int, positions: Iterable[int] | None = None) -> Series:
    """Reinterpret s in n >= s.n variables; old variable i goes to positions[i] (default i)."""
    pos = list(positions) if positions is not None else list(range(s.n))
    if len(pos) != s.n or len(set(pos)) != s.n or any(p < 0 or p >= n for p in pos):
        raise DimensionError("bad embedding positions")
    out = {}
    for e, c in s.terms.items():
        new = [0] * n
        for i, k in enumerate(e):
            new[pos[i]] = k
        out[tuple(new)] = c
    return Series(n, out, s.trunc)


def drop_variable(s: Series, axis: int) -> Series:
    """Forget an unused variable (must not occur in any stored term)."""
    if any(e[axis] for e in s.terms):
        raise DimensionError(f"variable {axis} occurs; cannot drop it")
    out = {e[:axis] + e[axis + 1 :]: c for e, c in s.terms.items()}
    return Series(s.n - 1, out, s.trunc)
