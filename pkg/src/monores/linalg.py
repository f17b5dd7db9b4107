"""Exact linear algebra over the rationals, plus a small simplex solver.

Everything works on tuples/lists of `fractions.Fraction`; nothing here ever
rounds. The simplex uses Bland's rule, so it terminates on degenerate
problems, which the polyhedron code hits constantly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

Matrix = tuple
Vector = tuple


def mat_identity(n: int) -> Matrix:
    return tuple(tuple(Fraction(1 if i == j else 0) for j in range(n)) for i in range(n))


def mat_vec(a: Matrix, x: Sequence) -> Vector:
    return tuple(sum((row[j] * x[j] for j in range(len(x))), Fraction(0)) for row in a)


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    rows, inner, cols = len(a), len(b), len(b[0])
    return tuple(
        tuple(sum((a[i][k] * b[k][j] for k in range(inner)), Fraction(0)) for j in range(cols))
        for i in range(rows)
    )


def mat_det(a: Matrix) -> Fraction:
    n = len(a)
    m = [[Fraction(v) for v in row] for row in a]
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        inv = Fraction(1) / m[col][col]
        for r in range(col + 1, n):
            if m[r][col] != 0:
                factor = m[r][col] * inv
                for cc in range(col, n):
                    m[r][cc] -= factor * m[col][cc]
    return det


def mat_inverse(a: Matrix) -> Matrix:
    n = len(a)
    m = [[Fraction(v) for v in row] + [Fraction(1 if i == j else 0) for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            raise ZeroDivisionError("matrix is singular")
        m[col], m[pivot] = m[pivot], m[col]
        inv = Fraction(1) / m[col][col]
        m[col] = [v * inv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                factor = m[r][col]
                m[r] = [v - factor * p for v, p in zip(m[r], m[col])]
    return tuple(tuple(row[n:]) for row in m)


def rref(a: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form and the pivot column list."""
    m = [[Fraction(v) for v in row] for row in a]
    rows = len(m)
    cols = len(m[0]) if rows else 0
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        pivot = next((i for i in range(r, rows) if m[i][c] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = Fraction(1) / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(rows):
            if i != r and m[i][c] != 0:
                factor = m[i][c]
                m[i] = [v - factor * p for v, p in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    return m, pivots


def mat_rank(a: Sequence[Sequence]) -> int:
    if not a:
        return 0
    return len(rref(a)[1])


def nullspace(a: Sequence[Sequence], cols: int | None = None) -> list[Vector]:
    """Basis of {x : a x = 0}; `cols` covers the empty-matrix case."""
    if not a:
        n = cols or 0
        return [tuple(Fraction(1 if i == j else 0) for j in range(n)) for i in range(n)]
    n = len(a[0])
    red, pivots = rref(a)
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * n
        vec[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            vec[pc] = -red[r][fc]
        basis.append(tuple(vec))
    return basis


def solve_linear(a: Sequence[Sequence], b: Sequence) -> list[Fraction] | None:
    """One solution of a x = b, or None when inconsistent."""
    if not a:
        return []
    n = len(a[0])
    aug = [list(row) + [rhs] for row, rhs in zip(a, b)]
    red, pivots = rref(aug)
    if n in pivots:
        return None
    x = [Fraction(0)] * n
    for r, pc in enumerate(pivots):
        x[pc] = red[r][n]
    return x


def primitive_vector(v: Iterable) -> Vector:
    """Scale a rational vector to coprime integers with positive leading sign."""
    vals = [Fraction(x) for x in v]
    denom = 1
    for x in vals:
        denom = denom * x.denominator // gcd(denom, x.denominator)
    ints = [int(x * denom) for x in vals]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    if g:
        ints = [x // g for x in ints]
    lead = next((x for x in ints if x != 0), 0)
    if lead < 0:
        ints = [-x for x in ints]
    return tuple(Fraction(x) for x in ints)


# -- linear programming ---------------------------------------------------------


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: list | None = None
    value: Fraction | None = None


def lp_solve(objective: Sequence, constraints: Sequence[tuple], n: int, free: Iterable[int] = (), maximize: bool = False) -> LPResult:
    """Solve min (or max) objective . x over the given constraints.

    `constraints` is a list of (coeffs, rel, rhs) with rel one of "<=", ">=",
    "==". Variables are nonnegative unless listed in `free`. Exact two-phase
    simplex with Bland's rule.
    """
    free_set = set(free)
    # Column layout: for each original variable one column, plus a paired
    # negative column for free variables.
    col_of = []
    neg_col_of = {}
    ncols = 0
    for i in range(n):
        col_of.append(ncols)
        ncols += 1
    for i in range(n):
        if i in free_set:
            neg_col_of[i] = ncols
            ncols += 1

    rows = []
    rhs = []
    n_slack = sum(1 for _, rel, _ in constraints if rel in ("<=", ">="))
    slack_base = ncols
    ncols += n_slack
    slack_idx = 0
    for coeffs, rel, b in constraints:
        row = [Fraction(0)] * ncols
        for i, c in enumerate(coeffs):
            if c == 0:
                continue
            c = Fraction(c)
            row[col_of[i]] += c
            if i in free_set:
                row[neg_col_of[i]] -= c
        if rel == "<=":
            row[slack_base + slack_idx] = Fraction(1)
            slack_idx += 1
        elif rel == ">=":
            row[slack_base + slack_idx] = Fraction(-1)
            slack_idx += 1
        elif rel != "==":
            raise ValueError(f"bad relation {rel!r}")
        rows.append(row)
        rhs.append(Fraction(b))

    # Normalize rhs >= 0, then add one artificial per row.
    for r in range(len(rows)):
        if rhs[r] < 0:
            rows[r] = [-v for v in rows[r]]
            rhs[r] = -rhs[r]
    art_base = ncols
    m = len(rows)
    for r in range(m):
        rows[r] = rows[r] + [Fraction(1 if i == r else 0) for i in range(m)]
    ncols += m
    basis = [art_base + r for r in range(m)]

    tableau = [rows[r] + [rhs[r]] for r in range(m)]

    def run_simplex(cost: list) -> str:
        z = list(cost) + [Fraction(0)]
        for r in range(m):
            cb = cost[basis[r]]
            if cb != 0:
                trow = tableau[r]
                for j in range(ncols + 1):
                    z[j] -= cb * trow[j]
        while True:
            enter = next((j for j in range(ncols) if z[j] < 0), None)
            if enter is None:
                return "optimal"
            best = None
            for r in range(m):
                a = tableau[r][enter]
                if a > 0:
                    ratio = tableau[r][ncols] / a
                    if best is None or ratio < best[0] or (ratio == best[0] and basis[r] < basis[best[1]]):
                        best = (ratio, r)
            if best is None:
                return "unbounded"
            _, leave = best
            pivot_row = tableau[leave]
            inv = Fraction(1) / pivot_row[enter]
            tableau[leave] = [v * inv for v in pivot_row]
            pivot_row = tableau[leave]
            for r in range(m):
                if r != leave and tableau[r][enter] != 0:
                    factor = tableau[r][enter]
                    tableau[r] = [v - factor * p for v, p in zip(tableau[r], pivot_row)]
            if z[enter] != 0:
                factor = z[enter]
                for j in range(ncols + 1):
                    z[j] -= factor * pivot_row[j]
            basis[leave] = enter

    phase1 = [Fraction(0)] * ncols
    for j in range(art_base, art_base + m):
        phase1[j] = Fraction(1)
    run_simplex(phase1)
    infeas = sum((tableau[r][ncols] for r in range(m) if basis[r] >= art_base), Fraction(0))
    if infeas != 0:
        return LPResult("infeasible")

    # Pivot lingering artificials out of the basis (their rhs is zero).
    for r in range(m):
        if basis[r] >= art_base:
            enter = next((j for j in range(art_base) if tableau[r][j] != 0), None)
            if enter is None:
                continue  # redundant row; keep, it stays all-zero
            inv = Fraction(1) / tableau[r][enter]
            tableau[r] = [v * inv for v in tableau[r]]
            prow = tableau[r]
            for rr in range(m):
                if rr != r and tableau[rr][enter] != 0:
                    factor = tableau[rr][enter]
                    tableau[rr] = [v - factor * p for v, p in zip(tableau[rr], prow)]
            basis[r] = enter

    # Phase 2: forbid artificial columns by pricing them prohibitively is not
    # exact-friendly; instead zero them from the tableau.
    for r in range(m):
        row = tableau[r]
        for j in range(art_base, art_base + m):
            row[j] = Fraction(0)

    sign = Fraction(-1) if maximize else Fraction(1)
    cost = [Fraction(0)] * ncols
    for i in range(n):
        c = sign * Fraction(objective[i])
        if c != 0:
            cost[col_of[i]] += c
            if i in free_set:
                cost[neg_col_of[i]] -= c
    status = run_simplex(cost)
    if status == "unbounded":
        return LPResult("unbounded")

    xcols = [Fraction(0)] * ncols
    for r in range(m):
        if basis[r] < ncols:
            xcols[basis[r]] = tableau[r][ncols]
    x = []
    for i in range(n):
        val = xcols[col_of[i]]
        if i in free_set:
            val -= xcols[neg_col_of[i]]
        x.append(val)
    value = sum((Fraction(objective[i]) * x[i] for i in range(n)), Fraction(0))
    return LPResult("optimal", x, value)
