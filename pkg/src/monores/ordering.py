"""Monomial ordering by iterated two-variable blowups.

Given finitely many exponent vectors, split the unit cube into charts, one
per leaf of a binary tree of comparisons |x_j| <= |x_k| vs >, so that inside
each chart the pulled-back monomials x^{L(v)} are totally ordered
componentwise. Each node's low branch substitutes x_j := x_j x_k and the high
branch x_k := x_k x_j; the per-leaf exponent action is the unimodular integer
matrix L with x^v composed with the leaf map equal to x^{L v}.

The construction reduces one ratio at a time: for the current pair of
exponents it looks at d = L v_a - L v_b, splits d into its positive part
(numerator) and negative part (denominator), and picks the blowup pair from
the side holding the larger maximum. Equal maxima eliminate one variable on
each branch; unequal maxima shrink the light side. Either way a finite
measure drops, so the tree is finite.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .charts import Blowup
from .errors import BudgetError, MonoresError
from .scalars import Norm

NODE_BUDGET = 1_000_000


@dataclass(frozen=True)
class ReduceStep:
    """One blowup choice for a numerator/denominator exponent pair."""

    j: int
    k: int
    low: tuple  # (alpha', beta') on the branch |x_j| <= |x_k|
    high: tuple  # (alpha', beta') on the branch |x_j| > |x_k|


@dataclass(frozen=True)
class Leaf:
    chart_id: int
    matrix: tuple  # L, rows of nonnegative ints, acts as v -> L v
    steps: tuple  # Blowup steps, path order; the chart map applies last first
    path: tuple  # (j, k, branch) with branch 0 = low, 1 = high


@dataclass(frozen=True)
class Node:
    pair: tuple
    low: object
    high: object


@dataclass(frozen=True)
class BlowupTree:
    n: int
    exponents: tuple
    root: object
    leaves: tuple


def _pos_neg(d: tuple) -> tuple:
    alpha = tuple(v if v > 0 else 0 for v in d)
    beta = tuple(-v if v < 0 else 0 for v in d)
    return alpha, beta


def _choose_pair(alpha: tuple, beta: tuple) -> tuple:
    a = max(alpha)
    b = max(beta)
    if a == b:
        j = alpha.index(a)
        k = beta.index(b)
    elif a > b:
        j = alpha.index(a)
        k = next(i for i, v in enumerate(beta) if v > 0)
    else:
        j = beta.index(b)
        k = next(i for i, v in enumerate(alpha) if v > 0)
    return j, k


def reduce_ratio_step(alpha, beta) -> ReduceStep | None:
    """Blowup pair and per-branch updates for the ratio x^alpha / x^beta.

    Returns None when either side is zero (nothing left to reduce). The two
    sides must not share a variable.
    """
    alpha = tuple(int(v) for v in alpha)
    beta = tuple(int(v) for v in beta)
    if len(alpha) != len(beta):
        raise MonoresError("exponent vectors differ in length")
    if any(v < 0 for v in alpha + beta):
        raise MonoresError("exponents must be nonnegative")
    if any(a and b for a, b in zip(alpha, beta)):
        raise MonoresError("ratio is not reduced: shared variable")
    if not any(alpha) or not any(beta):
        return None
    d = tuple(a - b for a, b in zip(alpha, beta))
    j, k = _choose_pair(alpha, beta)
    d_low = list(d)
    d_low[k] += d[j]
    d_high = list(d)
    d_high[j] += d[k]
    return ReduceStep(j, k, _pos_neg(tuple(d_low)), _pos_neg(tuple(d_high)))


def _apply_blowup_matrix(L: tuple, j: int, k: int) -> tuple:
    """Left-multiply L by (I + E_{kj}): the exponent action of x_j := x_j x_k."""
    rows = [list(r) for r in L]
    rows[k] = [rows[k][c] + rows[j][c] for c in range(len(rows))]
    return tuple(tuple(r) for r in rows)


def _mat_apply(L: tuple, v: tuple) -> tuple:
    return tuple(sum(L[r][c] * v[c] for c in range(len(v))) for r in range(len(L)))


def order_monomials(exponents, node_budget: int = NODE_BUDGET) -> BlowupTree:
    """Blowup tree whose leaves each order the given exponents componentwise."""
    exps = sorted({tuple(int(v) for v in e) for e in exponents})
    if not exps:
        raise MonoresError("need at least one exponent")
    n = len(exps[0])
    if any(len(e) != n for e in exps) or any(v < 0 for e in exps for v in e):
        raise MonoresError("exponents must be nonnegative vectors of one length")
    pairs = list(combinations(exps, 2))
    identity = tuple(tuple(1 if r == c else 0 for c in range(n)) for r in range(n))
    leaves: list[Leaf] = []
    count = [0]

    def build(L, steps, path, pi):
        count[0] += 1
        if count[0] > node_budget:
            raise BudgetError("blowup tree exceeded its node budget")
        while pi < len(pairs):
            va, vb = pairs[pi]
            d = tuple(x - y for x, y in zip(_mat_apply(L, va), _mat_apply(L, vb)))
            alpha, beta = _pos_neg(d)
            if not any(alpha) or not any(beta):
                pi += 1
                continue
            j, k = _choose_pair(alpha, beta)
            low = build(_apply_blowup_matrix(L, j, k), steps + (Blowup(j, k),), path + ((j, k, 0),), pi)
            high = build(_apply_blowup_matrix(L, k, j), steps + (Blowup(k, j),), path + ((j, k, 1),), pi)
            return Node((j, k), low, high)
        for va, vb in pairs:
            da = _mat_apply(L, va)
            db = _mat_apply(L, vb)
            if not (all(x <= y for x, y in zip(da, db)) or all(x >= y for x, y in zip(da, db))):
                raise MonoresError("leaf failed the componentwise-order invariant")
        leaf = Leaf(len(leaves), L, steps, path)
        leaves.append(leaf)
        return leaf

    root = build(identity, (), (), 0)
    return BlowupTree(n, tuple(exps), root, tuple(leaves))


def apply_exponent_map(leaf: Leaf, v) -> tuple:
    return _mat_apply(leaf.matrix, tuple(int(x) for x in v))


def gamma_components(leaf: Leaf, n: int) -> list[tuple]:
    """Exponent vector of each coordinate function of the leaf's chart map."""
    return [tuple(leaf.matrix[r][c] for r in range(n)) for c in range(n)]


def walk(tree: BlowupTree, x, norm: Norm) -> tuple:
    """Leaf containing x, plus x pulled back to that leaf's coordinates."""
    u = [Fraction(v) for v in x]
    if any(v == 0 for v in u):
        raise MonoresError("ordering charts exclude the coordinate hyperplanes")
    node = tree.root
    while isinstance(node, Node):
        j, k = node.pair
        if norm.abs(u[j]) <= norm.abs(u[k]):
            u[j] = u[j] / u[k]
            node = node.low
        else:
            u[k] = u[k] / u[j]
            node = node.high
    return node, u


def leaf_region(tree: BlowupTree, chart_id: int, c_n: Fraction, norm: Norm):
    """Membership predicate for the leaf chart's region in leaf coordinates.

    A point u (all coordinates nonzero) belongs when it sits in the unit cube
    and every coordinate of the leaf's monomial map stays below 1/c_n.
    """
    leaf = tree.leaves[chart_id]
    comps = gamma_components(leaf, tree.n)
    bound = Fraction(1) / Fraction(c_n)

    def contains(u) -> bool:
        pt = [Fraction(v) for v in u]
        if any(v == 0 for v in pt):
            return False
        if any(norm.abs(v) > 1 for v in pt):
            return False
        for comp in comps:
            val = Fraction(1)
            for i, e in enumerate(comp):
                if e:
                    val *= pt[i] ** e
            if norm.abs(val) >= bound:
                return False
        return True

    return contains
