"""Coordinate-change steps and their composition with series.

A `ChartMap` is a list of steps. As a point map it applies the LAST step
first: map(x) = step1(step2(...stepk(x))). Substituting into a series walks
the list left to right, so compose_chart(s, [s1, s2]) == (s o s1) o s2 and
evaluate(compose_chart(s, map), x) == evaluate(s, map(x)) wherever both sides
are exact.

Three step kinds:

* Affine(matrix, shift): x -> A x + b with A invertible over Q.
* Blowup(j, k): x_j -> x_j * x_k, all other coordinates fixed (j != k).
* Quasitranslation(axis, graph): x_axis -> x_axis + a(other vars), a(0) = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DimensionError, MonoresError
from .linalg import mat_det, mat_identity, mat_inverse, mat_vec
from .series import Series, constant, derivative, embed, evaluate_value, variable

Rational = Fraction


@dataclass(frozen=True)
class Affine:
    """x -> A x + b. Stored row-major; A must be invertible."""

    matrix: tuple
    shift: tuple

    @staticmethod
    def make(matrix: Sequence[Sequence], shift: Sequence | None = None) -> "Affine":
        a = tuple(tuple(Fraction(v) for v in row) for row in matrix)
        n = len(a)
        if any(len(row) != n for row in a):
            raise DimensionError("affine matrix must be square")
        if mat_det(a) == 0:
            raise MonoresError("affine matrix is singular")
        b = tuple(Fraction(v) for v in shift) if shift is not None else (Fraction(0),) * n
        if len(b) != n:
            raise DimensionError("affine shift has wrong length")
        return Affine(a, b)

    @property
    def n(self) -> int:
        return len(self.matrix)


@dataclass(frozen=True)
class Blowup:
    """x_j -> x_j x_k (0-based indices, j != k)."""

    j: int
    k: int

    def __post_init__(self):
        if self.j == self.k:
            raise MonoresError("blowup needs two distinct variables")


@dataclass(frozen=True)
class Quasitranslation:
    """x_axis -> x_axis + graph(other variables); graph has no axis dependence and graph(0) = 0."""

    axis: int
    graph: Series

    def __post_init__(self):
        if any(e[self.axis] for e in self.graph.terms):
            raise MonoresError("quasitranslation graph must not involve its own axis")
        if self.graph.constant_term() != 0:
            raise MonoresError("quasitranslation graph must vanish at the origin")


Step = Affine | Blowup | Quasitranslation


@dataclass
class ChartMap:
    """A composite coordinate change on K^n."""

    n: int
    steps: list = field(default_factory=list)

    def extended(self, more: Iterable[Step]) -> "ChartMap":
        return ChartMap(self.n, list(self.steps) + list(more))


def _step_dim(step: Step, n: int) -> None:
    if isinstance(step, Affine):
        if step.n != n:
            raise DimensionError("affine step has wrong dimension")
    elif isinstance(step, Blowup):
        if not (0 <= step.j < n and 0 <= step.k < n):
            raise DimensionError("blowup indices out of range")
    elif isinstance(step, Quasitranslation):
        if step.graph.n != n or not (0 <= step.axis < n):
            raise DimensionError("quasitranslation has wrong dimension")
    else:
        raise MonoresError(f"unknown step {step!r}")


# -- substitution into series -------------------------------------------------


def substitute_step(s: Series, step: Step, trunc: int | None) -> Series:
    """s composed with one step (as a function substitution)."""
    _step_dim(step, s.n)
    if isinstance(step, Blowup):
        out = {}
        for e, c in s.terms.items():
            new = list(e)
            new[step.k] += e[step.j]
            key = tuple(new)
            out[key] = out.get(key, Fraction(0)) + c
        t = s.trunc if trunc is None else (trunc if s.trunc is None else min(trunc, s.trunc))
        return Series(s.n, out, t)
    if isinstance(step, Affine):
        return _substitute_affine(s, step, trunc)
    return _substitute_quasi(s, step, trunc)


def _working_trunc(s: Series, extra_trunc: int | None, inexact: bool) -> int | None:
    t = s.trunc
    if extra_trunc is not None:
        t = extra_trunc if t is None else min(t, extra_trunc)
    if inexact and t is None:
        raise MonoresError("truncation order required when composing truncated data")
    return t


def _substitute_affine(s: Series, step: Affine, trunc: int | None) -> Series:
    n = s.n
    # A shift folds high-order terms down into every degree, so a truncated
    # input composed with a shift keeps (not improves) its order.
    t = s.trunc
    if trunc is not None:
        t = trunc if t is None else min(t, trunc)
    linear_forms = []
    for i in range(n):
        terms = {}
        for jj in range(n):
            c = step.matrix[i][jj]
            if c:
                e = [0] * n
                e[jj] = 1
                terms[tuple(e)] = c
        if step.shift[i]:
            terms[(0,) * n] = step.shift[i]
        linear_forms.append(Series(n, terms, None))
    return _substitute_components(s, linear_forms, t)


def _substitute_quasi(s: Series, step: Quasitranslation, trunc: int | None) -> Series:
    n = s.n
    t = s.trunc
    if trunc is not None:
        t = trunc if t is None else min(t, trunc)
    if step.graph.trunc is not None:
        t = step.graph.trunc if t is None else min(t, step.graph.trunc)
    axis = step.axis
    # Substitute x_axis := x_axis + a, leaving other variables fixed.
    comp = [variable(n, i) for i in range(n)]
    comp[axis] = variable(n, axis) + step.graph
    return _substitute_components(s, comp, t)


def _substitute_components(s: Series, comp: list[Series], t: int | None) -> Series:
    """Evaluate s at the component series, truncating products at t."""
    n = s.n
    out = Series(n, {}, t)
    pow_cache: list[dict[int, Series]] = [dict() for _ in range(n)]

    def comp_power(i: int, k: int) -> Series:
        got = pow_cache[i].get(k)
        if got is None:
            got = comp[i].truncate(t).power(k)
            pow_cache[i][k] = got
        return got

    for e, c in s.terms.items():
        term = constant(n, c, t)
        for i, k in enumerate(e):
            if k:
                term = term * comp_power(i, k)
        out = out + term
    return out


def compose_chart(s: Series, chart: ChartMap, trunc: int | None = None) -> Series:
    """Substitute the chart's steps into s, left to right.

    Exact (trunc left at None) when s is a polynomial and every
    quasitranslation graph along the way is one too; otherwise a finite
    truncation order must be available from `trunc`, s, or the graphs.
    """
    if s.n != chart.n:
        raise DimensionError("series and chart have different variable counts")
    cur = s
    for step in chart.steps:
        cur = substitute_step(cur, step, trunc)
    return cur


# -- point application and inversion ------------------------------------------


def apply_step_point(step: Step, x: list) -> list:
    if isinstance(step, Affine):
        return [v + b for v, b in zip(mat_vec(step.matrix, x), step.shift)]
    if isinstance(step, Blowup):
        y = list(x)
        y[step.j] = x[step.j] * x[step.k]
        return y
    y = list(x)
    y[step.axis] = x[step.axis] + evaluate_value(step.graph, x)
    return y


def invert_step_point(step: Step, x: list) -> list | None:
    """Preimage of x under one step; None where the step is not invertible."""
    if isinstance(step, Affine):
        inv = mat_inverse(step.matrix)
        shifted = [v - b for v, b in zip(x, step.shift)]
        return list(mat_vec(inv, shifted))
    if isinstance(step, Blowup):
        if x[step.k] == 0:
            return None
        y = list(x)
        y[step.j] = x[step.j] / x[step.k]
        return y
    y = list(x)
    probe = list(x)
    probe[step.axis] = Fraction(0)
    y[step.axis] = x[step.axis] - evaluate_value(step.graph, probe)
    return y


def apply_chart_point(chart: ChartMap, x: Iterable[Rational]) -> list:
    """map(x): the last step acts first."""
    cur = [Fraction(v) for v in x]
    if len(cur) != chart.n:
        raise DimensionError("point has wrong length")
    for step in reversed(chart.steps):
        cur = apply_step_point(step, cur)
    return cur


def invert_chart_point(chart: ChartMap, x: Iterable[Rational]) -> list | None:
    cur = [Fraction(v) for v in x]
    for step in chart.steps:
        cur = invert_step_point(step, cur)
        if cur is None:
            return None
    return cur


def chart_stage_points(chart: ChartMap, x: Iterable[Rational]) -> list[list] | None:
    """Coordinates of x after inverting each successive prefix of steps.

    Returns stages[0] = x, stages[i] = preimage under steps[:i]; None if any
    step fails to invert at the point.
    """
    cur = [Fraction(v) for v in x]
    stages = [list(cur)]
    for step in chart.steps:
        cur = invert_step_point(step, cur)
        if cur is None:
            return None
        stages.append(list(cur))
    return stages


# -- jacobians -----------------------------------------------------------------


def step_jacobian_matrix(step: Step, x: list, n: int) -> tuple:
    if isinstance(step, Affine):
        return step.matrix
    rows = [list(row) for row in mat_identity(n)]
    if isinstance(step, Blowup):
        rows[step.j][step.j] = x[step.k]
        rows[step.j][step.k] = x[step.j]
    else:
        for i in range(n):
            if i != step.axis:
                rows[step.axis][i] = evaluate_value(derivative(step.graph, i), x)
    return tuple(tuple(r) for r in rows)


def jacobian(chart: ChartMap, x: Iterable[Rational]) -> tuple[Fraction, tuple]:
    """Exact Jacobian determinant and matrix of the chart map at x."""
    pts = [Fraction(v) for v in x]
    stages = [pts]
    for step in reversed(chart.steps):
        stages.append(apply_step_point(step, stages[-1]))
    # stages[i] is the input seen by steps[len-1-i]; chain rule multiplies
    # J_first(at later stages) ... J_last(at x).
    n = chart.n
    mat = mat_identity(n)
    det = Fraction(1)
    for idx, step in enumerate(chart.steps):
        stage_in = stages[len(chart.steps) - 1 - idx]
        jm = step_jacobian_matrix(step, stage_in, n)
        mat = _mat_mul(mat, jm) if idx else jm
        det *= mat_det(jm) if isinstance(step, Affine) else _step_det(step, stage_in)
    if not chart.steps:
        return Fraction(1), mat_identity(n)
    return det, mat


def _step_det(step: Step, x: list) -> Fraction:
    if isinstance(step, Blowup):
        return x[step.k]
    if isinstance(step, Quasitranslation):
        return Fraction(1)
    return mat_det(step.matrix)


def _mat_mul(a: tuple, b: tuple) -> tuple:
    n = len(a)
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)) for i in range(n)
    )


def symbolic_components(chart: ChartMap, trunc: int | None = None) -> list[Series]:
    """The chart map's coordinate functions as series (suffix-composed)."""
    n = chart.n
    comps = [variable(n, i) for i in range(n)]
    for step in reversed(chart.steps):
        comps = _push_step_symbolic(step, comps, n, trunc)
    return comps


def _push_step_symbolic(step: Step, comps: list[Series], n: int, trunc: int | None) -> list[Series]:
    if isinstance(step, Affine):
        out = []
        for i in range(n):
            acc = constant(n, step.shift[i], trunc) if step.shift[i] else Series(n, {}, trunc)
            for jj in range(n):
                c = step.matrix[i][jj]
                if c:
                    acc = acc + comps[jj].scale(c)
            out.append(acc)
        return out
    if isinstance(step, Blowup):
        out = list(comps)
        out[step.j] = (comps[step.j] * comps[step.k]).truncate(trunc)
        return out
    out = list(comps)
    graft = _substitute_components(step.graph, comps, trunc if trunc is not None else step.graph.trunc)
    out[step.axis] = comps[step.axis] + graft
    return out


def lift_step(step: Step, n: int) -> Step:
    """Pad a step on the first n-1 variables to act on K^n, fixing the last variable."""
    if isinstance(step, Affine):
        m = step.n
        if m >= n:
            raise DimensionError("step already has full dimension")
        rows = []
        for i in range(n):
            row = [Fraction(0)] * n
            if i < m:
                row[:m] = step.matrix[i]
            else:
                row[i] = Fraction(1)
            rows.append(tuple(row))
        shift = tuple(step.shift) + (Fraction(0),) * (n - m)
        return Affine(tuple(rows), shift)
    if isinstance(step, Blowup):
        return step
    return Quasitranslation(step.axis, embed(step.graph, n))


def lift_steps(steps: Iterable[Step], n: int) -> list[Step]:
    return [lift_step(s, n) for s in steps]


def symbolic_jacobian(chart: ChartMap, trunc: int | None = None) -> Series:
    """Jacobian determinant of the chart map as a series in chart-local coordinates.

    The determinant is the product over steps of each step's determinant
    evaluated at the suffix map, so it needs the suffix components
    symbolically; affine steps contribute constants and quasitranslations
    contribute 1.
    """
    n = chart.n
    comps = [variable(n, i) for i in range(n)]
    det = constant(n, 1, trunc)
    for step in reversed(chart.steps):
        if isinstance(step, Affine):
            det = det.scale(mat_det(step.matrix))
        elif isinstance(step, Blowup):
            det = (det * comps[step.k]).truncate(trunc)
        comps = _push_step_symbolic(step, comps, n, trunc)
    return det
