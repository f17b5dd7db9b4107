"""Local resolution driver.

Builds an atlas of chart maps on which the input series, the Jacobian
determinant of each chart, and every original coordinate except the last
factor as a monomial times a unit. Each level of the recursion prepares the
series along a distinguished axis, splits the unit cube into monomial
regions attached to the Newton polyhedron's compact faces, recentres at
sampled base points of each region, and recurses with a strictly smaller
vanishing order.
"""

from __future__ import annotations

import itertools
import math
import random
import zlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .charts import (
    Affine,
    ChartMap,
    Quasitranslation,
    apply_chart_point,
    invert_step_point,
    lift_steps,
    substitute_step,
    symbolic_components,
    symbolic_jacobian,
)
from .errors import (
    BudgetError,
    DimensionError,
    InputZeroError,
    MonoresError,
    VerificationError,
)
from .linalg import mat_identity
from .ordering import BlowupTree, gamma_components, order_monomials, walk
from .polyhedron import build_polyhedron, compact_faces
from .regions import (
    DerivativeWitness,
    RegionConstants,
    RegionDesc,
    choose_constants,
    classify_point,
    derivative_witness,
    in_cube,
    monomial_abs,
    region_descriptions,
    sample_cube_point,
    sample_point,
    sample_region_points,
)
from .scalars import Norm
from .series import (
    Series,
    derivative,
    divide_by_monomial,
    drop_variable,
    embed,
    evaluate,
    evaluate_value,
    factor_monomial,
    invert_unit,
    monomial,
)

COVER_ROUNDS = 8
BASES_PER_ROUND = 4
GROWTH_CAP = 64
CUBE_START = Fraction(1, 2)
CUBE_FLOOR = Fraction(1, 256)
RADIUS_STEPS = 200
SNAP_DENOMINATOR = 32
ROOT_FACTOR_BUDGET = 20000
LADDER_LEVELS = 16
LADDER_TRUNC = 12
NEWTON_ROUNDS = 40
SERIES_NEWTON_ROUNDS = 6
LADDER_FLOOR = Fraction(1, 64)
LADDER_EDGE = Fraction(1, 32)


@dataclass(frozen=True)
class EngineConfig:
    trunc_order: int = 12
    growth: int = 4
    max_charts: int = 4096
    max_depth: int = 32
    samples: int = 24
    seed: int = 0
    norm: Norm = Norm()
    radius: Fraction | None = None
    epsilon: Fraction = Fraction(1, 16)
    direction_cap: int = 3


def seed_for(seed: int, path: tuple, salt) -> int:
    """Stable per-site RNG seed (crc32 so runs reproduce across processes)."""
    return zlib.crc32(repr((seed, path, salt)).encode())


# -- preparation along an axis -------------------------------------------------


def min_order_direction(
    s: Series, cap: int = 3, allowed: Iterable[int] | None = None
) -> tuple[int, tuple]:
    """Vanishing order m of s at 0 and a direction with nonzero m-th derivative.

    The direction is a nonnegative integer vector, preferring the last axis,
    then the other axes, then a small grid. Entries up to max(cap, m) are
    enough: the order-m part is a nonzero polynomial of degree m, so it
    cannot vanish on the whole grid {0..m}^n. When `allowed` is given the
    direction is supported on those variables only and m is the vanishing
    order of the restriction of s to that coordinate subspace.
    """
    if s.is_zero():
        raise InputZeroError("the zero series has no vanishing order")
    if s.constant_term() != 0:
        raise MonoresError("series is already a unit at the origin")
    n = s.n
    if allowed is None:
        slots = list(range(n))
        restricted = s.terms
    else:
        slots = sorted(set(allowed))
        aset = set(slots)
        restricted = {
            e: c
            for e, c in s.terms.items()
            if all(l in aset for l in range(n) if e[l])
        }
        if not restricted:
            raise MonoresError("series vanishes on the allowed coordinate subspace")
    m = min(sum(e) for e in restricted)
    part = {e: c for e, c in restricted.items() if sum(e) == m}

    def order_part(v) -> Fraction:
        total = Fraction(0)
        for e, c in part.items():
            w = c
            for vi, ei in zip(v, e):
                if ei:
                    if vi == 0:
                        w = Fraction(0)
                        break
                    w *= Fraction(vi) ** ei
            total += w
        return total

    pref = ([n - 1] if n - 1 in slots else []) + [a for a in slots if a != n - 1]
    for a in pref:
        v = tuple(1 if i == a else 0 for i in range(n))
        if order_part(v) != 0:
            return m, v
    bound = max(cap, m)
    seen = set()
    for fill in itertools.product(range(bound + 1), repeat=len(slots)):
        if not any(fill):
            continue
        v = [0] * n
        for slot, val in zip(slots, fill):
            v[slot] = val
        g = math.gcd(*v)
        seen.add(tuple(x // g for x in v))
    for v in sorted(seen, key=lambda t: (sum(t), t)):
        if order_part(v) != 0:
            return m, v
    raise MonoresError("no grid direction has a nonzero order-m derivative")


def rotate_to_axis(s: Series, v) -> tuple[Series, Affine]:
    """Linear change of variables sending the last axis to the direction v.

    The returned matrix keeps the other coordinate axes where possible; when
    v has no component along the last axis, the first axis in its support
    takes over the vacated slot so the matrix stays invertible.
    """
    n = s.n
    vv = [int(x) for x in v]
    if len(vv) != n or not any(vv):
        raise DimensionError("direction has wrong length or is zero")
    g = math.gcd(*vv)
    vv = [x // g for x in vv]
    axis = n - 1
    cols = [[Fraction(1) if i == j else Fraction(0) for i in range(n)] for j in range(n)]
    cols[axis] = [Fraction(x) for x in vv]
    if vv[axis] == 0:
        r = next(i for i in range(n) if vv[i])
        cols[r] = [Fraction(1) if i == axis else Fraction(0) for i in range(n)]
    matrix = tuple(tuple(cols[j][i] for j in range(n)) for i in range(n))
    step = Affine.make(matrix)
    return substitute_step(s, step, s.trunc), step


def _eval_at_axis(s: Series, axis: int, g: Series, trunc: int | None) -> Series:
    shifted = substitute_step(s, Quasitranslation(axis, g), trunc)
    return shifted.coefficient_of_axis_power(axis, 0)


def graph_function(s: Series, m: int, order: int) -> Series:
    """Graph of the last axis over the others along which d^(m-1) s vanishes.

    Newton iteration on h = (d/dx_n)^(m-1) s solves h(x', g(x')) = 0 with
    g(0) = 0. The result has n-1 variables. If s is a polynomial and the
    final residual vanishes exactly the graph is returned untruncated.
    """
    n = s.n
    if n < 2:
        raise DimensionError("graphs need at least two variables")
    axis = n - 1
    h = s
    for _ in range(m - 1):
        h = derivative(h, axis)
    dh = derivative(h, axis)
    if dh.constant_term() == 0:
        raise MonoresError("degenerate direction: the implicit derivative vanishes")
    g = Series(n, {}, None)
    rounds = max(1, order).bit_length() + 2
    for _ in range(rounds):
        hg = _eval_at_axis(h, axis, g, order)
        if hg.is_zero():
            break
        dhg = _eval_at_axis(dh, axis, g, order)
        g = (g - hg * invert_unit(dhg, order)).truncate(order)
    else:
        raise MonoresError("graph iteration did not converge")
    if g.constant_term() != 0:
        raise MonoresError("graph failed to vanish at the origin")
    if not g.is_zero() and s.trunc is None:
        exact = Series(n, g.terms, None)
        if _eval_at_axis(h, axis, exact, None).is_zero():
            g = exact
    return drop_variable(g, axis)


def _axis_groups(F: Series) -> dict[int, Series]:
    n = F.n
    axis = n - 1
    top = max((e[axis] for e in F.terms), default=0)
    m = None
    for p in range(top + 1):
        if F.coefficient_of_axis_power(axis, p).constant_term() != 0:
            m = p
            break
    if m is None:
        raise MonoresError("no axis coefficient is a unit")
    if m >= 1 and not F.coefficient_of_axis_power(axis, m - 1).is_zero():
        raise MonoresError("coefficient just below the unit order did not vanish")
    groups: dict[int, Series] = {}
    lower = Series(n, {}, F.trunc)
    for p in range(m):
        hp = F.coefficient_of_axis_power(axis, p)
        if hp.is_zero():
            continue
        groups[p] = hp
        step = monomial(n, tuple(p if i == axis else 0 for i in range(n)))
        lower = lower + hp * step
    hm = divide_by_monomial(F - lower, tuple(m if i == axis else 0 for i in range(n)))
    if hm.constant_term() == 0:
        raise MonoresError("top coefficient is not a unit")
    groups[m] = hm
    return groups


def weierstrass_form(s: Series, g: Series) -> dict[int, Series]:
    """Axis-power grouping {p: h_p} of s with the graph substituted in.

    The keys are the powers of the last axis with a nonzero grouped
    coefficient; the largest key m has h_m(0) != 0, every lower one has
    h_p(0) = 0, and the coefficient at m-1 must vanish identically.
    """
    n = s.n
    if g.n != n - 1:
        raise DimensionError("graph must have one variable fewer than the series")
    if g.is_zero():
        return _axis_groups(s)
    ge = embed(g, n)
    F = substitute_step(s, Quasitranslation(n - 1, ge), g.trunc)
    return _axis_groups(F)


def coefficient_product(groups: dict[int, Series]) -> Series:
    """Product of the first n-1 coordinates and the vanishing coefficients.

    Monomializing this single function (in n-1 variables) monomializes every
    coordinate and every h_p with p < m-1 at once, which is what the lower
    recursion level needs.
    """
    m = max(groups)
    hm = groups[m]
    n = hm.n
    if n < 2:
        raise DimensionError("coefficient product needs at least two variables")
    axis = n - 1
    prod = monomial(n, tuple(1 if i < axis else 0 for i in range(n)))
    for p in sorted(groups):
        if p <= m - 2:
            prod = prod * groups[p]
    return drop_variable(prod, axis)


# -- certified unit neighborhoods ----------------------------------------------


def unit_radius(u: Series, norm: Norm, cap: Fraction = Fraction(1)) -> Fraction:
    """A cube half-width on which u provably has no zero.

    Shrinks geometrically until the tail of u is dominated by its constant
    term: in the real case the coefficient sum times powers of r, in the
    ultrametric case the largest single term.
    """
    c0 = norm.abs(u.constant_term())
    if c0 == 0:
        raise MonoresError("not a unit: zero constant term")

    def dominated(r: Fraction) -> bool:
        if norm.kind == "padic":
            tail = max(
                (norm.abs(c) * r ** sum(e) for e, c in u.terms.items() if any(e)),
                default=Fraction(0),
            )
        else:
            tail = sum(
                (norm.abs(c) * r ** sum(e) for e, c in u.terms.items() if any(e)),
                Fraction(0),
            )
        return tail < c0

    shrink = Fraction(1, norm.p) if norm.kind == "padic" else Fraction(1, 2)
    r = Fraction(cap)
    for _ in range(RADIUS_STEPS):
        if dominated(r):
            if norm.kind == "padic" or r == cap:
                return r
            # Push back toward the last failing width; ultrametric radii
            # only take values at powers of p, so there bisection buys
            # nothing, but over the reals it recovers up to a factor 2.
            lo, hi = r, r * 2
            for _ in range(6):
                mid = (lo + hi) / 2
                if dominated(mid):
                    lo = mid
                else:
                    hi = mid
            return lo
        r *= shrink
    raise MonoresError("unit radius underflowed")


# -- charts and atlases ----------------------------------------------------------


@dataclass
class Chart:
    """One finished chart of the atlas.

    `map` sends chart-local coordinates to the input coordinates. On the
    local cube of half-width `radius`, the pulled-back input equals
    x^monomial * unit, the Jacobian determinant of `map` equals
    x^jacobian_monomial * jacobian_unit, and each original coordinate except
    the last equals a monomial times a unit as well. `member_from(k, pt)`
    tests membership of a point given in the frame after the first k steps.
    """

    index: int
    path: tuple
    map: ChartMap
    base: tuple
    radius: Fraction
    monomial: tuple
    unit: Series
    jacobian_monomial: tuple
    jacobian_unit: Series
    coordinate_monomializations: tuple
    witness: DerivativeWitness | None
    unit_floor: Fraction
    region_ids: tuple | None
    depth: int
    truncated: bool
    member_from: object = field(repr=False, compare=False)


@dataclass
class Atlas:
    input: Series
    config: EngineConfig
    charts: list
    stats: dict

    def locate(self, x) -> Chart | None:
        for chart in self.charts:
            if chart.member_from(0, x):
                return chart
        return None


def _make_membership(n: int, steps: list, atoms: tuple, radius: Fraction, norm: Norm):
    steps_t = tuple(steps)
    atoms_t = ()  # experiment: radius-only membership
    total = len(steps_t)

    def member_from(k: int, point) -> bool:
        try:
            cur = [Fraction(v) for v in point]
        except (TypeError, ValueError):
            return False
        if len(cur) != n or not 0 <= k <= total:
            return False
        stage = k
        try:
            for s, _label, fn in atoms_t:
                if s < k:
                    continue
                while stage < s:
                    cur = invert_step_point(steps_t[stage], cur)
                    if cur is None:
                        return False
                    stage += 1
                if not fn(cur):
                    return False
            while stage < total:
                cur = invert_step_point(steps_t[stage], cur)
                if cur is None:
                    return False
                stage += 1
        except (MonoresError, ZeroDivisionError):
            return False
        return all(norm.abs(w) <= radius for w in cur)

    return member_from


# -- exact root hunting along lines ----------------------------------------------


def _poly_mul(a: list, b: list) -> list:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


def _line_coefficients(s: Series, x0, beta) -> list:
    """Coefficients of t -> s(x0 + t*beta), lowest degree first."""
    acc: dict[int, Fraction] = {}
    for e, c in s.terms.items():
        poly = [Fraction(c)]
        for l, k in enumerate(e):
            if k == 0:
                continue
            lin = [Fraction(x0[l]), Fraction(beta[l])]
            for _ in range(k):
                poly = _poly_mul(poly, lin)
        for d, v in enumerate(poly):
            if v:
                acc[d] = acc.get(d, Fraction(0)) + v
    top = max(acc, default=-1)
    out = [acc.get(d, Fraction(0)) for d in range(top + 1)]
    while out and out[-1] == 0:
        out.pop()
    return out


def _divisors(x: int, budget: int) -> list | None:
    x = abs(x)
    if x == 0:
        return None
    out = []
    d = 1
    steps = 0
    while d * d <= x:
        steps += 1
        if steps > budget:
            return None
        if x % d == 0:
            out.append(d)
            out.append(x // d)
        d += 1
    return sorted(set(out))


def _rational_roots(coeffs: list) -> list:
    """All rational roots of the given polynomial, by exact trial division."""
    cs = list(coeffs)
    while cs and cs[-1] == 0:
        cs.pop()
    if len(cs) <= 1:
        return []
    roots = []
    while cs and cs[0] == 0:
        if 0 not in roots:
            roots.append(Fraction(0))
        cs = cs[1:]
    if len(cs) <= 1:
        return sorted(roots)
    den = math.lcm(*(c.denominator for c in cs))
    ints = [int(c * den) for c in cs]
    ps = _divisors(ints[0], ROOT_FACTOR_BUDGET)
    qs = _divisors(ints[-1], ROOT_FACTOR_BUDGET)
    if ps is None or qs is None:
        return sorted(roots)
    for p in ps:
        for q in qs:
            for cand in (Fraction(p, q), Fraction(-p, q)):
                if cand in roots:
                    continue
                val = Fraction(0)
                for c in reversed(cs):
                    val = val * cand + c
                if val == 0:
                    roots.append(cand)
    return sorted(roots)


def _poly_eval(coeffs: list, t: Fraction) -> Fraction:
    val = Fraction(0)
    for c in reversed(coeffs):
        val = val * t + c
    return val


def _line_newton(coeffs: list) -> Fraction | None:
    """Approximate the polynomial root nearest 0 by rational Newton steps.

    The iterates are clamped to a bounded denominator so that the exact
    arithmetic stays cheap; the returned value is a close rational
    approximation of the root, never an exact root.
    """
    cs = list(coeffs)
    while cs and cs[-1] == 0:
        cs.pop()
    if len(cs) <= 1:
        return None
    ds = [c * k for k, c in enumerate(cs)][1:]
    t = Fraction(0)
    settled = False
    for _ in range(NEWTON_ROUNDS):
        dv = _poly_eval(ds, t)
        if dv == 0:
            return None
        step = _poly_eval(cs, t) / dv
        t2 = (t - step).limit_denominator(1 << 96)
        if abs(t2) > 2:
            return None
        if abs(t2 - t) <= Fraction(1, 1 << 40):
            settled = True
            t = t2
            break
        t = t2
    return t if settled else None


def _graph_newton(s: Series, trunc: int) -> Series | None:
    """Rational series following the zero sheet of s as a graph on the last axis.

    Newton iteration in the truncated series ring: the result q satisfies
    s(x', q(x')) ~ 0 up to the accuracy the rational starting point allows.
    The constant term is carried along, so the sheet need not pass through
    the origin exactly.
    """
    n = s.n
    axis = n - 1
    top = max((e[axis] for e in s.terms), default=0)
    if top < 1:
        return None
    a = [s.coefficient_of_axis_power(axis, p) for p in range(top + 1)]
    q = Series(n, {}, trunc)
    for _ in range(SERIES_NEWTON_ROUNDS):
        num = Series(n, {}, trunc)
        den = Series(n, {}, trunc)
        for p in range(top, -1, -1):
            num = (num * q).truncate(trunc) + a[p]
            if p >= 1:
                den = (den * q).truncate(trunc) + a[p].scale(p)
        if den.constant_term() == 0:
            return None
        q2 = (q - num * invert_unit(den, trunc)).truncate(trunc)
        q2 = _clamp_coefficients(q2)
        if q2.terms == q.terms:
            break
        q = q2
    return q


def _clamp_coefficients(s: Series) -> Series:
    terms = {}
    for e, c in s.terms.items():
        c2 = c.limit_denominator(1 << 96)
        if c2:
            terms[e] = c2
    return Series(s.n, terms, s.trunc)


# -- the resolver ----------------------------------------------------------------


class _Resolver:
    def __init__(self, cfg: EngineConfig):
        self.cfg = cfg
        self.norm = cfg.norm
        self.closed = 0
        self.stats = {
            "closed_charts": 0,
            "inner_charts": 0,
            "machinery_runs": 0,
            "regions": 0,
            "empty_regions": 0,
            "unsampled_regions": 0,
            "residual_misses": 0,
            "recursions": 0,
            "max_depth": 0,
            "max_order": 0,
            "growth_N": cfg.growth,
            "growth_cap_hits": 0,
            "truncated_charts": 0,
            "patch_depth_hits": 0,
            "ladder_charts": 0,
        }

    def _seed(self, path: tuple, salt) -> int:
        return seed_for(self.cfg.seed, path, salt)

    def _spend(self, depth: int):
        if depth > self.cfg.max_depth:
            raise BudgetError(f"recursion depth exceeded {self.cfg.max_depth}")
        if self.closed >= self.cfg.max_charts:
            raise BudgetError(f"chart budget exceeded {self.cfg.max_charts}")

    # .. the top of one recursion level ..........................................

    def resolve_local(
        self,
        work: Series,
        full: Series,
        steps: list,
        atoms: tuple,
        path: tuple,
        depth: int,
        m_bound: int | None,
        measure: tuple | None,
        out: list,
        region_ids: tuple | None = None,
        witness: DerivativeWitness | None = None,
        allowed: tuple | None = None,
    ):
        self._spend(depth)
        entry_steps = steps
        _mono, u = factor_monomial(work)
        if u.constant_term() != 0:
            self._close(full, steps, atoms, path, depth, region_ids, witness, out)
            return
        n = work.n
        if n < 2:
            raise MonoresError("a one-variable series always factors; this is unreachable")
        m, v = min_order_direction(u, self.cfg.direction_cap, allowed)
        if m_bound is not None and m > m_bound:
            raise VerificationError(f"vanishing order {m} exceeds the bound {m_bound}")
        if measure is not None and (n, m) >= measure:
            raise VerificationError(f"termination measure failed to decrease at {path}")
        self.stats["max_order"] = max(self.stats["max_order"], m)
        axis_unit = tuple(1 if i == n - 1 else 0 for i in range(n))
        w = u
        if tuple(v) != axis_unit:
            w, rot = rotate_to_axis(u, v)
            full = substitute_step(full, rot, full.trunc)
            steps = steps + [rot]
        g = graph_function(w, m, self.cfg.trunc_order)
        if not g.is_zero():
            prep = Quasitranslation(n - 1, embed(g, n))
            w = substitute_step(w, prep, g.trunc)
            full = substitute_step(full, prep, g.trunc)
            steps = steps + [prep]
        groups = _axis_groups(w)
        if m == 1:
            self._close(full, steps, atoms, path, depth, region_ids, witness, out)
            return
        if n == 2:
            branches = [(0, [], None)]
        else:
            z = coefficient_product(groups)
            inner: list = []
            self.stats["recursions"] += 1
            self.resolve_local(
                z, z, [], (), path + (("z",),), depth + 1, None, (n, m), inner
            )
            self.stats["inner_charts"] += len(inner)
            branches = [
                (q, lift_steps(ch.map.steps, n), ch) for q, ch in enumerate(inner)
            ]
        first_all = len(out)
        records: list = []
        tinies: list = []
        ran_machinery = False
        for q, lifted, inner_chart in branches:
            bpath = path + (("q", q),)
            bsteps = steps + list(lifted)
            batoms = atoms
            if inner_chart is not None:
                stage = len(steps)
                fn = self._inner_atom(inner_chart, n)
                batoms = batoms + ((stage, f"inner-chart-{q}", fn),)
            work_q = w
            full_q = full
            for st in lifted:
                work_q = substitute_step(work_q, st, work_q.trunc)
                full_q = substitute_step(full_q, st, full_q.trunc)
            tiny = None
            _mq, uq = factor_monomial(work_q)
            if uq.constant_term() != 0:
                self._close(full_q, bsteps, batoms, bpath, depth, region_ids, witness, out)
            else:
                consts = self._machinery(
                    work_q, full_q, bsteps, batoms, bpath, depth, m, out
                )
                tiny = consts.cube_bound()
                tinies.append(tiny)
                ran_machinery = True
            if inner_chart is not None:
                records.append(
                    {
                        "lifted": list(lifted),
                        "inner": inner_chart,
                        "steps": bsteps,
                        "atoms": batoms,
                        "path": bpath,
                        "work": work_q,
                        "full": full_q,
                        "unit": uq,
                        "tiny": tiny,
                        "seen": set(),
                        "counter": 0,
                        "ladders": 0,
                        "ladder_tries": 0,
                    }
                )
        if records or ran_machinery:
            entry = min(tinies, default=CUBE_START)
            self._cover_rounds(
                w, full, entry_steps, steps, atoms, path, depth,
                records, first_all, entry * entry, out,
            )

    @staticmethod
    def _inner_atom(chart: Chart, n: int):
        def fn(pt) -> bool:
            return bool(chart.member_from(0, list(pt)[: n - 1]))

        return fn

    # .. covering the rest of the entry ball ....................................

    def _cover_rounds(
        self,
        work: Series,
        full: Series,
        entry_steps: list,
        steps: list,
        atoms: tuple,
        path: tuple,
        depth: int,
        records: list,
        first: int,
        entry: Fraction,
        out: list,
    ):
        """Cover entry points whose branch pullbacks lie outside every
        classification cube.

        A point entering through an inner chart carries coordinates as large
        as that chart's radius, far beyond the cube on which the region
        decomposition was certified. Sample the entry ball, test coverage
        against everything this level produced, and recentre the resolution
        inside the branch owning each miss; the recentred series is a unit
        almost everywhere, and near the zero set a nearby line root gives a
        centre where a fresh preparation applies.
        """
        n = work.n
        norm = self.norm
        frame = len(entry_steps)
        prep = steps[len(entry_steps):]
        fallback_unit = factor_monomial(work)[1]
        fallback_seen: set = set()
        fallback_counter = 0
        misses: list = []
        rounds = COVER_ROUNDS if depth else 2 * COVER_ROUNDS
        want = max(8, self.cfg.samples if depth else 2 * self.cfg.samples)
        for rnd in range(rounds):
            rng = random.Random(self._seed(path, ("cover", rnd)))
            pts: list = []
            draws = 0
            while len(pts) < want and draws < 4 * want:
                draws += 1
                x = [Fraction(v) for v in sample_point(rng, n, norm, entry, 8)]
                if all(v != 0 for v in x):
                    pts.append(x)
            misses = [
                x
                for x in pts
                if not any(out[i].member_from(frame, x) for i in range(first, len(out)))
            ]
            if not misses:
                break
            spawned = 0
            for x in misses:
                if spawned >= BASES_PER_ROUND:
                    break
                w0 = self._pull(x, prep)
                if w0 is None:
                    continue
                rec = None
                wq = None
                for r in records:
                    if not r["inner"].member_from(0, w0[: n - 1]):
                        continue
                    cand_wq = self._pull(w0, r["lifted"])
                    if cand_wq is None:
                        continue
                    rec = r
                    wq = cand_wq
                    break
                before = len(out)
                if rec is not None:
                    box = min(rec["inner"].radius, Fraction(1))
                    cands = self._patch_candidates(rec["work"], rec["unit"], wq, box)
                    root = next(
                        (c for c in cands
                         if c not in rec["seen"]
                         and evaluate_value(rec["unit"], c) == 0),
                        None,
                    )
                    if root is not None:
                        rec["seen"].add(root)
                        self._patch(rec["work"], rec["full"], rec["steps"],
                                    rec["atoms"], rec["path"], depth, root,
                                    rec["counter"], out)
                        rec["counter"] += 1
                    elif rec["ladders"] < 2 and rec["ladder_tries"] < 4:
                        rec["ladder_tries"] += 1
                        if self._sheet_ladder(rec["work"], rec["full"],
                                              rec["steps"], rec["atoms"],
                                              rec["path"], depth, wq, out):
                            rec["ladders"] += 1
                    # A root or ladder near the miss may still leave the miss
                    # itself outside every new chart; recentring on the point
                    # is the guarantee that each handled miss gets covered.
                    if not any(out[i].member_from(frame, x)
                               for i in range(before, len(out))):
                        pt = tuple(wq)
                        if pt not in rec["seen"]:
                            rec["seen"].add(pt)
                            self._patch(rec["work"], rec["full"], rec["steps"],
                                        rec["atoms"], rec["path"], depth, pt,
                                        rec["counter"], out)
                            rec["counter"] += 1
                else:
                    # No branch accepts this point's pullback; recentre at the
                    # prepared level to cover holes between the inner charts.
                    pt = tuple(w0)
                    if pt not in fallback_seen:
                        fallback_seen.add(pt)
                        self._patch(work, full, steps, atoms, path, depth,
                                    pt, fallback_counter, out)
                        fallback_counter += 1
                if len(out) > before:
                    spawned += 1
            if not spawned:
                break
        self.stats["residual_misses"] += len(misses)

    def _pull(self, x, through: list):
        w = list(x)
        try:
            for st in through:
                w = invert_step_point(st, w)
                if w is None:
                    return None
        except (MonoresError, ZeroDivisionError):
            return None
        return [Fraction(v) for v in w]

    def _patch(self, work, full, steps, atoms, path, depth, base, counter, out,
               aff=None):
        n = work.n
        if aff is None:
            aff = self._scaled_shift(base)
        work1 = substitute_step(work, aff, work.trunc)
        full1 = substitute_step(full, aff, full.trunc)
        bpath = path + (("b", counter),)
        try:
            self.resolve_local(
                work1, full1, steps + [aff], atoms, bpath,
                depth + 1, None, None, out,
            )
        except BudgetError:
            if self.closed >= self.cfg.max_charts:
                raise
            self.stats["patch_depth_hits"] += 1

    @staticmethod
    def _scaled_shift(base) -> Affine:
        """Recentre at `base` with coordinates scaled by their centre values.

        Substituting x_i = b_i * (1 + y_i) gives the local cube a relative
        extent: one chart covers a fixed fraction of each coordinate's
        magnitude instead of a fixed absolute box, so a single patch spans a
        whole dyadic shell of the coordinates it recentres.
        """
        n = len(base)
        mat = [[Fraction(0)] * n for _ in range(n)]
        for i, b in enumerate(base):
            mat[i][i] = Fraction(b) if b != 0 else Fraction(1)
        return Affine.make(mat, list(base))

    # .. flattening an irrational zero sheet .....................................

    def _sheet_ladder(
        self,
        work: Series,
        full: Series,
        steps: list,
        atoms: tuple,
        path: tuple,
        depth: int,
        w,
        out: list,
    ) -> int:
        """Cover a dyadic ladder of shells around a smooth zero sheet.

        Rational points on the zero set of the unit factor are usually
        unavailable, so recentring alone leaves an uncovered collar whose
        width is the distance to the nearest exact centre. Instead the sheet
        through the probe `w` is straightened: a rational series built by
        Newton iteration follows the sheet as a graph over the remaining
        variables, a quasitranslation subtracts it, and scaled recenterings
        at heights +-2^-j then cover every shell down to the flattening
        error. Each shell closes as a single unit chart whose box is wide in
        the sheet directions, which is what pointwise patches cannot give.
        """
        n = work.n
        norm = self.norm
        _mono, u = factor_monomial(work)
        best = Fraction(0)
        l_star = None
        for l in range(n):
            g = norm.abs(evaluate_value(derivative(u, l), w))
            if g > best:
                best, l_star = g, l
        if l_star is None:
            return 0
        axis = tuple(Fraction(1 if i == l_star else 0) for i in range(n))
        coeffs = _line_coefficients(u, tuple(w), axis)
        r = _line_newton(coeffs)
        if r is None:
            return 0
        centre = [Fraction(v) for v in w]
        centre[l_star] += r
        if any(norm.abs(c) < LADDER_EDGE for c in centre):
            # Level boxes keep unit extent in the sheet directions, so a
            # centre this close to a coordinate hyperplane would cross it
            # and every level would close with a collapsed radius.
            return 0
        if _poly_eval(coeffs, r) == 0:
            # The sheet is rational here; a recentred preparation straightens
            # it exactly, which one chart covers better than a level stack.
            before = len(out)
            self._patch(work, full, steps, atoms, path + (("l",),), depth,
                        tuple(centre), 0, out)
            return len(out) - before
        pre = steps
        trunc = work.trunc if work.trunc is not None else LADDER_TRUNC
        trunc = min(trunc, LADDER_TRUNC)
        ftr = self.cfg.trunc_order
        if full.trunc is not None:
            ftr = min(ftr, full.trunc)
        aff0 = Affine.make(mat_identity(n), centre)
        w2 = substitute_step(work, aff0, trunc)
        f2 = substitute_step(full, aff0, ftr)
        u2 = substitute_step(u, aff0, trunc)
        pre = pre + [aff0]
        if l_star != n - 1:
            mat = [list(row) for row in mat_identity(n)]
            mat[l_star], mat[n - 1] = mat[n - 1], mat[l_star]
            perm = Affine.make(mat)
            w2 = substitute_step(w2, perm, trunc)
            f2 = substitute_step(f2, perm, ftr)
            u2 = substitute_step(u2, perm, trunc)
            pre = pre + [perm]
        graph = _graph_newton(u2, trunc)
        if graph is None:
            return 0
        q0 = graph.constant_term()
        tail = graph - Series(n, {(0,) * n: q0}, graph.trunc)
        if not tail.is_zero():
            flat = Quasitranslation(n - 1, tail)
            w2 = substitute_step(w2, flat, trunc)
            f2 = substitute_step(f2, flat, ftr)
            pre = pre + [flat]
        cperm = list(centre)
        if l_star != n - 1:
            cperm[l_star], cperm[n - 1] = cperm[n - 1], cperm[l_star]
        added = 0
        counter = 0
        for sign in (1, -1):
            bad = 0
            for j in range(1, LADDER_LEVELS + 1):
                s0 = q0 + Fraction(sign, 1 << j)
                if s0 == 0:
                    continue
                base = (Fraction(0),) * (n - 1) + (s0,)
                if evaluate_value(w2, base) == 0:
                    continue
                # The sheet directions stay offsets from the centre, so scale
                # them by the centre coordinates to keep the level box away
                # from the coordinate hyperplanes; the normal direction is
                # scaled by the level height as usual.
                mat = [[Fraction(0)] * n for _ in range(n)]
                for i in range(n - 1):
                    mat[i][i] = Fraction(cperm[i])
                mat[n - 1][n - 1] = s0
                aff = Affine.make(mat, list(base))
                before = len(out)
                self._patch(w2, f2, pre, atoms, path + (("l",),), depth,
                            base, counter, out, aff=aff)
                counter += 1
                if len(out) == before:
                    continue
                added += len(out) - before
                if out[-1].radius < LADDER_FLOOR:
                    bad += 1
                    if bad >= 2:
                        break
                else:
                    bad = 0
        self.stats["ladder_charts"] += added
        return added

    def _patch_candidates(self, work: Series, unit: Series, u, box) -> list:
        """Centres for a recentred resolution near a missed probe.

        The nearest rational line root of the unit factor along a coordinate
        axis is preferred, since centring on its zero set lets the next
        preparation straighten it. A low-denominator snap comes next, and the
        probe itself is the fallback that always covers the miss. A candidate
        is kept only when the recentred series is a unit or has a simple
        zero, so every patch closes after at most one preparation instead of
        cascading into another level of machinery.
        """
        n = len(u)
        norm = self.norm
        lim = max(Fraction(1), box)
        cands: list = []
        roots: list = []
        for l in range(n):
            axis = tuple(Fraction(1 if i == l else 0) for i in range(n))
            for t in _rational_roots(_line_coefficients(unit, tuple(u), axis)):
                cand = tuple(x + t * a for x, a in zip(u, axis))
                if all(norm.abs(v) <= lim for v in cand):
                    roots.append((norm.abs(t), cand))
        for _d, cand in sorted(roots):
            if cand not in cands:
                cands.append(cand)
        snapped = tuple(Fraction(v).limit_denominator(SNAP_DENOMINATOR) for v in u)
        raw = tuple(Fraction(v) for v in u)
        for cand in (snapped, raw):
            if cand not in cands:
                cands.append(cand)
        grads = None
        kept: list = []
        for cand in cands:
            if evaluate_value(work, cand) != 0:
                kept.append(cand)
                continue
            if grads is None:
                grads = [derivative(work, l) for l in range(n)]
            if any(evaluate_value(g, cand) != 0 for g in grads):
                kept.append(cand)
        return kept

    # .. region machinery for one prepared branch ...............................

    def _machinery(
        self,
        work: Series,
        full: Series,
        steps: list,
        atoms: tuple,
        path: tuple,
        depth: int,
        m: int,
        out: list,
    ) -> RegionConstants:
        self.stats["machinery_runs"] += 1
        norm = self.norm
        poly = build_polyhedron(work)
        faces = compact_faces(poly)
        tree = order_monomials(tuple(sorted({v for f in faces for v in f.vertices})))
        consts = self._adaptive_constants(poly, faces, tree, path)
        top_level = not any(p == ("z",) for p in path)
        if top_level and "suggested_radius" not in self.stats:
            b = consts.cube_bound()
            self.stats["suggested_radius"] = b * b
        regions = region_descriptions(tree, faces, consts)
        self.stats["regions"] += len(regions)
        leaf_by_id = {leaf.chart_id: leaf for leaf in tree.leaves}
        stage = len(steps)
        cube_atom = (stage, "cube", lambda pt, c=consts: in_cube(pt, c, norm))
        for region in regions:
            if region.empty:
                self.stats["empty_regions"] += 1
                continue
            leaf = leaf_by_id[region.chart_id]
            gsteps = list(leaf.steps)
            comp = work
            fullg = full
            for st in gsteps:
                comp = substitute_step(comp, st, comp.trunc)
                fullg = substitute_step(fullg, st, fullg.trunc)
            R = divide_by_monomial(comp, region.alpha)
            want = (region.face_dim, region.face_index)

            def face_atom(pt, c=consts, fs=faces, w=want) -> bool:
                try:
                    return classify_point(pt, c, fs, norm) == w
                except MonoresError:
                    return False

            def leaf_atom(pt, t=tree, w=region.chart_id) -> bool:
                try:
                    return walk(t, pt, norm)[0].chart_id == w
                except MonoresError:
                    return False

            ratoms = atoms + (
                cube_atom,
                (stage, f"face-{want[0]}-{want[1]}", face_atom),
                (stage, f"leaf-{region.chart_id}", leaf_atom),
            )
            rpath = path + (("r", region.face_dim, region.face_index, region.chart_id),)
            self._populate_region(
                region,
                R,
                fullg,
                steps + gsteps,
                ratoms,
                rpath,
                depth,
                m,
                tree,
                faces,
                consts,
                leaf,
                out,
            )
        return consts

    def _adaptive_constants(self, poly, faces, tree, path: tuple) -> RegionConstants:
        """Double the growth parameter until sampled cube points all land in a
        nonempty region, or the cap is hit.

        The failure that growth repairs is a point whose dominating face is
        not an initial segment of its ordering chart's chain; larger constants
        saturate the dominating set to a full face, and when growth alone
        cannot fix it a smaller cube restores the dominance structure. The
        cube is kept as large as possible so that the regions carry the
        coverage load and recentred patches stay rare. The band inequalities
        of region_monomial_predicate are deliberately not required here; they
        are checked by the verification suite with its own adaptive loop.
        """
        norm = self.norm
        last = None
        cube = CUBE_START
        while True:
            N = self.cfg.growth
            while True:
                consts = choose_constants(poly, N)
                consts.eta_estimate = self.cfg.epsilon
                consts.cube = cube
                regions = region_descriptions(tree, faces, consts)
                index = {r.ids: r for r in regions}
                rng = random.Random(self._seed(path, ("consts", N)))
                ok = True
                for _ in range(max(16, self.cfg.samples)):
                    x = sample_cube_point(rng, consts, norm)
                    got = classify_point(x, consts, faces, norm)
                    if got is None:
                        ok = False
                        break
                    leaf, _local = walk(tree, x, norm)
                    region = index.get((got[0], got[1], leaf.chart_id))
                    if region is None or region.empty:
                        ok = False
                        break
                if ok:
                    self.stats["growth_N"] = max(self.stats["growth_N"], N)
                    return consts
                last = consts
                if N >= GROWTH_CAP:
                    break
                N *= 2
            if cube <= CUBE_FLOOR:
                self.stats["growth_cap_hits"] += 1
                self.stats["growth_N"] = max(self.stats["growth_N"], last.N)
                return last
            cube /= 4

    # .. one region: witness, bases, cover loop ..................................

    def _populate_region(
        self,
        region: RegionDesc,
        R: Series,
        fullg: Series,
        steps: list,
        atoms: tuple,
        path: tuple,
        depth: int,
        m: int,
        tree: BlowupTree,
        faces,
        consts: RegionConstants,
        leaf,
        out: list,
    ):
        norm = self.norm
        witness = derivative_witness(
            region,
            R,
            m - 1,
            self.cfg.samples,
            self._seed(path, "wit"),
            tree=tree,
            faces=faces,
            consts=consts,
            norm=norm,
        )
        if witness is None:
            self.stats["unsampled_regions"] += 1
            return
        frame = len(steps)
        first = len(out)
        seen: list = []
        rng = random.Random(self._seed(path, "bases"))
        queue = sample_region_points(
            region, tree, faces, consts, norm, rng, 2, max_draws=200
        )
        counter = 0
        ladders = 0
        ladder_tries = 0
        misses: list = []
        for rnd in range(COVER_ROUNDS):
            fresh = []
            for u in queue:
                for cand, from_root in self._base_candidates(
                    region, u, R, witness, consts, leaf
                ):
                    if cand in seen:
                        continue
                    seen.append(cand)
                    fresh.append((cand, from_root))
                    if len(fresh) >= BASES_PER_ROUND:
                        break
                if len(fresh) >= BASES_PER_ROUND:
                    break
            for base, from_root in fresh:
                bpath = path + (("b", counter),)
                counter += 1
                self._resolve_at_base(
                    region,
                    R,
                    fullg,
                    steps,
                    atoms,
                    base,
                    bpath,
                    depth,
                    m,
                    witness,
                    from_root,
                    out,
                )
            prng = random.Random(self._seed(path, ("probe", rnd)))
            probes = sample_region_points(
                region, tree, faces, consts, norm, prng, self.cfg.samples
            )
            misses = [
                u
                for u in probes
                if not any(out[i].member_from(frame, u) for i in range(first, len(out)))
            ]
            if not misses:
                break
            laddered = 0
            if not fresh and rnd > 0 and ladders < 2 and ladder_tries < 4:
                unit_R = factor_monomial(R)[1]
                nearest = min(
                    misses, key=lambda u: self.norm.abs(evaluate_value(unit_R, u))
                )
                ladder_tries += 1
                laddered = self._sheet_ladder(
                    R, fullg, steps, atoms, path, depth, nearest, out
                )
                if laddered:
                    ladders += 1
            if not fresh and not laddered and rnd > 0:
                break
            queue = misses
        self.stats["residual_misses"] += len(misses)

    def _base_candidates(
        self,
        region: RegionDesc,
        u,
        R: Series,
        witness: DerivativeWitness,
        consts: RegionConstants,
        leaf,
    ) -> list:
        n = len(u)
        zset = set(region.z_vars)
        raw = tuple(Fraction(u[l]) if l in zset else Fraction(0) for l in range(n))
        cands: list = []
        found: list = []
        dirs: list = []
        if witness.order >= 1:
            dirs.append(tuple(Fraction(b) for b in witness.beta))
        for l in region.z_vars:
            axis = tuple(Fraction(1 if i == l else 0) for i in range(n))
            if axis not in dirs:
                dirs.append(axis)
        for d in dirs:
            for t in _rational_roots(_line_coefficients(R, raw, d)):
                cand = tuple(x + t * dv for x, dv in zip(raw, d))
                if cand not in found and self._base_ok(region, cand, consts, leaf):
                    found.append(cand)
                    cands.append((cand, True))
        snapped = tuple(v.limit_denominator(SNAP_DENOMINATOR) for v in raw)
        for cand in (snapped, raw):
            if cand not in found and self._base_ok(region, cand, consts, leaf):
                found.append(cand)
                cands.append((cand, False))
        return cands

    def _base_ok(self, region: RegionDesc, cand, consts: RegionConstants, leaf) -> bool:
        norm = self.norm
        zset = set(region.z_vars)
        for l, v in enumerate(cand):
            if l in zset:
                if v == 0 or norm.abs(v) > 1:
                    return False
            elif v != 0:
                return False
        if region.face_dim > 0 and region.p_exponent is not None:
            floor = Fraction(1) / consts.C[region.face_dim - 1]
            if monomial_abs(cand, region.p_exponent, norm) < floor:
                return False
        bound = consts.cube_bound()
        for col in gamma_components(leaf, len(cand)):
            if any(col[l] for l in range(len(cand)) if l not in zset):
                continue
            if monomial_abs(cand, col, norm) >= bound:
                return False
        return True

    def _resolve_at_base(
        self,
        region: RegionDesc,
        R: Series,
        fullg: Series,
        steps: list,
        atoms: tuple,
        base: tuple,
        path: tuple,
        depth: int,
        m: int,
        witness: DerivativeWitness,
        from_root: bool,
        out: list,
    ):
        n = R.n
        if any(base):
            aff = self._scaled_shift(base)
            work1 = substitute_step(R, aff, R.trunc)
            full1 = substitute_step(fullg, aff, fullg.trunc)
            steps1 = steps + [aff]
        else:
            work1 = R
            full1 = fullg
            steps1 = steps
        # A sampled base has a witness derivative of order at most m-1, which
        # bounds the next vanishing order. An exact-root base lies on the zero
        # set itself, where no such bound is available; depth limits it instead.
        self.resolve_local(
            work1,
            full1,
            steps1,
            atoms,
            path,
            depth + 1,
            None if from_root else m - 1,
            None if from_root else (n, m),
            out,
            region_ids=region.ids,
            witness=witness,
            allowed=tuple(region.z_vars) if region.z_vars else None,
        )

    # .. finishing a chart .......................................................

    def _close(
        self,
        full: Series,
        steps: list,
        atoms: tuple,
        path: tuple,
        depth: int,
        region_ids: tuple | None,
        witness: DerivativeWitness | None,
        out: list,
    ):
        self._spend(depth)
        norm = self.norm
        n = full.n
        cm = ChartMap(n, list(steps))
        inexact = full.trunc is not None or any(
            isinstance(st, Quasitranslation) and st.graph.trunc is not None
            for st in steps
        )
        trunc = self.cfg.trunc_order if inexact else None
        mono_f, unit_f = factor_monomial(full)
        if unit_f.constant_term() == 0:
            raise VerificationError(f"chart {path} did not factor as monomial times unit")
        jac = symbolic_jacobian(cm, trunc)
        jac_mono, jac_unit = factor_monomial(jac)
        if jac_unit.constant_term() == 0:
            raise VerificationError(f"chart {path} has a degenerate Jacobian factor")
        comps = symbolic_components(cm, trunc)
        coords = []
        for k in range(n - 1):
            cmono, cunit = factor_monomial(comps[k])
            if cunit.constant_term() == 0:
                raise VerificationError(
                    f"chart {path} did not monomialize coordinate {k}"
                )
            coords.append((cmono, cunit))
        units = [unit_f, jac_unit] + [cu for _cm, cu in coords]
        radius = min(unit_radius(uu, norm) for uu in units)
        floor_rng = random.Random(self._seed(path, "floor"))
        floor = None
        for _ in range(min(8, max(1, self.cfg.samples))):
            pt = sample_point(floor_rng, n, norm, radius, 4)
            mag = evaluate(unit_f, pt, norm)[1]
            floor = mag if floor is None else min(floor, mag)
        member = _make_membership(n, steps, atoms, radius, norm)
        chart = Chart(
            index=-1,
            path=path,
            map=cm,
            base=tuple(apply_chart_point(cm, [Fraction(0)] * n)),
            radius=radius,
            monomial=mono_f,
            unit=unit_f,
            jacobian_monomial=jac_mono,
            jacobian_unit=jac_unit,
            coordinate_monomializations=tuple(coords),
            witness=witness,
            unit_floor=floor if floor is not None else Fraction(0),
            region_ids=region_ids,
            depth=depth,
            truncated=trunc is not None,
            member_from=member,
        )
        out.append(chart)
        self.closed += 1
        self.stats["closed_charts"] += 1
        if trunc is not None:
            self.stats["truncated_charts"] += 1
        self.stats["max_depth"] = max(self.stats["max_depth"], depth)


def resolve(s: Series, config: EngineConfig | None = None) -> Atlas:
    """Resolve a series into an atlas of monomializing charts."""
    cfg = config if config is not None else EngineConfig()
    if not isinstance(s, Series):
        raise TypeError("resolve expects a Series")
    if s.is_zero():
        raise InputZeroError("cannot resolve the zero series")
    if cfg.trunc_order < 1 or cfg.growth < 2 or cfg.max_depth < 1:
        raise MonoresError("engine configuration out of range")
    res = _Resolver(cfg)
    out: list = []
    res.resolve_local(s, s, [], (), (), 0, None, None, out)
    out.sort(key=lambda c: c.path)
    for i, c in enumerate(out):
        c.index = i
    stats = dict(res.stats)
    stats["charts"] = len(out)
    if cfg.radius is not None:
        stats["suggested_radius"] = Fraction(cfg.radius)
    elif "suggested_radius" not in stats:
        stats["suggested_radius"] = Fraction(1, 4)
    return Atlas(input=s, config=cfg, charts=out, stats=stats)


def cover_check(
    atlas: Atlas,
    samples: int,
    radius: Fraction | None = None,
    seed: int = 0,
) -> dict:
    """Sample the punctured cube of the given half-width and count how many
    points land in some chart."""
    norm = atlas.config.norm
    n = atlas.input.n
    r = Fraction(radius) if radius is not None else Fraction(atlas.stats["suggested_radius"])
    rng = random.Random(seed)
    covered = 0
    misses = []
    drawn = 0
    while drawn < samples:
        x = sample_point(rng, n, norm, r, 8)
        if any(v == 0 for v in x):
            continue
        drawn += 1
        if atlas.locate(x) is not None:
            covered += 1
        elif len(misses) < 20:
            misses.append(tuple(x))
    return {
        "samples": samples,
        "covered": covered,
        "fraction": Fraction(covered, samples) if samples else Fraction(0),
        "misses": misses,
    }
