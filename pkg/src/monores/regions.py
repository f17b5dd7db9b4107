"""Dominance regions near the origin and their blown-up descriptions.

The punctured cube E = {0 < |x_l| < 1/C_n} is split by which compact face of
the Newton polyhedron dominates: a point belongs to the first face (scanning
dimension n-1 down to 0, index ascending) whose vertex monomials all but
match the global supremum. Pulled through an ordering chart, each such piece
acquires a monomial description: a dominance monomial p (bounded below), a
gap monomial q = s(y) t(z) (bounded above), and the shared face exponent
alpha on the y variables.

Constants: C_1 = N + 1 and C_{i+1} = C_i^N + 1, so each C_{i+1} > C_i^N. The
growth parameter N stays adjustable because the separation the construction
needs is only known to hold for N large enough; callers double it when the
sampled inclusions fail.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .errors import MonoresError, NoWitnessError
from .polyhedron import Face, Polyhedron
from .ordering import BlowupTree, apply_exponent_map, walk
from .scalars import Norm
from .series import Series, directional_derivative, evaluate

DEFAULT_ETA = Fraction(1, 16)


@dataclass
class RegionConstants:
    N: int
    C: tuple
    mu_estimate: Fraction | None = None
    eta_estimate: Fraction | None = None
    cube: Fraction | None = None

    @property
    def n(self) -> int:
        return len(self.C)

    def cube_bound(self) -> Fraction:
        """The cube half-width: an explicit override, or the default 1/C_n."""
        if self.cube is not None:
            return self.cube
        return Fraction(1) / self.C[-1]


def choose_constants(p: Polyhedron, N: int) -> RegionConstants:
    if N < 2:
        raise MonoresError("growth parameter must be at least 2")
    c = [Fraction(N + 1)]
    for _ in range(p.n - 1):
        c.append(c[-1] ** N + 1)
    return RegionConstants(N, tuple(c))


def monomial_abs(point, exponent, norm: Norm) -> Fraction:
    val = Fraction(1)
    for x, e in zip(point, exponent):
        if e:
            val *= Fraction(x) ** int(e)
    return norm.abs(val)


def in_cube(x, consts: RegionConstants, norm: Norm) -> bool:
    bound = consts.cube_bound()
    return all(v != 0 and norm.abs(v) < bound for v in x)


def classify_point(x, consts: RegionConstants, faces: list[Face], norm: Norm):
    """First face (dim descending, index ascending) dominating at x.

    Dominating means the face's vertex monomials attain the global sup over
    all vertices and stay within a factor C_i of it.
    """
    if not in_cube(x, consts, norm):
        raise MonoresError("point lies outside the punctured cube")
    vertices = sorted({v for f in faces for v in f.vertices})
    values = {v: monomial_abs(x, v, norm) for v in vertices}
    sup_all = max(values.values())
    for face in sorted(faces, key=lambda f: (-f.dim, f.index)):
        vals = [values[v] for v in face.vertices]
        if max(vals) != sup_all:
            continue
        if face.dim > 0 and min(vals) * consts.C[face.dim - 1] < sup_all:
            continue
        return (face.dim, face.index)
    return None


@dataclass(frozen=True)
class DerivativeWitness:
    beta: tuple
    order: int
    delta: Fraction
    max_order: int


@dataclass
class RegionDesc:
    """Monomial description of one (face, ordering-chart) region.

    All exponent vectors are full length n; y entries are zero in p/t and z
    entries are zero in s/alpha. `empty` regions record why they carry no
    points: the face's exponents are not an initial segment of the chart's
    chain, the dominance monomial uses every variable, or the gap monomial
    has no y part.
    """

    face_dim: int
    face_index: int
    chart_id: int
    y_vars: tuple
    z_vars: tuple
    p_exponent: tuple | None
    q_exponent: tuple | None
    s_exponent: tuple | None
    t_exponent: tuple | None
    alpha: tuple | None
    empty: bool = False
    empty_reason: str | None = None
    witness: DerivativeWitness | None = None

    @property
    def ids(self) -> tuple:
        return (self.face_dim, self.face_index, self.chart_id)


def _chain_key(v):
    return (sum(v), v)


def region_descriptions(tree: BlowupTree, faces: list[Face], consts: RegionConstants) -> list[RegionDesc]:
    n = tree.n
    if consts.n != n:
        raise MonoresError("constants were built for a different dimension")
    vertices = sorted({v for f in faces for v in f.vertices})
    if set(vertices) != set(tree.exponents):
        raise MonoresError("ordering tree was not built on the face vertices")
    out = []
    for face in sorted(faces, key=lambda f: (-f.dim, f.index)):
        for leaf in tree.leaves:
            out.append(_describe_region(face, leaf, tree, vertices, n))
    return out


def _describe_region(face: Face, leaf, tree, vertices, n: int) -> RegionDesc:
    chain = sorted((apply_exponent_map(leaf, v) for v in vertices), key=_chain_key)
    on_face = sorted((apply_exponent_map(leaf, v) for v in face.vertices), key=_chain_key)
    i, j, k = face.dim, face.index, leaf.chart_id

    def empty(reason: str) -> RegionDesc:
        return RegionDesc(i, j, k, (), (), None, None, None, None, None, True, reason)

    if chain[: len(on_face)] != on_face:
        return empty("face-not-initial")
    v_lo = chain[0]
    v_hi = on_face[-1]
    v_off = chain[len(on_face)] if len(on_face) < len(chain) else None
    p_exp = tuple(a - b for a, b in zip(v_hi, v_lo)) if i > 0 else None
    z_vars = tuple(l for l in range(n) if p_exp and p_exp[l]) if i > 0 else ()
    y_vars = tuple(l for l in range(n) if l not in z_vars)
    if i > 0 and not any(p_exp):
        raise MonoresError("positive-dimension face with constant dominance monomial")
    if not y_vars:
        return empty("no-y-variables")
    q_exp = tuple(a - b for a, b in zip(v_off, v_hi)) if v_off is not None else None
    if q_exp is not None:
        s_exp = tuple(q_exp[l] if l in y_vars else 0 for l in range(n))
        t_exp = tuple(q_exp[l] if l in z_vars else 0 for l in range(n))
        if i > 0 and not any(s_exp):
            return empty("gap-has-no-y-part")
    else:
        s_exp = None
        t_exp = None
    alpha = tuple(v_hi[l] if l in y_vars else 0 for l in range(n))
    _assert_face_exactness(chain, on_face, alpha, s_exp, y_vars)
    return RegionDesc(i, j, k, y_vars, z_vars, p_exp, q_exp, s_exp, t_exp, alpha)


def _assert_face_exactness(chain, on_face, alpha, s_exp, y_vars):
    for w in on_face:
        if any(w[l] != alpha[l] for l in y_vars):
            raise MonoresError("face exponents disagree off the dominance variables")
    floor = alpha if s_exp is None else tuple(a + s for a, s in zip(alpha, s_exp))
    for w in chain[len(on_face):]:
        if any(w[l] < floor[l] for l in y_vars):
            raise MonoresError("off-face exponent below the face floor")


def region_monomial_predicate(region: RegionDesc, consts: RegionConstants, norm: Norm):
    """The sufficient membership test in chart-local coordinates.

    Checks the cube conditions plus |s(y)| < 1/C_{n-1} and, for positive face
    dimension, |p(z)| >= 1/C_i.
    """
    if region.empty:
        return lambda u: False
    n = consts.n
    sandwich_c = consts.C[n - 2] if n >= 2 else consts.C[-1]
    s_bound = Fraction(1) / sandwich_c
    p_floor = Fraction(1) / consts.C[region.face_dim - 1] if region.face_dim > 0 else None

    def contains(u) -> bool:
        pt = [Fraction(v) for v in u]
        if any(v == 0 for v in pt):
            return False
        if region.s_exponent is not None and monomial_abs(pt, region.s_exponent, norm) >= s_bound:
            return False
        if p_floor is not None and monomial_abs(pt, region.p_exponent, norm) < p_floor:
            return False
        return True

    return contains


# -- sampling -----------------------------------------------------------------


def _dyadic_base(max_abs: Fraction) -> int:
    """Smallest e with 2^-e <= max_abs (so mantissa * 2^-e < max_abs)."""
    num, den = max_abs.numerator, max_abs.denominator
    return max(1, den.bit_length() - num.bit_length() + 1)


def sample_real_coord(rng: random.Random, max_abs: Fraction, spread: int) -> Fraction:
    base = _dyadic_base(max_abs)
    e = base + rng.randrange(spread + 1)
    mant = Fraction(64 + rng.randrange(64), 128)
    sign = 1 if rng.random() < 0.5 else -1
    return sign * mant / (1 << e)


def sample_padic_coord(rng: random.Random, p: int, max_abs: Fraction, spread: int) -> Fraction:
    v = 0
    while Fraction(1, p ** v) >= max_abs:
        v += 1
    v += rng.randrange(spread + 1)
    while True:
        a = rng.randrange(1, 64)
        if a % p:
            break
    while True:
        b = rng.randrange(1, 64)
        if b % p:
            break
    sign = 1 if rng.random() < 0.5 else -1
    return Fraction(sign * a * p ** v, b)


def sample_point(rng: random.Random, n: int, norm: Norm, max_abs: Fraction, spread: int) -> list:
    if norm.kind == "real":
        return [sample_real_coord(rng, max_abs, spread) for _ in range(n)]
    return [sample_padic_coord(rng, norm.p, max_abs, spread) for _ in range(n)]


def sample_cube_point(rng: random.Random, consts: RegionConstants, norm: Norm) -> list:
    """One point of E with per-coordinate magnitudes spread over [C_n^-2, C_n^-1)."""
    spread = int(consts.C[-1]).bit_length() if norm.kind == "real" else max(1, _padic_spread(consts, norm))
    return sample_point(rng, consts.n, norm, consts.cube_bound(), spread)


def _padic_spread(consts: RegionConstants, norm: Norm) -> int:
    v = 0
    while Fraction(1, norm.p ** v) >= consts.cube_bound():
        v += 1
    return v


def sample_region_points(region: RegionDesc, tree: BlowupTree, faces, consts, norm, rng, want: int, max_draws: int | None = None):
    """Chart-local points whose originals classify into this region.

    Draws from E, keeps points that land in the region's ordering chart and
    whose face classification matches; returns up to `want` local points.
    """
    if region.empty:
        return []
    if max_draws is None:
        max_draws = 40 * want
    hits = []
    for _ in range(max_draws):
        x = sample_cube_point(rng, consts, norm)
        leaf, local = walk(tree, x, norm)
        if leaf.chart_id != region.chart_id:
            continue
        if classify_point(x, consts, faces, norm) != (region.face_dim, region.face_index):
            continue
        hits.append(local)
        if len(hits) >= want:
            break
    return hits


# -- diagnostics and witnesses --------------------------------------------------


def tail_bound_check(s: Series, face: Face, d: int, x, consts: RegionConstants, norm: Norm = Norm()) -> bool:
    """Does the off-face tail stay below its predicted share of the sup?

    Diagnostic only: compares sum over off-face terms of |c| |alpha|^d |x^alpha|
    against E_d * C_{i+1}^-eta * sup, with eta the recorded estimate (default
    1/16). Exact rational comparison.
    """
    a, b = face.functional
    eta = consts.eta_estimate if consts.eta_estimate is not None else DEFAULT_ETA
    lhs = Fraction(0)
    e_d = Fraction(0)
    sup = Fraction(0)
    for exp, coeff in s.terms.items():
        weight = norm.abs(coeff) * Fraction(sum(exp)) ** d if d else norm.abs(coeff)
        e_d += weight
        mono = monomial_abs(x, exp, norm)
        sup = max(sup, mono)
        if sum(Fraction(ai) * ei for ai, ei in zip(a, exp)) != b:
            lhs += weight * mono
    if lhs == 0:
        return True
    c_next = consts.C[face.dim]
    u, w = eta.numerator, eta.denominator
    # lhs < E_d * C^(-u/w) * sup  <=>  lhs^w * C^u < (E_d * sup)^w
    return lhs ** w * c_next ** u < (e_d * sup) ** w


def witness_directions(z_vars, n: int, max_entry: int = 3) -> list:
    """Candidate directions on the z variables, small and axis-first.

    Integer vectors with entries up to max_entry, deduplicated up to sign and
    scale, normalized to |beta|_1 = 1, ordered by (1-norm of the integer
    vector, entries).
    """
    cands = set()
    for combo in product(range(-max_entry, max_entry + 1), repeat=len(z_vars)):
        if not any(combo):
            continue
        g = 0
        for v in combo:
            g = _gcd(g, abs(v))
        vec = tuple(v // g for v in combo)
        lead = next(v for v in vec if v)
        if lead < 0:
            vec = tuple(-v for v in vec)
        cands.add(vec)
    ordered = sorted(cands, key=lambda v: (sum(abs(c) for c in v), v))
    out = []
    for vec in ordered:
        total = sum(abs(c) for c in vec)
        beta = [Fraction(0)] * n
        for idx, c in zip(z_vars, vec):
            beta[idx] = Fraction(c, total)
        out.append(tuple(beta))
    return out


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def derivative_witness(region: RegionDesc, f_region: Series, max_order: int, samples: int, seed: int, *, tree: BlowupTree, faces, consts: RegionConstants, norm: Norm = Norm()) -> DerivativeWitness | None:
    """Search for (order, direction) making a directional derivative nonvanishing.

    Tries orders 0..max_order and the finite direction grid on the region's z
    variables (all variables when the face is a vertex); accepts the first
    pair whose |derivative| stays positive on every sampled region point, and
    returns half the sampled minimum as the floor. Returns None when the
    sampler cannot hit the region at all; raises NoWitnessError when points
    exist but no pair works.
    """
    if region.empty:
        raise MonoresError("empty regions need no witness")
    rng = random.Random(seed)
    pts = sample_region_points(region, tree, faces, consts, norm, rng, samples)
    if not pts:
        return None
    dirs_vars = region.z_vars if region.z_vars else tuple(range(f_region.n))
    directions = witness_directions(dirs_vars, f_region.n)
    for order in range(max_order + 1):
        for beta in [directions[0]] if order == 0 else directions:
            deriv = directional_derivative(f_region, beta, order) if order else f_region
            floor = None
            for pt in pts:
                _, mag = evaluate(deriv, pt, norm)
                if mag == 0:
                    floor = None
                    break
                floor = mag if floor is None or mag < floor else floor
            if floor is not None:
                return DerivativeWitness(beta, order, floor / 2, max_order)
    raise NoWitnessError(f"no derivative witness for region {region.ids} within order {max_order}")
