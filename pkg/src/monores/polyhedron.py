"""Newton polyhedra of series: vertices, facets, compact faces, distance.

The polyhedron of a nonzero series is the convex hull of the shifted positive
orthants alpha + R>=0^n over its support. Everything below is exact; the LP
layer decides hull membership and produces strictly positive supporting
functionals as certificates that travel with each face.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .errors import BudgetError, InputZeroError, MonoresError
from .linalg import lp_solve, mat_rank, nullspace, primitive_vector
from .series import Series

MAX_VERTEX_ENUM = 18


def _dot(a, b) -> Fraction:
    return sum((Fraction(x) * y for x, y in zip(a, b)), Fraction(0))


def _sub(p, q) -> tuple:
    return tuple(Fraction(x) - y for x, y in zip(p, q))


@dataclass(frozen=True)
class Face:
    """A compact face, carried with an exposing functional.

    `functional` is (a, b) where a is a strictly positive integer vector with
    a . v = b on the face and a . w >= b + 1 at every other vertex.
    """

    dim: int
    index: int
    vertices: tuple
    functional: tuple

    @property
    def id(self) -> tuple:
        return (self.dim, self.index)


@dataclass(frozen=True)
class CentralFace:
    face: Face
    noncompact: bool
    distance: Fraction


@dataclass(frozen=True)
class Polyhedron:
    n: int
    generators: tuple
    vertices: tuple
    facets: tuple  # ((a_1..a_n), b) with a >= 0 primitive integer, a.w >= b on N


def build_polyhedron(s: Series) -> Polyhedron:
    if s.is_zero():
        raise InputZeroError("zero series has no Newton polyhedron")
    gens = tuple(sorted(s.terms.keys()))
    verts = tuple(g for g in gens if not _in_hull_of_others(g, gens, s.n))
    facets = _enumerate_facets(gens, s.n)
    return Polyhedron(s.n, gens, verts, facets)


def _in_hull_of_others(alpha, gens, n: int) -> bool:
    """Is alpha inside conv of the other generators' shifted orthants?"""
    others = [g for g in gens if g != alpha]
    if not others:
        return False
    m = len(others)
    # variables: lambda_1..lambda_m, r_1..r_n, all >= 0
    nv = m + n
    cons = []
    for i in range(n):
        coeffs = [Fraction(g[i]) for g in others] + [Fraction(1 if l == i else 0) for l in range(n)]
        cons.append((coeffs, "==", Fraction(alpha[i])))
    cons.append(([Fraction(1)] * m + [Fraction(0)] * n, "==", Fraction(1)))
    res = lp_solve([Fraction(0)] * nv, cons, nv)
    return res.status == "optimal"


def _enumerate_facets(gens, n: int) -> tuple:
    """All facets of conv(union of shifted orthants), as (normal, offset).

    Candidates come from spanning an (n-1)-plane by generator differences and
    coordinate directions; each survivor is checked to support a genuinely
    (n-1)-dimensional tight set.
    """
    axes = [tuple(Fraction(1 if l == j else 0) for j in range(n)) for l in range(n)]
    found = {}
    for k in range(1, min(n, len(gens)) + 1):
        for S in combinations(gens, k):
            base = S[0]
            diffs = [_sub(p, base) for p in S[1:]]
            for E in combinations(range(n), n - k):
                dirs = diffs + [axes[l] for l in E]
                if dirs and mat_rank(dirs) != n - 1:
                    continue
                if not dirs and n != 1:
                    continue
                basis = nullspace(dirs, cols=n)
                if len(basis) != 1:
                    continue
                a = primitive_vector(basis[0])
                if any(v < 0 for v in a):
                    continue
                b = min(_dot(a, g) for g in gens)
                tight = [g for g in gens if _dot(a, g) == b]
                span = [_sub(p, tight[0]) for p in tight[1:]]
                span += [axes[l] for l in range(n) if a[l] == 0]
                if (n == 1 and tight) or mat_rank(span) == n - 1:
                    found[(a, b)] = True
    return tuple(sorted(found.keys()))


def compact_faces(p: Polyhedron) -> list[Face]:
    """All compact faces, each as a vertex subset with a positive certificate.

    Enumeration order is fixed: ascending dimension, then lexicographic on the
    sorted vertex tuples, with `index` counting within each dimension.
    """
    if len(p.vertices) > MAX_VERTEX_ENUM:
        raise BudgetError(f"face enumeration over {len(p.vertices)} vertices")
    n = p.n
    raw = []
    for size in range(1, len(p.vertices) + 1):
        for S in combinations(p.vertices, size):
            cert = _face_certificate(S, p.vertices, n)
            if cert is None:
                continue
            dim = mat_rank([_sub(v, S[0]) for v in S[1:]]) if size > 1 else 0
            raw.append((dim, tuple(sorted(S)), cert))
    raw.sort(key=lambda t: (t[0], t[1]))
    faces = []
    counter = {}
    for dim, verts, cert in raw:
        j = counter.get(dim, 0)
        counter[dim] = j + 1
        faces.append(Face(dim, j, verts, cert))
    return faces


def _face_certificate(S, vertices, n: int):
    """A strictly positive (a, b), integer, with a.v = b on S and margin >= 1 off S."""
    others = [w for w in vertices if w not in S]
    # variables: a_1..a_n (>= 0 by default, forced >= 1), b free
    nv = n + 1
    cons = []
    for v in S:
        cons.append(([Fraction(e) for e in v] + [Fraction(-1)], "==", Fraction(0)))
    for w in others:
        cons.append(([Fraction(e) for e in w] + [Fraction(-1)], ">=", Fraction(1)))
    for i in range(n):
        row = [Fraction(1 if l == i else 0) for l in range(n)] + [Fraction(0)]
        cons.append((row, ">=", Fraction(1)))
    res = lp_solve([Fraction(0)] * nv, cons, nv, free=(n,))
    if res.status != "optimal":
        return None
    a = res.x[:n]
    denom = 1
    for v in a:
        denom = denom * v.denominator // _gcd(denom, v.denominator)
    a_int = tuple(Fraction(int(v * denom)) for v in a)
    b = _dot(a_int, S[0])
    return (a_int, b)


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def face_series(s: Series, face: Face) -> Series:
    """Terms of s whose exponents lie on the face."""
    a, b = face.functional
    support = set(s.terms.keys())
    for v in face.vertices:
        if v not in support:
            raise MonoresError("face does not belong to this series")
        if _dot(a, v) != b:
            raise MonoresError("face certificate does not match its vertices")
    kept = {}
    for e, c in s.terms.items():
        val = _dot(a, e)
        if val < b:
            raise MonoresError("face certificate is not supporting for this series")
        if val == b:
            kept[e] = c
    return Series(s.n, kept, s.trunc)


def newton_distance(p: Polyhedron) -> Fraction:
    """Least t with (t, ..., t) inside the polyhedron."""
    best = Fraction(0)
    for a, b in p.facets:
        total = sum(a, Fraction(0))
        if total > 0:
            best = max(best, b / total)
    return best


def central_face(p: Polyhedron) -> CentralFace:
    """The face whose relative interior meets the diagonal.

    When that face is unbounded the result carries the largest-dimension
    compact face inside it and the noncompact flag.
    """
    d = newton_distance(p)
    diag = (d,) * p.n
    tight = [(a, b) for a, b in p.facets if _dot(a, diag) == b]
    noncompact = any(all(a[l] == 0 for a, _ in tight) for l in range(p.n))
    on_all = tuple(
        v for v in p.vertices if all(_dot(a, v) == b for a, b in tight)
    )
    faces = compact_faces(p)
    if not noncompact:
        match = [f for f in faces if f.vertices == on_all]
        if not match:
            raise MonoresError("central face missing from the compact enumeration")
        return CentralFace(match[0], False, d)
    inside = [f for f in faces if set(f.vertices) <= set(on_all)]
    if not inside:
        raise MonoresError("no compact face inside the central face")
    best = max(f.dim for f in inside)
    pick = next(f for f in inside if f.dim == best)
    return CentralFace(pick, True, d)
