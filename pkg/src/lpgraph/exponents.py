"""Exact exponent calculus: improving profiles, constraint systems, polytopes.

Coordinates are always reciprocals u_i = 1/p_i in [0, 1], with 0 encoding
an infinite exponent and 1 encoding exponent one.  Everything here is
`fractions.Fraction`; membership questions are settled by exact LP.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .graphs import Graph
from .simplex import feasible_combination, solve_lp

Rat = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


def rat(x) -> Fraction:
    """Parse "2/3"-style strings (and ints/Fractions) exactly."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("refusing float -> exact rational conversion")
    return Fraction(x)


def format_rat(x: Fraction) -> str:
    return str(Fraction(x))


@dataclass(frozen=True)
class ExponentVector:
    entries: tuple[Fraction, ...]

    def __post_init__(self):
        ent = tuple(rat(e) for e in self.entries)
        for e in ent:
            if not (ZERO <= e <= ONE):
                raise ValueError(f"entry {e} outside [0, 1]")
        object.__setattr__(self, "entries", ent)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    @property
    def total(self) -> Fraction:
        return sum(self.entries, ZERO)

    def is_improving(self) -> bool:
        """Strictly better than the scaling baseline: sum > 1."""
        return self.total > 1

    def has_nontrivial_estimate_at(self, vertex: int) -> bool:
        """Sum >= 1 with a finite exponent (u > 0) at the 1-indexed vertex."""
        return self.total >= 1 and self.entries[vertex - 1] > 0

    def to_json(self) -> list[str]:
        return [format_rat(e) for e in self.entries]

    @staticmethod
    def from_json(entries: Sequence[str]) -> "ExponentVector":
        return ExponentVector(tuple(rat(e) for e in entries))


def exponent_vector(*entries) -> ExponentVector:
    return ExponentVector(tuple(rat(e) for e in entries))


# ---------------------------------------------------------------------------
# improving profile of the circular averaging operator


@dataclass(frozen=True)
class ImprovingProfile:
    """Piecewise-linear concave v with v(u) = best input reciprocal at output u.

    Breakpoints are (u, v) pairs; v(0) = 0, v(1) = 1, v concave nondecreasing
    and v(u) >= u.  Strict improvement is only available on the open interval.
    """

    breakpoints: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        bps = tuple((rat(u), rat(v)) for u, v in self.breakpoints)
        object.__setattr__(self, "breakpoints", bps)
        us = [u for u, _ in bps]
        if us != sorted(set(us)):
            raise ValueError("breakpoint abscissae must be strictly increasing")
        if bps[0] != (ZERO, ZERO) or bps[-1] != (ONE, ONE):
            raise ValueError("profile must run from (0,0) to (1,1)")
        slopes = self.segment_slopes()
        for a, b in zip(slopes, slopes[1:]):
            if b > a:
                raise ValueError("profile must be concave")
        for u, v in bps:
            if v < u:
                raise ValueError("profile must dominate the diagonal")

    def segment_slopes(self) -> list[Fraction]:
        out = []
        for (u0, v0), (u1, v1) in zip(self.breakpoints, self.breakpoints[1:]):
            out.append((v1 - v0) / (u1 - u0))
        return out

    def value(self, u) -> Fraction:
        u = rat(u)
        if not (ZERO <= u <= ONE):
            raise ValueError(f"argument {u} outside [0, 1]")
        for (u0, v0), (u1, v1) in zip(self.breakpoints, self.breakpoints[1:]):
            if u0 <= u <= u1:
                return v0 + (v1 - v0) * (u - u0) / (u1 - u0)
        raise AssertionError("unreachable")

    def segments(self) -> list[tuple[Fraction, Fraction]]:
        """Upper envelope lines (slope, intercept): v(u) = min over them."""
        out = []
        for (u0, v0), (u1, v1) in zip(self.breakpoints, self.breakpoints[1:]):
            m = (v1 - v0) / (u1 - u0)
            out.append((m, v0 - m * u0))
        return out

    def inverse_min(self, b) -> Fraction:
        """Smallest u with v(u) == b (v is nondecreasing)."""
        b = rat(b)
        if not (ZERO <= b <= ONE):
            raise ValueError(f"target {b} outside [0, 1]")
        for (u0, v0), (u1, v1) in zip(self.breakpoints, self.breakpoints[1:]):
            if v0 <= b <= v1 and v1 > v0:
                return u0 + (u1 - u0) * (b - v0) / (v1 - v0)
            if b == v0:
                return u0
        return self.breakpoints[-1][0]

    def allows_strict_step(self, u) -> bool:
        u = rat(u)
        return ZERO < u < ONE


def improving_profile_circle(d: int) -> ImprovingProfile:
    """Profile of circular/spherical averaging: corner at (1/(d+1), d/(d+1))."""
    if d < 2:
        raise ValueError(f"ambient dimension must be >= 2, got {d}")
    return ImprovingProfile((
        (ZERO, ZERO),
        (Fraction(1, d + 1), Fraction(d, d + 1)),
        (ONE, ONE),
    ))


# ---------------------------------------------------------------------------
# halfspace systems (necessary conditions) and vertex polytopes (sufficient)


@dataclass(frozen=True)
class HalfspaceRow:
    coeffs: tuple[Fraction, ...]
    relation: str  # "<=" or ">="
    rhs: Fraction
    label: str

    def evaluate(self, x: Sequence[Fraction]) -> Fraction:
        return sum((c * rat(v) for c, v in zip(self.coeffs, x)), ZERO)

    def holds(self, x: Sequence[Fraction]) -> bool:
        val = self.evaluate(x)
        return val <= self.rhs if self.relation == "<=" else val >= self.rhs

    def tight(self, x: Sequence[Fraction]) -> bool:
        return self.evaluate(x) == self.rhs

    def to_json_dict(self) -> dict:
        return {
            "coeffs": [format_rat(c) for c in self.coeffs],
            "relation": self.relation,
            "rhs": format_rat(self.rhs),
            "label": self.label,
        }


@dataclass(frozen=True)
class HalfspaceSystem:
    rows: tuple[HalfspaceRow, ...]
    dim: int
    label: str

    def to_json_dict(self) -> dict:
        return {
            "label": self.label,
            "dim": self.dim,
            "rows": [r.to_json_dict() for r in self.rows],
        }


def necessary_halfspaces(kind: str, d: int) -> HalfspaceSystem:
    """The listed test-function conditions for the two trilinear case studies.

    Coordinates (u1, u2, u3); every row is labeled by its condition number.
    """
    if d < 2:
        raise ValueError(f"ambient dimension must be >= 2, got {d}")
    F = Fraction
    if kind == "triangle":
        data = [
            ((1, 1, 1), ">=", 1),
            ((1, 1, d), "<=", d),
            ((1, d, 1), "<=", d),
            ((d, 1, 1), "<=", d),
            ((d + 1, d + 1, 2 * d), "<=", 3 * d - 1),
            ((d + 1, 2 * d, d + 1), "<=", 3 * d - 1),
            ((2 * d, d + 1, d + 1), "<=", 3 * d - 1),
        ]
    elif kind == "chain3":
        data = [
            ((1, 1, 1), ">=", 1),
            ((1, 1, d), "<=", d),
            ((d, d, 1), "<=", 2 * d - 1),
            ((d, 0, 1), "<=", d),
            ((0, d, 1), "<=", d),
        ]
    else:
        raise ValueError(f"unknown system kind {kind!r}")
    rows = tuple(
        HalfspaceRow(tuple(F(c) for c in coeffs), rel, F(rhs),
                     label=f"{kind}-{k}")
        for k, (coeffs, rel, rhs) in enumerate(data, start=1)
    )
    return HalfspaceSystem(rows=rows, dim=3, label=f"{kind} necessary (d={d})")


@dataclass(frozen=True)
class VertexPolytope:
    vertices: tuple[tuple[Fraction, ...], ...]
    label: str

    def __post_init__(self):
        vs = tuple(tuple(rat(c) for c in v) for v in self.vertices)
        if len(set(vs)) != len(vs):
            raise ValueError("polytope vertices must be pairwise distinct")
        object.__setattr__(self, "vertices", vs)

    @property
    def dim(self) -> int:
        return len(self.vertices[0]) if self.vertices else 0

    def to_json_dict(self) -> dict:
        return {
            "label": self.label,
            "vertices": [[format_rat(c) for c in v] for v in self.vertices],
        }


def _unit(n: int, i: int) -> tuple[Fraction, ...]:
    return tuple(ONE if k == i else ZERO for k in range(n))


def sufficient_vertices(kind: str, graph: Graph | None = None) -> VertexPolytope:
    """Vertex lists of the proved boundedness regions (planar kernel).

    kind "triangle" and "chain3" are the two trilinear case studies;
    kind "regular" takes any connected graph and instantiates the hull
    {e_i} union {(2/3)(e_i + e_j) over edges}.
    """
    F = Fraction
    if kind == "triangle":
        verts = [
            (F(1), F(0), F(0)), (F(0), F(1), F(0)), (F(0), F(0), F(1)),
            (F(2, 3), F(2, 3), F(0)), (F(2, 3), F(0), F(2, 3)),
            (F(0), F(2, 3), F(2, 3)), (F(1, 2), F(1, 2), F(1, 2)),
        ]
        return VertexPolytope(tuple(verts), "triangle sufficient polygon")
    if kind == "chain3":
        verts = [
            (F(1), F(0), F(0)), (F(0), F(1), F(0)), (F(0), F(0), F(1)),
            (F(2, 3), F(0), F(2, 3)), (F(0), F(2, 3), F(2, 3)),
            (F(1), F(1, 2), F(0)), (F(1, 2), F(1), F(0)),
        ]
        return VertexPolytope(tuple(verts), "chain3 sufficient polygon")
    if kind == "regular":
        if graph is None:
            raise ValueError("kind 'regular' needs a graph")
        if graph.n < 2:
            raise ValueError("regular hull needs n >= 2")
        graph.require_connected()
        n = graph.n
        verts = [_unit(n, i) for i in range(n)]
        for i, j in graph.edges:
            v = list(_unit(n, i - 1))
            v[i - 1] = F(2, 3)
            v[j - 1] = F(2, 3)
            verts.append(tuple(v))
        return VertexPolytope(tuple(verts), f"regular-realizability hull (n={n})")
    raise ValueError(f"unknown polytope kind {kind!r}")


def chain3_missing_endpoints() -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    """The two endpoint exponents the chain3 polygon omits (d = 2)."""
    F = Fraction
    return (F(1, 2), F(5, 6), F(1, 3)), (F(5, 6), F(1, 2), F(1, 3))


# ---------------------------------------------------------------------------
# membership and comparison


def halfspace_membership(system: HalfspaceSystem, x: Sequence[Fraction]
                         ) -> tuple[bool, list[str], list[str]]:
    """Exact row-by-row check; returns (inside, violated labels, tight labels)."""
    xs = tuple(rat(v) for v in x)
    if len(xs) != system.dim:
        raise ValueError(f"dimension mismatch: {len(xs)} != {system.dim}")
    violated, tight = [], []
    for row in system.rows:
        if not row.holds(xs):
            violated.append(row.label)
        elif row.tight(xs):
            tight.append(row.label)
    return (not violated), violated, tight


def hull_membership(poly: VertexPolytope, x: Sequence[Fraction]
                    ) -> tuple[bool, list[Fraction] | None]:
    """Exact convex-combination feasibility; returns a witness when inside."""
    xs = tuple(rat(v) for v in x)
    if len(xs) != poly.dim:
        raise ValueError(f"dimension mismatch: {len(xs)} != {poly.dim}")
    lam = feasible_combination(poly.vertices, xs)
    return (lam is not None), lam


@dataclass
class RegionCompareReport:
    inner_label: str
    outer_label: str
    contained: bool
    offenders: list[tuple[tuple[Fraction, ...], str | None]]

    def to_json_dict(self) -> dict:
        return {
            "inner": self.inner_label,
            "outer": self.outer_label,
            "contained": self.contained,
            "offenders": [
                {"vertex": [format_rat(c) for c in v], "row": row}
                for v, row in self.offenders
            ],
        }


def region_compare(inner: VertexPolytope,
                   outer: HalfspaceSystem | VertexPolytope) -> RegionCompareReport:
    """Check every inner vertex against the outer region, exactly."""
    offenders: list[tuple[tuple[Fraction, ...], str | None]] = []
    if isinstance(outer, HalfspaceSystem):
        if inner.dim != outer.dim:
            raise ValueError("dimension mismatch")
        for v in inner.vertices:
            ok, violated, _ = halfspace_membership(outer, v)
            if not ok:
                for lab in violated:
                    offenders.append((v, lab))
        outer_label = outer.label
    else:
        if inner.dim != outer.dim:
            raise ValueError("dimension mismatch")
        for v in inner.vertices:
            ok, _ = hull_membership(outer, v)
            if not ok:
                offenders.append((v, None))
        outer_label = outer.label
    return RegionCompareReport(
        inner_label=inner.label,
        outer_label=outer_label,
        contained=not offenders,
        offenders=offenders,
    )


# ---------------------------------------------------------------------------
# the region the two-step construction actually reaches for the chain


def _polytope_vertices_from_rows(rows: list[tuple[list[Fraction], str, Fraction]],
                                 dim: int) -> list[tuple[Fraction, ...]]:
    """Brute-force vertex enumeration of a low-dimensional H-polytope.

    Solves every dim-subset of tight constraints; keeps feasible solutions.
    Fine for the handful of constraints used here.
    """
    import itertools as it

    def solve_square(mat, rhs):
        # Gaussian elimination over Fractions; None if singular
        k = len(mat)
        a = [row[:] + [rhs[i]] for i, row in enumerate(mat)]
        for col in range(k):
            piv = None
            for r in range(col, k):
                if a[r][col] != 0:
                    piv = r
                    break
            if piv is None:
                return None
            a[col], a[piv] = a[piv], a[col]
            pv = a[col][col]
            a[col] = [v / pv for v in a[col]]
            for r in range(k):
                if r != col and a[r][col] != 0:
                    f = a[r][col]
                    a[r] = [x - f * y for x, y in zip(a[r], a[col])]
        return [a[r][k] for r in range(k)]

    sols = set()
    for combo in it.combinations(range(len(rows)), dim):
        mat = [list(rows[i][0]) for i in combo]
        rhs = [rows[i][2] for i in combo]
        sol = solve_square(mat, rhs)
        if sol is None:
            continue
        ok = True
        for coeffs, rel, b in rows:
            val = sum((c * v for c, v in zip(coeffs, sol)), ZERO)
            if rel == "<=" and val > b:
                ok = False
                break
            if rel == ">=" and val < b:
                ok = False
                break
            if rel == "==" and val != b:
                ok = False
                break
        if ok:
            sols.add(tuple(sol))
    return sorted(sols)


def _extreme_points(points: list[tuple[Fraction, ...]]) -> list[tuple[Fraction, ...]]:
    out = []
    for i, p in enumerate(points):
        others = [q for j, q in enumerate(points) if j != i]
        if not others or feasible_combination(others, p) is None:
            out.append(p)
    return out


def chain3_constructed_region(d: int) -> VertexPolytope:
    """Exponents reachable by splitting the output budget over the two arms.

    The region {(u1,u2,u3) : exists w1,w2 with ui <= v(wi), w1+w2+u3 = 1,
    everything in [0,1]} where v is the circle profile.  Computed exactly by
    projecting the lifted polytope (breakpoint segments give its facets).
    """
    prof = improving_profile_circle(d)
    segs = prof.segments()
    F = Fraction
    # lifted variables (u1, u2, w1, w2); u3 = 1 - w1 - w2 is the projection
    rows: list[tuple[list[Fraction], str, Fraction]] = []
    for m, b in segs:
        rows.append(([F(1), F(0), -m, F(0)], "<=", b))  # u1 <= v(w1)
        rows.append(([F(0), F(1), F(0), -m], "<=", b))  # u2 <= v(w2)
    for k in range(4):
        e = [F(0)] * 4
        e[k] = F(1)
        rows.append((list(e), ">=", F(0)))
        rows.append((list(e), "<=", F(1)))
    rows.append(([F(0), F(0), F(1), F(1)], "<=", F(1)))  # u3 >= 0

    lifted = _polytope_vertices_from_rows(rows, 4)
    images = sorted({(u1, u2, ONE - w1 - w2) for u1, u2, w1, w2 in lifted})
    verts = _extreme_points(list(images))
    return VertexPolytope(tuple(verts), f"chain3 constructed region (d={d})")
