"""Epsilon-stability of quasimaps on combinatorial data.

A quasimap is recorded by the dual graph of its source curve.  Each vertex
carries its genus, its L_beta-degree d_v, its number of markings and the
lengths of its base points.  Stability at epsilon asks, per component,

    2 g_v - 2 + #special_v + epsilon * d_v > 0

and, per base point, epsilon * length <= 1.  The extremal values ZeroPlus and
Infinity are the limits epsilon -> 0 and epsilon -> oo of these conditions.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .cohring import ChernVector, DegreeClass, SurfaceModel
from .rational import RationalLike, q


class WallError(ValueError):
    """Epsilon sits on a wall, where stability is not defined."""


@dataclass(frozen=True)
class Epsilon:
    kind: str  # "zero_plus" | "finite" | "infinity"
    value: Optional[Fraction] = None

    def __post_init__(self) -> None:
        if self.kind == "finite":
            if self.value is None or self.value <= 0:
                raise ValueError("finite epsilon must be a positive rational")
        elif self.kind in ("zero_plus", "infinity"):
            if self.value is not None:
                raise ValueError(f"{self.kind} carries no value")
        else:
            raise ValueError(f"unknown epsilon kind {self.kind!r}")

    @classmethod
    def zero_plus(cls) -> Epsilon:
        return cls("zero_plus")

    @classmethod
    def infinity(cls) -> Epsilon:
        return cls("infinity")

    @classmethod
    def finite(cls, value: RationalLike) -> Epsilon:
        return cls("finite", q(value))

    @classmethod
    def parse(cls, text: str) -> Epsilon:
        t = text.strip().lower()
        if t in ("0+", "zero_plus", "zeroplus"):
            return cls.zero_plus()
        if t in ("inf", "infinity", "oo"):
            return cls.infinity()
        return cls.finite(q(text))

    def inverse(self) -> Optional[Fraction]:
        """1/epsilon, with None standing for +infinity (at ZeroPlus)."""
        if self.kind == "zero_plus":
            return None
        if self.kind == "infinity":
            return Fraction(0)
        assert self.value is not None
        return 1 / self.value

    def __str__(self) -> str:
        if self.kind == "zero_plus":
            return "0+"
        if self.kind == "infinity":
            return "inf"
        return str(self.value)


@dataclass(frozen=True)
class Vertex:
    genus: int
    lbeta_deg: int
    markings: int = 0
    base_points: tuple[Fraction, ...] = ()
    base_on_special: tuple[bool, ...] = ()

    def __post_init__(self) -> None:
        if self.genus < 0 or self.lbeta_deg < 0 or self.markings < 0:
            raise ValueError("genus, degree and markings must be nonnegative")
        if len(self.base_on_special) not in (0, len(self.base_points)):
            raise ValueError("base_on_special must have one flag per base point")
        if not self.base_on_special and self.base_points:
            object.__setattr__(self, "base_on_special", (False,) * len(self.base_points))
        for ell in self.base_points:
            if ell <= 0:
                raise ValueError("base points must have positive length")
        if sum(self.base_points, Fraction(0)) > self.lbeta_deg:
            raise ValueError("base-point lengths on a vertex exceed its degree")


@dataclass(frozen=True)
class QuasimapGraph:
    vertices: tuple[Vertex, ...]
    edges: tuple[tuple[int, int], ...] = ()
    total_degree: int = field(init=False)
    total_genus: int = field(init=False)

    def __post_init__(self) -> None:
        n = len(self.vertices)
        if n == 0:
            raise ValueError("a quasimap graph needs at least one vertex")
        for a, b in self.edges:
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"edge ({a}, {b}) refers to a missing vertex")
        parent = list(range(n))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in self.edges:
            parent[find(a)] = find(b)
        if len({find(i) for i in range(n)}) != 1:
            raise ValueError("quasimap graph must be connected")
        b1 = len(self.edges) - n + 1
        object.__setattr__(self, "total_degree", sum(v.lbeta_deg for v in self.vertices))
        object.__setattr__(self, "total_genus", sum(v.genus for v in self.vertices) + b1)

    @property
    def total_markings(self) -> int:
        return sum(v.markings for v in self.vertices)

    def special(self, i: int) -> int:
        """Markings plus node branches at vertex i (a loop counts twice)."""
        s = self.vertices[i].markings
        for a, b in self.edges:
            s += (a == i) + (b == i)
        return s

    def is_rational_tail(self, i: int) -> bool:
        v = self.vertices[i]
        return v.genus == 0 and v.markings == 0 and self.special(i) == 1


@dataclass(frozen=True)
class Report:
    ok: bool
    failures: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def walls(total_degree: int) -> list[Fraction]:
    """Wall values 1/d0 for 1 <= d0 <= total_degree, in decreasing order."""
    return [Fraction(1, d0) for d0 in range(1, max(total_degree, 0) + 1)]


def is_wall(e: Epsilon, total_degree: int) -> bool:
    if e.kind != "finite":
        return False
    assert e.value is not None
    return e.value.numerator == 1 and 1 <= e.value.denominator <= total_degree


def _reject_wall(e: Epsilon, total_degree: int) -> None:
    if is_wall(e, total_degree):
        raise WallError(f"epsilon = {e} is a wall for total degree {total_degree}")


def chamber_of(e: Epsilon | RationalLike, total_degree: int) -> int:
    """Index of the chamber containing e: 0 is (0, 1/d) and d is (1, oo)."""
    if not isinstance(e, Epsilon):
        e = Epsilon.finite(e)
    if e.kind == "zero_plus":
        return 0
    if e.kind == "infinity":
        return max(total_degree, 0)
    _reject_wall(e, total_degree)
    ws = sorted(walls(total_degree))
    assert e.value is not None
    return bisect.bisect_left(ws, e.value)


def chamber_bounds(index: int, total_degree: int) -> tuple[Fraction, Optional[Fraction]]:
    """Open interval of chamber ``index``; None as upper end means infinity."""
    ws = [Fraction(0)] + sorted(walls(total_degree))
    if not 0 <= index <= total_degree:
        raise ValueError(f"chamber index {index} out of range for degree {total_degree}")
    hi = ws[index + 1] if index + 1 < len(ws) else None
    return ws[index], hi


def is_prestable(G: QuasimapGraph) -> bool:
    return not any(flag for v in G.vertices for flag in v.base_on_special)


def is_epsilon_stable(G: QuasimapGraph, e: Epsilon) -> Report:
    """Check conditions (i) and (ii) of epsilon-stability with diagnostics."""
    if G.total_genus == 0 and G.total_markings == 0:
        raise ValueError("unmarked genus-0 quasimaps are outside the supported range")
    _reject_wall(e, G.total_degree)
    failures: list[str] = []
    if not is_prestable(G):
        failures.append("not prestable: a base point lies on a node or marking")
    for i, v in enumerate(G.vertices):
        a = 2 * v.genus - 2 + G.special(i)
        if e.kind == "zero_plus":
            ok = a > 0 or (a == 0 and v.lbeta_deg > 0)
        elif e.kind == "infinity":
            ok = a > 0 or v.lbeta_deg > 0
        else:
            assert e.value is not None
            ok = a + e.value * v.lbeta_deg > 0
        if not ok:
            failures.append(
                f"vertex {i}: 2g-2+special = {a}, degree {v.lbeta_deg} is not positive at {e}"
            )
    for i, v in enumerate(G.vertices):
        for j, ell in enumerate(v.base_points):
            if e.kind == "infinity":
                failures.append(f"vertex {i}: base point {j} is not allowed at inf")
            elif e.kind == "finite":
                assert e.value is not None
                if e.value * ell > 1:
                    failures.append(f"vertex {i}: base point {j} has eps*length = {e.value * ell} > 1")
    return Report(not failures, tuple(failures))


def vdim(
    v: ChernVector,
    beta: DegreeClass,
    S: SurfaceModel,
    g: int,
    N: int,
    dimM: int,
) -> Fraction:
    """Virtual dimension of the quasimap moduli space.

    The degree terms use the curve-class sign (gamma, rk_curve) = -(c1_d, rk_d),
    so that an effective curve class gamma with c1(S).gamma > 0 increases vdim.
    """
    gamma = beta.gamma
    rk_curve = -beta.rk_d
    return (
        v.rk * S.pair(gamma, S.c1S)
        - rk_curve * S.pair(v.c1, S.c1S)
        + (dimM - 3) * (1 - g)
        + N
    )


# ---------------------------------------------------------------------------
# subscheme side

@dataclass(frozen=True)
class PieceData:
    deg: Fraction
    chi: Fraction
    chi_intersection: Fraction = Fraction(0)


@dataclass(frozen=True)
class SubschemeDatum:
    horizontal: tuple[tuple[Fraction, Fraction], ...] = ()
    unstable_pieces: tuple[PieceData, ...] = ()
    rational_tails: tuple[PieceData, ...] = ()
    flat_over_nodes_and_marks: bool = True
    graph: Optional[QuasimapGraph] = None
    total_degree: Optional[int] = None


def hilb_conditions(D: SubschemeDatum, e: Epsilon, m: int) -> Report:
    """The four subscheme-side conditions for epsilon-stability on Hilb^n."""
    if D.total_degree is not None:
        _reject_wall(e, D.total_degree)
    failures: list[str] = []
    if D.graph is not None:
        rep = is_epsilon_stable(D.graph, e)
        failures.extend(f"automorphisms: {f}" for f in rep.failures)
    if not D.flat_over_nodes_and_marks:
        failures.append("flatness: not flat over nodes and marked points")
    inv = e.inverse()
    for i, P in enumerate(D.unstable_pieces):
        val = m * P.deg + P.chi - P.chi_intersection
        if inv is not None and val > inv:
            failures.append(f"unstable piece {i}: {val} > 1/eps = {inv}")
    for j, T in enumerate(D.rational_tails):
        val = m * T.deg + T.chi
        if inv is None or not val > inv:
            bound = "oo" if inv is None else str(inv)
            failures.append(f"rational tail {j}: {val} is not > 1/eps = {bound}")
    return Report(not failures, tuple(failures))


def graph_from_mapping(data: dict) -> QuasimapGraph:
    verts = []
    for raw in data["vertices"]:
        verts.append(
            Vertex(
                genus=int(raw.get("genus", 0)),
                lbeta_deg=int(raw.get("lbeta_deg", raw.get("degree", 0))),
                markings=int(raw.get("markings", 0)),
                base_points=tuple(q(x) for x in raw.get("base_points", [])),
                base_on_special=tuple(bool(x) for x in raw.get("base_on_special", [])),
            )
        )
    edges = tuple((int(a), int(b)) for a, b in data.get("edges", []))
    return QuasimapGraph(tuple(verts), edges)


def _piece(raw: dict) -> PieceData:
    return PieceData(q(raw["deg"]), q(raw["chi"]), q(raw.get("chi_intersection", 0)))


def subscheme_from_mapping(data: dict) -> SubschemeDatum:
    graph = graph_from_mapping(data["graph"]) if data.get("graph") else None
    horizontal: Sequence = data.get("horizontal", [])
    return SubschemeDatum(
        horizontal=tuple((q(h["deg"]), q(h["chi"])) for h in horizontal),
        unstable_pieces=tuple(_piece(p) for p in data.get("unstable_pieces", [])),
        rational_tails=tuple(_piece(p) for p in data.get("rational_tails", [])),
        flat_over_nodes_and_marks=bool(data.get("flat_over_nodes_and_marks", True)),
        graph=graph,
        total_degree=data.get("total_degree"),
    )
