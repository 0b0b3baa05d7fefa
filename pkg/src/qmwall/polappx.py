"""Suitable polarizations on S x C: slope bookkeeping for the rank-2 argument.

X = S x C with C smooth, or with one node (separating or not).  On each
component X_i = S x C_i the polarization is L_{k_i} = O_S(1) boxtimes O_C(k_i),
and a sheaf enters only through its rank, its fiber degree deg_f and the
Kunneth component k(F) of its first Chern class, because

    c1(F) . L_n . L_m = d k(F) + (n + m) deg_f.

Two normalisations of the Hilbert coefficients are available:

* ``paper``:  a3(O) = d k,   a2(O) = d g + k e / 2
* ``oracle``: a3(O) = 3 d k, a2(O) = d (1 - g) + k e   (Riemann-Roch)

with d = H^2 and e = H . c1(S).  Both give a2(F) = deg_k(F) + rk a2(O) and
a3(F) = rk a3(O).  Slope differences agree up to the positive factor 3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .cohring import SurfaceModel
from .rational import RationalLike, q

MODES = ("paper", "oracle")
NODES = ("smooth", "nonseparating", "separating")


@dataclass(frozen=True)
class Component:
    genus: int
    k: int

    def __post_init__(self) -> None:
        if self.genus < 0:
            raise ValueError("component genus must be nonnegative")
        if isinstance(self.k, bool) or not isinstance(self.k, int) or self.k <= 0:
            raise ValueError("polarization degree k must be a positive integer")


@dataclass(frozen=True)
class PolarizedProduct:
    S: SurfaceModel
    components: tuple[Component, ...]
    node_structure: str = "smooth"

    def __post_init__(self) -> None:
        if self.node_structure not in NODES:
            raise ValueError(f"node_structure must be one of {NODES}")
        need = 2 if self.node_structure == "separating" else 1
        if len(self.components) != need:
            raise ValueError(f"{self.node_structure} needs exactly {need} component(s)")

    @property
    def d(self) -> Fraction:
        return self.S.d

    @property
    def e(self) -> Fraction:
        return self.S.pair(self.S.hyperplane, self.S.c1S)

    def with_k(self, ks: Sequence[int]) -> PolarizedProduct:
        comps = tuple(Component(c.genus, int(k)) for c, k in zip(self.components, ks))
        return PolarizedProduct(self.S, comps, self.node_structure)


@dataclass(frozen=True)
class SheafNumerics:
    rk: Fraction
    deg_f: Fraction
    kF: Fraction

    @classmethod
    def of(cls, rk: RationalLike, deg_f: RationalLike, kF: RationalLike) -> SheafNumerics:
        r = q(rk)
        if r < 0:
            raise ValueError("rank must be nonnegative")
        return cls(r, q(deg_f), q(kF))


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")


def int1(kF: RationalLike, deg_f: RationalLike, n: int, m: int, d: RationalLike) -> Fraction:
    """c1(F) . L_n . L_m."""
    return q(d) * q(kF) + (n + m) * q(deg_f)


def _deg(F: SheafNumerics, k: RationalLike, d: Fraction) -> Fraction:
    return d * F.kF + 2 * q(k) * F.deg_f


def deg_k(F: SheafNumerics, X: PolarizedProduct, i: int = 0) -> Fraction:
    """deg_{k_i}(F) = c1(F) . L_{k_i}^2."""
    return _deg(F, X.components[i].k, X.d)


def _structure_coeffs(g: int, k: RationalLike, d: Fraction, e: Fraction, mode: str) -> tuple[Fraction, Fraction]:
    """(a2(O), a3(O)) on a component of genus g with polarization degree k."""
    _check_mode(mode)
    k = q(k)
    if mode == "paper":
        return d * g + k * e / 2, d * k
    return d * (1 - g) + k * e, 3 * d * k


def structure_coeffs(X: PolarizedProduct, i: int = 0, mode: str = "paper") -> tuple[Fraction, Fraction]:
    c = X.components[i]
    return _structure_coeffs(c.genus, c.k, X.d, X.e, mode)


def hilb_coeffs(F: SheafNumerics, X: PolarizedProduct, i: int = 0,
                mode: str = "paper") -> tuple[Fraction, Fraction]:
    """(a2(F), a3(F)) on component i."""
    A2, A3 = structure_coeffs(X, i, mode)
    return deg_k(F, X, i) + F.rk * A2, F.rk * A3


def hilb_coeffs_paper(F: SheafNumerics, X: PolarizedProduct, i: int = 0) -> tuple[Fraction, Fraction]:
    return hilb_coeffs(F, X, i, "paper")


def hilb_coeffs_oracle(F: SheafNumerics, X: PolarizedProduct, i: int = 0) -> tuple[Fraction, Fraction]:
    return hilb_coeffs(F, X, i, "oracle")


def slope(F: SheafNumerics, X: PolarizedProduct, i: int = 0, mode: str = "paper") -> Fraction:
    a2, a3 = hilb_coeffs(F, X, i, mode)
    if a3 == 0:
        raise ZeroDivisionError("slope is undefined for a3 = 0")
    return a2 / a3


# ---------------------------------------------------------------------------

def bounds_lhs(G: SheafNumerics, F: SheafNumerics, n: int, d: RationalLike) -> Fraction:
    """rk(G) deg_n(F) - rk(F) deg_n(G)."""
    d = q(d)
    return G.rk * int1(F.kF, F.deg_f, n, n, d) - F.rk * int1(G.kF, G.deg_f, n, n, d)


def bounds_check(G: SheafNumerics, F: SheafNumerics, n: int, n0: int, d: RationalLike) -> bool:
    """rk(G) deg_n(F) - rk(F) deg_n(G) < 2 (n0 - n)."""
    return bounds_lhs(G, F, n, d) < 2 * (n0 - n)


def fiber_destabilizing(G: SheafNumerics, F: SheafNumerics) -> bool:
    """mu_f(G) > mu_f(F), i.e. rk(G) deg_f(F) - rk(F) deg_f(G) < 0."""
    return G.rk * F.deg_f - F.rk * G.deg_f < 0


def nonsep_term(G: SheafNumerics, F: SheafNumerics, X: PolarizedProduct, n: Optional[int] = None,
                mode: str = "paper") -> Fraction:
    """a3(O) (rk(G) deg_k(pi^* F) - rk(F) deg_k(G) - d rk(F) rk(G)) at k = n."""
    c = X.components[0]
    k = c.k if n is None else n
    _, A3 = _structure_coeffs(c.genus, k, X.d, X.e, mode)
    d = X.d
    return A3 * (G.rk * _deg(F, k, d) - F.rk * _deg(G, k, d) - d * F.rk * G.rk)


def smooth_term(G: SheafNumerics, F: SheafNumerics, X: PolarizedProduct, n: Optional[int] = None,
                mode: str = "paper") -> Fraction:
    """a3(G) a2(F) - a3(F) a2(G) on a smooth curve, at k = n."""
    c = X.components[0]
    k = c.k if n is None else n
    _, A3 = _structure_coeffs(c.genus, k, X.d, X.e, mode)
    return A3 * (G.rk * _deg(F, k, X.d) - F.rk * _deg(G, k, X.d))


@dataclass(frozen=True)
class SepTerms:
    a: Fraction
    b1: Fraction
    b2: Fraction

    @property
    def total(self) -> Fraction:
        return self.a + self.b1 + self.b2


def _sep(G1: SheafNumerics, G2: SheafNumerics, F1: SheafNumerics, F2: SheafNumerics,
         X: PolarizedProduct, k1: RationalLike, k2: RationalLike, mode: str) -> SepTerms:
    if F1.rk != F2.rk:
        raise ValueError("F must have the same rank on both components (flat over the node)")
    d = X.d
    c1, c2 = X.components
    A2_1, A3_1 = _structure_coeffs(c1.genus, k1, d, X.e, mode)
    A2_2, A3_2 = _structure_coeffs(c2.genus, k2, d, X.e, mode)
    rkF = F1.rk
    a = (
        A3_1 * (G1.rk * _deg(F1, k1, d) - rkF * _deg(G1, k1, d) - d * rkF * G1.rk)
        + A3_2 * (G2.rk * _deg(F2, k2, d) - rkF * _deg(G2, k2, d) - d * rkF * G2.rk)
    )
    b1 = (
        G2.rk * _deg(F1, k1, d) * A3_2 - F2.rk * _deg(G1, k1, d) * A3_2
        + G1.rk * _deg(F2, k2, d) * A3_1 - F1.rk * _deg(G2, k2, d) * A3_1
    )
    b2 = (
        F1.rk * G2.rk * (A2_1 * A3_2 - A2_2 * A3_1)
        + F2.rk * G1.rk * (A2_2 * A3_1 - A2_1 * A3_2)
    )
    return SepTerms(a, b1, b2)


def sep_terms(G1: SheafNumerics, G2: SheafNumerics, F1: SheafNumerics, F2: SheafNumerics,
              X: PolarizedProduct, k1: Optional[int] = None, k2: Optional[int] = None,
              mode: str = "paper") -> SepTerms:
    """The grouped terms (a), (b.1), (b.2) of the separating-node slope difference.

    Their sum equals a3(G~) sum a2(F_i) - a3(F) sum a2(G_i) - a2(F_s) sum a3(G_i)
    with a2(F_s) = d rk(F).
    """
    if X.node_structure != "separating":
        raise ValueError("sep_terms needs a separating node")
    k1 = X.components[0].k if k1 is None else k1
    k2 = X.components[1].k if k2 is None else k2
    return _sep(G1, G2, F1, F2, X, k1, k2, mode)


def sep_expanded(G1: SheafNumerics, G2: SheafNumerics, F1: SheafNumerics, F2: SheafNumerics,
                 X: PolarizedProduct, mode: str = "paper") -> Fraction:
    """The ungrouped slope-difference numerator, straight from a2 and a3."""
    a2F1, a3F1 = hilb_coeffs(F1, X, 0, mode)
    a2F2, a3F2 = hilb_coeffs(F2, X, 1, mode)
    a2G1, a3G1 = hilb_coeffs(G1, X, 0, mode)
    a2G2, a3G2 = hilb_coeffs(G2, X, 1, mode)
    a2Fs = X.d * F1.rk
    return (
        (a2F1 + a2F2) * (a3G1 + a3G2)
        - (a2G1 + a2G2) * (a3F1 + a3F2)
        - a2Fs * (a3G1 + a3G2)
    )


def sep_certificate(G: Sequence[SheafNumerics], F: Sequence[SheafNumerics], X: PolarizedProduct,
                    ks: Sequence[int], K: Sequence[int]) -> list[tuple[Fraction, Fraction, bool]]:
    """Sufficient condition for (b.1) + (b.2) < 0, per component i (i + 1 cyclic):

    (k_i - K_i)(rk(G_i) deg_f(F) - rk(F) deg_f(G_i))
        < d (rk(G_i) - rk(G_{i+1})) (g_{i+1} rk(F) - k(F_i)).
    """
    out = []
    rkF = F[0].rk
    for i in range(2):
        j = 1 - i
        lhs = (ks[i] - K[i]) * (G[i].rk * F[i].deg_f - rkF * G[i].deg_f)
        rhs = X.d * (G[i].rk - G[j].rk) * (X.components[j].genus * rkF - F[i].kF)
        out.append((lhs, rhs, lhs < rhs))
    return out


# ---------------------------------------------------------------------------
# threshold search

@dataclass(frozen=True)
class Instance:
    """F and destabilising G per component (one entry unless separating)."""

    F: tuple[SheafNumerics, ...]
    G: tuple[SheafNumerics, ...]

    def __post_init__(self) -> None:
        if len(self.F) != len(self.G) or len(self.F) not in (1, 2):
            raise ValueError("instance needs matching F and G lists of length 1 or 2")
        if len(self.F) == 2 and self.F[0].rk != self.F[1].rk:
            raise ValueError("F must have the same rank on both components (flat over the node)")


def total_at(inst: Instance, X: PolarizedProduct, n: int, mode: str = "paper") -> Fraction:
    """Slope-difference numerator with polarization degrees n * k_i."""
    ks = [n * c.k for c in X.components]
    if X.node_structure == "smooth":
        return smooth_term(inst.G[0], inst.F[0], X, ks[0], mode)
    if X.node_structure == "nonseparating":
        return nonsep_term(inst.G[0], inst.F[0], X, ks[0], mode)
    return _sep(inst.G[0], inst.G[1], inst.F[0], inst.F[1], X, ks[0], ks[1], mode).total


def _quadratic(inst: Instance, X: PolarizedProduct, mode: str) -> tuple[Fraction, Fraction, Fraction]:
    v0, v1, v2 = (total_at(inst, X, n, mode) for n in (0, 1, 2))
    a = (v2 - 2 * v1 + v0) / 2
    b = v1 - v0 - a
    c = v0
    if total_at(inst, X, 3, mode) != 9 * a + 3 * b + c:
        raise ArithmeticError("slope numerator is not quadratic in n")
    return a, b, c


def _eventual_threshold(a: Fraction, b: Fraction, c: Fraction) -> Optional[int]:
    """Least n >= 1 with a n^2 + b n + c < 0 for every integer n' >= n, or None."""

    def f(n: int) -> Fraction:
        return (a * n + b) * n + c

    if a > 0 or (a == 0 and b > 0) or (a == 0 and b == 0 and c >= 0):
        return None
    if a == 0 and b == 0:
        return 1
    if a == 0:
        r = -c / b  # f < 0 iff n > r
        n = math.floor(r) + 1
        return max(n, 1)
    disc = b * b - 4 * a * c
    if disc < 0:
        return 1
    vertex = -b / (2 * a)
    # for a < 0 the larger root is (b + sqrt(disc)) / (2|a|); bound sqrt by an integer
    sqrt_up = math.isqrt(math.ceil(disc)) + 1
    n = max(math.floor((b + sqrt_up) / (-2 * a)) + 1, math.ceil(vertex) + 1, 1)
    while f(n) >= 0:
        n += 1
    # f is concave: walk left to the last nonnegative value, stopping at the vertex
    while n - 1 >= 1 and f(n - 1) < 0:
        if n - 1 <= vertex:
            return 1
        n -= 1
    return n


@dataclass(frozen=True)
class N0Result:
    feasible: bool
    n0: Optional[int]
    ks: Optional[tuple[int, ...]]
    per_instance: tuple[Optional[int], ...]
    infeasible: tuple[int, ...] = ()
    certificates: tuple = field(default=())


def n0_search(instances: Sequence[Instance], X: PolarizedProduct,
              K_bounds: Optional[Sequence[int]] = None, mode: str = "paper") -> N0Result:
    """Least n with the slope-difference numerator negative at L_{n k_i} for all
    n' >= n and every instance; the certificate is evaluated at the result."""
    _check_mode(mode)
    per: list[Optional[int]] = []
    bad: list[int] = []
    for idx, inst in enumerate(instances):
        th = _eventual_threshold(*_quadratic(inst, X, mode))
        per.append(th)
        if th is None:
            bad.append(idx)
    if bad:
        return N0Result(False, None, None, tuple(per), tuple(bad))
    n0 = max([1] + [p for p in per if p is not None])
    ks = tuple(n0 * c.k for c in X.components)
    certs: list = []
    if K_bounds is not None:
        for inst in instances:
            if X.node_structure == "separating":
                certs.append(tuple(sep_certificate(inst.G, inst.F, X, ks, K_bounds)))
            else:
                certs.append(bounds_check(inst.G[0], inst.F[0], ks[0], K_bounds[0], X.d))
    return N0Result(True, n0, ks, tuple(per), (), tuple(certs))
