"""Localization computation of the perverse I-function of Hilb^n(S), S del Pezzo.

For n = 1 the fixed locus in class (0, m) is a copy of S.  Its equivariant
contribution is the ratio of Euler classes of the moving obstruction and
deformation spaces, times c1 = c1(S):

    prod_{j=0}^{m-1} (-j z + c1) / prod_{j=1}^{m} (j z)

evaluated in Q[c1]/(c1^3).  Summing over m gives

    I(y, z) = 1 + sum_{m >= 1} y^m * euler_ratio(m).

This normalisation (no overall -z factor) is fixed so that the z^{-1}
coefficient I_1 equals log(1 + y) c1, and z^0 coefficient I_0 equals 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .cohring import SurfaceModel, is_del_pezzo
from .series import NovikovSeries, Order, ZLaurent

# Label names for Q[c1]/(c1^3).
C1_LABELS = ("1", "c1", "c1^2")

#: prefactor in front of the Euler-class sum; see the module docstring
I_PREFACTOR = Fraction(1)


@dataclass(frozen=True)
class Weight:
    """An equivariant weight zmult * z + shift * c1."""

    zmult: int
    shift: int = 0


WeightList = tuple[Weight, ...]


def def_weights(m: int) -> WeightList:
    """Weights z, 2z, ..., m z of the moving deformations."""
    if m <= 0:
        raise ValueError("def_weights needs m >= 1")
    return tuple(Weight(j, 0) for j in range(1, m + 1))


def obs_weights(m: int) -> WeightList:
    """Weights (-m+1)z, ..., -z, 0 of the moving obstructions, each twisted by c1."""
    if m <= 0:
        raise ValueError("obs_weights needs m >= 1")
    return tuple(Weight(-j, 1) for j in range(m - 1, -1, -1))


class LocalSurfaceRing:
    """Q[c1]/(c1^3) with integration c1^2 -> c1(S)^2."""

    def __init__(self, S: SurfaceModel):
        self.S = S

    def integrate(self, poly: Mapping[int, Fraction]) -> Fraction:
        return poly.get(2, Fraction(0)) * self.S.K2


Poly = dict[tuple[int, int], Fraction]  # (zpow, c1pow) -> coeff


def _poly_mul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for (za, ca), u in a.items():
        for (zb, cb), w in b.items():
            c = ca + cb
            if c > 2:
                continue
            key = (za + zb, c)
            out[key] = out.get(key, Fraction(0)) + u * w
    return {k: v for k, v in out.items() if v}


def _weight_poly(w: Weight) -> Poly:
    p: Poly = {}
    if w.zmult:
        p[(1, 0)] = Fraction(w.zmult)
    if w.shift:
        p[(0, 1)] = Fraction(w.shift)
    return p


def _euler_poly(m: int) -> Poly:
    num: Poly = {(0, 0): Fraction(1)}
    for w in obs_weights(m):
        num = _poly_mul(num, _weight_poly(w))
    den = Fraction(1)
    for w in def_weights(m):
        den *= w.zmult
    # divide by prod (j z) = m! z^m
    return {(zp - m, cp): v / den for (zp, cp), v in num.items()}


def euler_ratio(m: int, S: SurfaceModel | None = None) -> ZLaurent:
    """Euler-class ratio in class (0, m), over labels '1', 'c1', 'c1^2'."""
    if m < 1:
        raise ValueError("euler_ratio needs m >= 1")
    return ZLaurent({(zp, C1_LABELS[cp]): v for (zp, cp), v in _euler_poly(m).items()})


def euler_numerator(m: int) -> ZLaurent:
    """prod_{j=0}^{m-1} (-j z + c1) in Q[c1]/(c1^3)."""
    num: Poly = {(0, 0): Fraction(1)}
    for w in obs_weights(m):
        num = _poly_mul(num, _weight_poly(w))
    return ZLaurent({(zp, C1_LABELS[cp]): v for (zp, cp), v in num.items()})


def _order(y_order: int) -> Order:
    return Order(0, y_order)


def I_sharp_n1(S: SurfaceModel, y_order: int) -> NovikovSeries:
    """Perverse I-function of S = Hilb^1(S) up to y^y_order.

    Labels: '1', 'c1Sn' for c1(S), and 'pt' for the point class, which
    receives c1^2 = K_S^2 times pt.
    """
    _require_del_pezzo(S)
    zero = (0,) * S.picard_rank
    terms = {(zero, 0): ZLaurent.one()}
    for m in range(1, y_order + 1):
        raw = euler_ratio(m, S)
        val: dict[tuple[int, str], Fraction] = {}
        for (zp, lab), c in raw.items():
            if lab == "c1":
                key = (zp, "c1Sn")
            elif lab == "c1^2":
                key = (zp, "pt")
                c = c * S.K2
            else:
                key = (zp, "1")
            val[key] = val.get(key, Fraction(0)) + I_PREFACTOR * c
        terms[(zero, m)] = ZLaurent(val)
    return NovikovSeries(_order(y_order), S.picard_rank, terms)


def I_sharp_hilbn(n: int, S: SurfaceModel, y_order: int) -> NovikovSeries:
    """Perverse I-function of Hilb^n(S) in classes (0, m), lifted from n = 1.

    For n >= 2 only the c1Sn component is kept: the remaining n - 1 points
    contribute 1 each, and classes with gamma != 0 do not contribute.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if n == 1:
        return I_sharp_n1(S, y_order)
    base = I_sharp_n1(S, y_order)
    return base.map(lambda f: f.filter(lambda _k, lab: lab in ("1", "c1Sn")))


def I0(I: NovikovSeries) -> NovikovSeries:
    """z^0 coefficient of I."""
    return I.z_part(0)


def I1(I: NovikovSeries) -> NovikovSeries:
    """z^{-1} coefficient of I."""
    return I.z_part(-1)


def _require_del_pezzo(S: SurfaceModel) -> None:
    if not is_del_pezzo(S):
        raise ValueError(f"surface {S.name!r} is not a del Pezzo preset")
