"""Truncated formal series with exact coefficients.

``ZLaurent`` is a finite Laurent polynomial in z whose coefficients are
rational linear combinations of labelled cohomology classes.  ``NovikovSeries``
attaches such a polynomial to each monomial q^gamma y^m of the Novikov ring,
truncated by a weight on gamma and by the power of y.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Optional, Sequence

from .rational import RationalLike, q, to_json

Label = str
Key = tuple[tuple[int, ...], int]  # (gamma, m)


class CupError(ValueError):
    """A product of basis labels outside the supplied cup table."""


@dataclass(frozen=True)
class CohBasis:
    labels: tuple[Label, ...]
    degrees: Mapping[Label, int]
    cup_table: Mapping[tuple[Label, Label], Mapping[Label, Fraction]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if "1" not in self.labels or self.degrees.get("1") != 0:
            raise ValueError('basis must contain "1" in degree 0')
        for lab in self.labels:
            if lab not in self.degrees:
                raise ValueError(f"label {lab!r} has no degree")

    def cup(self, a: Label, b: Label) -> Mapping[Label, Fraction]:
        if a == "1":
            return {b: Fraction(1)}
        if b == "1":
            return {a: Fraction(1)}
        if (a, b) in self.cup_table:
            return self.cup_table[(a, b)]
        if (b, a) in self.cup_table:
            return self.cup_table[(b, a)]
        raise CupError(f"cup product {a} * {b} is not in the cup table")

    @classmethod
    def hilb(cls, extra: Sequence[tuple[Label, int]] = ()) -> CohBasis:
        """Basis with 1, the divisor c1Sn, and the point class."""
        labels = ("1", "c1Sn", "pt") + tuple(lab for lab, _ in extra)
        degrees = {"1": 0, "c1Sn": 2, "pt": 4, **{lab: d for lab, d in extra}}
        return cls(labels, degrees)


class ZLaurent:
    """Finite Laurent polynomial in z with coefficients over labelled classes."""

    __slots__ = ("_c",)

    def __init__(self, coeffs: Optional[Mapping[tuple[int, Label], RationalLike]] = None):
        c: dict[tuple[int, Label], Fraction] = {}
        if coeffs:
            for (k, lab), val in coeffs.items():
                v = q(val)
                if v:
                    c[(int(k), lab)] = c.get((int(k), lab), Fraction(0)) + v
                    if not c[(int(k), lab)]:
                        del c[(int(k), lab)]
        self._c = c

    @classmethod
    def const(cls, value: RationalLike, label: Label = "1", zpow: int = 0) -> ZLaurent:
        return cls({(zpow, label): value})

    @classmethod
    def one(cls) -> ZLaurent:
        return cls.const(1)

    def items(self) -> Iterator[tuple[tuple[int, Label], Fraction]]:
        return iter(sorted(self._c.items()))

    def __getitem__(self, key: tuple[int, Label]) -> Fraction:
        return self._c.get(key, Fraction(0))

    def coefficient(self, zpow: int) -> dict[Label, Fraction]:
        return {lab: v for (k, lab), v in self._c.items() if k == zpow}

    def zpowers(self) -> list[int]:
        return sorted({k for k, _ in self._c})

    def is_zero(self) -> bool:
        return not self._c

    def __bool__(self) -> bool:
        return bool(self._c)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, ZLaurent):
            return self._c == other._c
        if isinstance(other, (int, Fraction)):
            return self == ZLaurent.const(other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self._c.items()))

    def __repr__(self) -> str:
        if not self._c:
            return "ZLaurent(0)"
        parts = [f"{v}*{lab}*z^{k}" for (k, lab), v in self.items()]
        return "ZLaurent(" + " + ".join(parts) + ")"

    def __add__(self, other: ZLaurent) -> ZLaurent:
        out = dict(self._c)
        for key, v in other._c.items():
            s = out.get(key, Fraction(0)) + v
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        r = ZLaurent()
        r._c = out
        return r

    def __neg__(self) -> ZLaurent:
        r = ZLaurent()
        r._c = {k: -v for k, v in self._c.items()}
        return r

    def __sub__(self, other: ZLaurent) -> ZLaurent:
        return self + (-other)

    def scale(self, a: RationalLike) -> ZLaurent:
        a = q(a)
        if not a:
            return ZLaurent()
        r = ZLaurent()
        r._c = {k: a * v for k, v in self._c.items()}
        return r

    def shift(self, k: int) -> ZLaurent:
        """Multiply by z^k."""
        r = ZLaurent()
        r._c = {(p + k, lab): v for (p, lab), v in self._c.items()}
        return r

    def mul(self, other: ZLaurent, basis: Optional[CohBasis] = None) -> ZLaurent:
        out: dict[tuple[int, Label], Fraction] = {}
        for (p, a), u in self._c.items():
            for (r_, b), w in other._c.items():
                if basis is None:
                    if a != "1" and b != "1":
                        raise CupError(f"cup product {a} * {b} needs a basis with a cup table")
                    prod = {b if a == "1" else a: Fraction(1)}
                else:
                    prod = basis.cup(a, b)
                for lab, c in prod.items():
                    key = (p + r_, lab)
                    out[key] = out.get(key, Fraction(0)) + u * w * c
        return ZLaurent(out)

    def map_z(self, f: Callable[[int], int]) -> ZLaurent:
        return ZLaurent({(f(k), lab): v for (k, lab), v in self._c.items()})

    def substitute_z_sign(self) -> ZLaurent:
        """f(z) -> f(-z)."""
        return ZLaurent({(k, lab): (-v if k % 2 else v) for (k, lab), v in self._c.items()})

    def scalar(self) -> Fraction:
        """The z^0 coefficient of the label '1'."""
        return self._c.get((0, "1"), Fraction(0))

    def filter(self, pred: Callable[[int, Label], bool]) -> ZLaurent:
        r = ZLaurent()
        r._c = {key: v for key, v in self._c.items() if pred(*key)}
        return r


def truncate_plus(f: ZLaurent) -> ZLaurent:
    """Keep the nonnegative powers of z."""
    return f.filter(lambda k, _lab: k >= 0)


def truncate_z_le(f: ZLaurent, k: int) -> ZLaurent:
    """Keep the powers z^j with j <= k."""
    return f.filter(lambda j, _lab: j <= k)


def truncate_z_gt(f: ZLaurent, k: int) -> ZLaurent:
    return f.filter(lambda j, _lab: j > k)


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Order:
    """Truncation: keep q^gamma y^m with weight(gamma) <= gamma_max and m <= y_max."""

    gamma_max: int
    y_max: int
    gamma_weight: tuple[int, ...] = ()

    def weight(self, gamma: Sequence[int]) -> int:
        if not self.gamma_weight:
            return sum(gamma)
        if len(self.gamma_weight) != len(gamma):
            raise ValueError("gamma has the wrong length for the truncation weight")
        return sum(w * g for w, g in zip(self.gamma_weight, gamma))

    def keeps(self, key: Key) -> bool:
        gamma, m = key
        return 0 <= m <= self.y_max and self.weight(gamma) <= self.gamma_max

    def meet(self, other: Order) -> Order:
        if self.gamma_weight != other.gamma_weight:
            raise ValueError("series truncated by different weights cannot be combined")
        return Order(min(self.gamma_max, other.gamma_max), min(self.y_max, other.y_max), self.gamma_weight)


def _key_sort(key: Key) -> tuple:
    gamma, m = key
    return (sum(gamma), gamma, m)


class NovikovSeries:
    """Truncated series sum over (gamma, m) of q^gamma y^m times a ZLaurent."""

    __slots__ = ("order", "rho", "_t")

    def __init__(self, order: Order, rho: int, terms: Optional[Mapping[Key, ZLaurent]] = None):
        self.order = order
        self.rho = rho
        t: dict[Key, ZLaurent] = {}
        for (gamma, m), val in (terms or {}).items():
            key = (tuple(int(x) for x in gamma), int(m))
            if len(key[0]) != rho:
                raise ValueError(f"gamma {key[0]} does not have length {rho}")
            if not order.keeps(key) or val.is_zero():
                continue
            t[key] = t[key] + val if key in t else val
            if t[key].is_zero():
                del t[key]
        self._t = t

    # constructors
    @classmethod
    def zero(cls, order: Order, rho: int = 1) -> NovikovSeries:
        return cls(order, rho)

    @classmethod
    def one(cls, order: Order, rho: int = 1) -> NovikovSeries:
        return cls(order, rho, {((0,) * rho, 0): ZLaurent.one()})

    @classmethod
    def monomial(cls, order: Order, gamma: Sequence[int], m: int,
                 coeff: Optional[ZLaurent] = None) -> NovikovSeries:
        return cls(order, len(gamma), {(tuple(gamma), m): coeff if coeff is not None else ZLaurent.one()})

    @classmethod
    def y_series(cls, coeffs: Sequence[RationalLike], order: Order, rho: int = 1,
                 label: Label = "1", zpow: int = 0) -> NovikovSeries:
        """sum_m coeffs[m] y^m times label z^zpow."""
        zero = (0,) * rho
        return cls(order, rho, {(zero, m): ZLaurent.const(c, label, zpow) for m, c in enumerate(coeffs)})

    # access
    def keys(self) -> list[Key]:
        return sorted(self._t, key=_key_sort)

    def items(self) -> list[tuple[Key, ZLaurent]]:
        return [(k, self._t[k]) for k in self.keys()]

    def __getitem__(self, key: Key) -> ZLaurent:
        gamma, m = key
        return self._t.get((tuple(gamma), int(m)), ZLaurent())

    def constant(self) -> ZLaurent:
        return self[((0,) * self.rho, 0)]

    def is_zero(self) -> bool:
        return not self._t

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NovikovSeries):
            return NotImplemented
        return self._t == other._t

    def __repr__(self) -> str:
        body = ", ".join(f"{k}: {v!r}" for k, v in self.items())
        return f"NovikovSeries({{{body}}})"

    def map(self, f: Callable[[ZLaurent], ZLaurent]) -> NovikovSeries:
        return NovikovSeries(self.order, self.rho, {k: f(v) for k, v in self._t.items()})

    def truncate(self, order: Order) -> NovikovSeries:
        return NovikovSeries(order, self.rho, self._t)

    def y_coefficients(self, label: Label = "1", zpow: int = 0) -> list[Fraction]:
        """Coefficients of y^m (gamma = 0) on one label and power of z."""
        zero = (0,) * self.rho
        return [self[(zero, m)][(zpow, label)] for m in range(self.order.y_max + 1)]

    def z_part(self, zpow: int) -> NovikovSeries:
        return self.map(lambda f: f.filter(lambda k, _lab: k == zpow).shift(-zpow))

    # ring operations
    def __add__(self, other: NovikovSeries) -> NovikovSeries:
        return nov_add(self, other)

    def __sub__(self, other: NovikovSeries) -> NovikovSeries:
        return nov_add(self, nov_scale(other, -1))

    def __neg__(self) -> NovikovSeries:
        return nov_scale(self, -1)

    def __mul__(self, other: NovikovSeries) -> NovikovSeries:
        return nov_mul(self, other)


def _check_compat(f: NovikovSeries, g: NovikovSeries) -> Order:
    if f.rho != g.rho:
        raise ValueError("series over different Picard ranks")
    return f.order.meet(g.order)


def nov_add(f: NovikovSeries, g: NovikovSeries) -> NovikovSeries:
    order = _check_compat(f, g)
    terms = dict(f._t)
    for k, v in g._t.items():
        terms[k] = terms[k] + v if k in terms else v
    return NovikovSeries(order, f.rho, terms)


def nov_scale(f: NovikovSeries, a: RationalLike | ZLaurent,
              basis: Optional[CohBasis] = None) -> NovikovSeries:
    if isinstance(a, ZLaurent):
        return f.map(lambda v: v.mul(a, basis))
    a = q(a)
    return f.map(lambda v: v.scale(a))


def nov_mul(f: NovikovSeries, g: NovikovSeries, basis: Optional[CohBasis] = None) -> NovikovSeries:
    order = _check_compat(f, g)
    out: dict[Key, ZLaurent] = {}
    for (ga, ma), u in f._t.items():
        for (gb, mb), w in g._t.items():
            key = (tuple(x + y for x, y in zip(ga, gb)), ma + mb)
            if not order.keeps(key):
                continue
            p = u.mul(w, basis)
            out[key] = out[key] + p if key in out else p
    return NovikovSeries(order, f.rho, out)


def nov_pow(f: NovikovSeries, k: int, basis: Optional[CohBasis] = None) -> NovikovSeries:
    if k < 0:
        return nov_pow(nov_inverse(f), -k, basis)
    result = NovikovSeries.one(f.order, f.rho)
    base = f
    while k:
        if k & 1:
            result = nov_mul(result, base, basis)
        base = nov_mul(base, base, basis)
        k >>= 1
    return result


def _is_scalar_constant(v: ZLaurent) -> bool:
    return all(k == 0 and lab == "1" for (k, lab), _ in v.items())


def nov_inverse(f: NovikovSeries, basis: Optional[CohBasis] = None) -> NovikovSeries:
    """Multiplicative inverse; the constant term must be a nonzero scalar."""
    c = f.constant()
    if not _is_scalar_constant(c) or not c.scalar():
        raise ValueError("inverse needs a nonzero scalar constant term")
    c0 = c.scalar()
    # f = c0 (1 + h), 1/f = (1/c0) sum (-h)^k
    h = nov_scale(f, 1 / c0) - NovikovSeries.one(f.order, f.rho)
    return nov_scale(_geometric(nov_scale(h, -1), basis), 1 / c0)


def _nilpotent_bound(f: NovikovSeries) -> int:
    o = f.order
    return o.y_max + max(o.gamma_max, 0) + 1


def _geometric(h: NovikovSeries, basis: Optional[CohBasis]) -> NovikovSeries:
    """sum_{k >= 0} h^k for h without constant term."""
    result = NovikovSeries.one(h.order, h.rho)
    power = NovikovSeries.one(h.order, h.rho)
    for _ in range(_nilpotent_bound(h)):
        power = nov_mul(power, h, basis)
        if power.is_zero():
            break
        result = result + power
    return result


def _check_no_constant(f: NovikovSeries) -> None:
    if not f.constant().is_zero():
        raise ValueError("series must have zero constant term")
    # weight-zero gamma with m = 0 would not be nilpotent
    for (gamma, m) in f.keys():
        if m == 0 and f.order.weight(gamma) <= 0:
            raise ValueError("series has a non-nilpotent term q^%s" % (gamma,))


def log1p(order: Order | int, rho: int = 1) -> NovikovSeries:
    """log(1 + y) = sum_{m >= 1} (-1)^(m-1) y^m / m."""
    if isinstance(order, int):
        order = Order(0, order)
    coeffs = [Fraction(0)] + [Fraction((-1) ** (m - 1), m) for m in range(1, order.y_max + 1)]
    return NovikovSeries.y_series(coeffs, order, rho)


def exp_series(f: NovikovSeries, basis: Optional[CohBasis] = None) -> NovikovSeries:
    """sum_k f^k / k! for f without constant term."""
    _check_no_constant(f)
    result = NovikovSeries.one(f.order, f.rho)
    power = NovikovSeries.one(f.order, f.rho)
    fact = Fraction(1)
    for k in range(1, _nilpotent_bound(f) + 1):
        power = nov_mul(power, f, basis)
        if power.is_zero():
            break
        fact *= k
        result = result + nov_scale(power, 1 / fact)
    return result


def log_series(f: NovikovSeries, basis: Optional[CohBasis] = None) -> NovikovSeries:
    """log f for f with constant term 1."""
    c = f.constant()
    if c != ZLaurent.one():
        raise ValueError("log needs constant term 1")
    h = f - NovikovSeries.one(f.order, f.rho)
    result = NovikovSeries.zero(f.order, f.rho)
    power = NovikovSeries.one(f.order, f.rho)
    for k in range(1, _nilpotent_bound(f) + 1):
        power = nov_mul(power, h, basis)
        if power.is_zero():
            break
        result = result + nov_scale(power, Fraction((-1) ** (k - 1), k))
    return result


def binomial_series(a: RationalLike, order: Order | int, rho: int = 1) -> NovikovSeries:
    """(1 + y)^a by the binomial theorem."""
    if isinstance(order, int):
        order = Order(0, order)
    a = q(a)
    coeffs = []
    c = Fraction(1)
    for m in range(order.y_max + 1):
        coeffs.append(c)
        c = c * (a - m) / (m + 1)
    return NovikovSeries.y_series(coeffs, order, rho)


def mu_from_I(I: NovikovSeries) -> NovikovSeries:
    """mu(z) = [z I - z]_+ termwise in (gamma, m)."""
    if I.constant() != ZLaurent.one() and not _constant_is_identity_plus_negative(I.constant()):
        raise ValueError("I must have the identity class as its (0,0) constant")
    zI = I.map(lambda f: f.shift(1))
    minus_z = NovikovSeries(I.order, I.rho, {((0,) * I.rho, 0): ZLaurent.const(-1, "1", 1)})
    return (zI + minus_z).map(truncate_plus)


def _constant_is_identity_plus_negative(c: ZLaurent) -> bool:
    # the (0,0) term may carry extra z^{<=-2} content; [z * that]_+ vanishes
    rest = c - ZLaurent.one()
    return all(k <= -2 for k in rest.zpowers())


# ---------------------------------------------------------------------------
# JSON

def series_to_obj(f: NovikovSeries) -> dict:
    terms = []
    for (gamma, m), val in f.items():
        for (k, lab), c in val.items():
            terms.append(
                {
                    "gamma": list(gamma),
                    "m": m,
                    "z": k,
                    "basis": lab,
                    "coeff": to_json(c),
                }
            )
    order = {"gamma_max": f.order.gamma_max, "y_max": f.order.y_max}
    if f.order.gamma_weight:
        order["gamma_weight"] = list(f.order.gamma_weight)
    return {"order": order, "rho": f.rho, "terms": terms}


def series_from_obj(obj: Mapping) -> NovikovSeries:
    o = obj["order"]
    order = Order(int(o["gamma_max"]), int(o["y_max"]), tuple(int(x) for x in o.get("gamma_weight", ())))
    raw_terms: Iterable[Mapping] = obj.get("terms", [])
    rho = obj.get("rho")
    collected: dict[Key, dict[tuple[int, Label], Fraction]] = {}
    for t in raw_terms:
        gamma = tuple(int(x) for x in t["gamma"])
        if rho is None:
            rho = len(gamma)
        val = q(t["coeff"])
        slot = collected.setdefault((gamma, int(t["m"])), {})
        key = (int(t["z"]), str(t["basis"]))
        slot[key] = slot.get(key, Fraction(0)) + val
    rho = int(rho) if rho is not None else 1
    return NovikovSeries(order, rho, {k: ZLaurent(v) for k, v in collected.items()})


def series_to_json(f: NovikovSeries) -> str:
    return json.dumps(series_to_obj(f), sort_keys=True, indent=2)


def series_from_json(text: str) -> NovikovSeries:
    return series_from_obj(json.loads(text))
