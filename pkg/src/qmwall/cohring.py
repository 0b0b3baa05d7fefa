"""Surface cohomology ring, Chern characters and determinant-line degrees.

Everything lives in the even cohomology of a surface with q(S) = 0, split as
(rank, Neron-Severi vector, point part).  NS vectors are written in a fixed
basis whose Gram matrix is ``SurfaceModel.intersection_form``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .rational import RationalLike, q, qvec

Vec = tuple[Fraction, ...]


@dataclass(frozen=True)
class SurfaceModel:
    """Numerical data of a smooth projective surface with q(S) = 0."""

    name: str
    intersection_form: tuple[tuple[int, ...], ...]
    c1S: Vec
    chiO: Fraction
    hyperplane: Vec
    d: Fraction = field(init=False)

    def __post_init__(self) -> None:
        form = self.intersection_form
        rho = len(form)
        if rho == 0:
            raise ValueError("picard rank must be positive")
        for row in form:
            if len(row) != rho:
                raise ValueError("intersection form must be square")
        for i in range(rho):
            for j in range(rho):
                if form[i][j] != form[j][i]:
                    raise ValueError("intersection form must be symmetric")
        if len(self.c1S) != rho or len(self.hyperplane) != rho:
            raise ValueError("c1S and hyperplane must have length picard_rank")
        d = self.pair(self.hyperplane, self.hyperplane)
        if d <= 0:
            raise ValueError(f"hyperplane class has self-intersection {d} <= 0")
        object.__setattr__(self, "d", d)

    @property
    def picard_rank(self) -> int:
        return len(self.intersection_form)

    def pair(self, a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
        total = Fraction(0)
        for i, j, f in self._nonzero_form():
            total += f * a[i] * b[j]
        return total

    def _nonzero_form(self) -> tuple[tuple[int, int, int], ...]:
        # forms of blow-ups are mostly zero; cache the sparse pattern
        cached = self.__dict__.get("_sparse")
        if cached is None:
            form = self.intersection_form
            cached = tuple((i, j, form[i][j]) for i in range(len(form))
                           for j in range(len(form)) if form[i][j])
            object.__setattr__(self, "_sparse", cached)
        return cached

    def deg(self, c1: Sequence[Fraction]) -> Fraction:
        """Degree of an NS class with respect to O_S(1)."""
        return self.pair(c1, self.hyperplane)

    @property
    def K2(self) -> Fraction:
        """c1(S)^2."""
        return self.pair(self.c1S, self.c1S)

    @property
    def e(self) -> Fraction:
        """c1(O_S(1)) . c1(S)."""
        return self.pair(self.hyperplane, self.c1S)

    def zero(self) -> Vec:
        return (Fraction(0),) * self.picard_rank


@dataclass(frozen=True)
class ChernVector:
    """An element (rk, c1, ch2) of the even cohomology Lambda of S."""

    rk: Fraction
    c1: Vec
    ch2: Fraction

    @classmethod
    def of(cls, rk: RationalLike, c1: Sequence[RationalLike], ch2: RationalLike):
        return cls(q(rk), qvec(c1), q(ch2))

    @classmethod
    def zero(cls, rho: int):
        return cls(Fraction(0), (Fraction(0),) * rho, Fraction(0))

    def __add__(self, other: ChernVector):
        _check_rank(self.c1, other.c1)
        return type(self)(
            self.rk + other.rk,
            tuple(a + b for a, b in zip(self.c1, other.c1)),
            self.ch2 + other.ch2,
        )

    def __neg__(self):
        return type(self)(-self.rk, tuple(-a for a in self.c1), -self.ch2)

    def __sub__(self, other: ChernVector):
        return self + (-other)

    def scale(self, a: RationalLike):
        a = q(a)
        return type(self)(a * self.rk, tuple(a * x for x in self.c1), a * self.ch2)

    __rmul__ = scale


class KClassRep(ChernVector):
    """A class of K_0(S)_Q, recorded through its Chern character."""

    @classmethod
    def point(cls, S: SurfaceModel) -> KClassRep:
        """ch(O_x) = (0, 0, 1)."""
        return cls(Fraction(0), S.zero(), Fraction(1))

    @classmethod
    def structure_sheaf(cls, S: SurfaceModel) -> KClassRep:
        return cls(Fraction(1), S.zero(), Fraction(0))

    @classmethod
    def hyperplane(cls, S: SurfaceModel) -> KClassRep:
        """ch(O_H) = (0, H, -H^2/2)."""
        return cls(Fraction(0), S.hyperplane, -S.d / 2)


@dataclass(frozen=True)
class DegreeClass:
    """Degree part of ch of a family on S x C.

    The curve-class pair (gamma, m) of the subscheme convention is
    (-c1_d, -pt_d); use :meth:`from_curve_class` to build from it.
    """

    rk_d: Fraction
    c1_d: Vec
    pt_d: Fraction

    @classmethod
    def of(cls, rk_d: RationalLike, c1_d: Sequence[RationalLike], pt_d: RationalLike):
        return cls(q(rk_d), qvec(c1_d), q(pt_d))

    @classmethod
    def from_curve_class(cls, gamma: Sequence[RationalLike], m: RationalLike) -> DegreeClass:
        return cls(Fraction(0), tuple(-x for x in qvec(gamma)), -q(m))

    @property
    def gamma(self) -> Vec:
        return tuple(-x for x in self.c1_d)

    @property
    def m(self) -> Fraction:
        return -self.pt_d

    def as_chern(self) -> ChernVector:
        return ChernVector(self.rk_d, self.c1_d, self.pt_d)

    def __add__(self, other: DegreeClass) -> DegreeClass:
        s = self.as_chern() + other.as_chern()
        return DegreeClass(s.rk, s.c1, s.ch2)

    def scale(self, a: RationalLike) -> DegreeClass:
        s = self.as_chern().scale(a)
        return DegreeClass(s.rk, s.c1, s.ch2)


def _check_rank(a: Vec, b: Vec) -> None:
    if len(a) != len(b):
        raise ValueError(f"NS vectors of different length {len(a)} and {len(b)}")


def chi_surface(v: ChernVector, S: SurfaceModel) -> Fraction:
    """Hirzebruch-Riemann-Roch: the integral of ch(v) td_S."""
    return v.ch2 + S.pair(v.c1, S.c1S) / 2 + v.rk * S.chiO


def mult_k(u: ChernVector, v: ChernVector, S: SurfaceModel) -> ChernVector:
    """Product in the Chern-character ring, truncated at degree 4."""
    _check_rank(u.c1, v.c1)
    return ChernVector(
        u.rk * v.rk,
        tuple(u.rk * b + v.rk * a for a, b in zip(u.c1, v.c1)),
        u.rk * v.ch2 + v.rk * u.ch2 + S.pair(u.c1, v.c1),
    )


def chi_pair(u: ChernVector, v: ChernVector, S: SurfaceModel) -> Fraction:
    """chi(u . v); the value 1 certifies a fine-moduli normalisation class."""
    return chi_surface(mult_k(u, v, S), S)


def u_class(v: ChernVector, i: int, S: SurfaceModel) -> KClassRep:
    """The class u_i = -rk(v) h^i + chi(v h^i) [O_x] in the orthogonal of v."""
    if i == 0:
        h = KClassRep.structure_sheaf(S)
    elif i == 1:
        h = KClassRep.hyperplane(S)
    else:
        raise ValueError("u_class index must be 0 or 1")
    coeff = chi_pair(v, h, S)
    out = (-h.scale(v.rk)) + KClassRep.point(S).scale(coeff)
    return KClassRep(out.rk, out.c1, out.ch2)


def det_degree(u: ChernVector, beta: DegreeClass, S: SurfaceModel) -> Fraction:
    """Degree of the determinant line bundle lambda(u) on a quasimap of degree beta."""
    return chi_surface(mult_k(u, beta.as_chern(), S), S)


def chi_u1(v: ChernVector, B: ChernVector, S: SurfaceModel) -> Fraction:
    return B.rk * S.deg(v.c1) - v.rk * S.deg(B.c1)


def chi_u0(v: ChernVector, B: ChernVector, S: SurfaceModel) -> Fraction:
    return chi_surface(v, S) * B.rk - v.rk * chi_surface(B, S)


def hilb_class(n: int, S: SurfaceModel) -> ChernVector:
    """ch of an ideal sheaf of n points, (1, 0, -n)."""
    return ChernVector(Fraction(1), S.zero(), Fraction(-n))


# ---------------------------------------------------------------------------
# presets

def _blowup(k: int) -> SurfaceModel:
    form = tuple(
        tuple((1 if i == 0 else -1) if i == j else 0 for j in range(k + 1)) for i in range(k + 1)
    )
    anti = (Fraction(3),) + (Fraction(-1),) * k
    # -K is very ample up to k = 6; -2K and -3K are very ample for k = 7, 8.
    mult = 1 if k <= 6 else (2 if k == 7 else 3)
    return SurfaceModel(
        name=f"dP{k}",
        intersection_form=form,
        c1S=anti,
        chiO=Fraction(1),
        hyperplane=tuple(mult * x for x in anti),
    )


def _presets() -> dict[str, SurfaceModel]:
    out = {
        "P2": SurfaceModel("P2", ((1,),), (Fraction(3),), Fraction(1), (Fraction(1),)),
        "P1xP1": SurfaceModel(
            "P1xP1",
            ((0, 1), (1, 0)),
            (Fraction(2), Fraction(2)),
            Fraction(1),
            (Fraction(1), Fraction(1)),
        ),
        # abstract Picard-rank-one model with trivial canonical class (degree-2 K3 numerics)
        "rho1": SurfaceModel("rho1", ((2,),), (Fraction(0),), Fraction(2), (Fraction(1),)),
    }
    for k in range(1, 9):
        out[f"dP{k}"] = _blowup(k)
    return out


PRESETS: dict[str, SurfaceModel] = _presets()
DEL_PEZZO = frozenset(["P2", "P1xP1"] + [f"dP{k}" for k in range(1, 9)])


def is_del_pezzo(S: SurfaceModel) -> bool:
    return S.name in DEL_PEZZO and PRESETS.get(S.name) == S


def surface_from_mapping(data: dict, name: str = "custom") -> SurfaceModel:
    """Build a SurfaceModel from parsed TOML/JSON keys."""
    try:
        rho = int(data["picard_rank"])
        raw_form = data["intersection_form"]
        c1S = qvec(data["c1S"])
        chiO = q(data["chiO"])
        hyper = qvec(data["hyperplane"])
    except KeyError as exc:
        raise ValueError(f"surface definition missing key {exc.args[0]!r}") from None
    if raw_form and isinstance(raw_form[0], (list, tuple)):
        flat = [x for row in raw_form for x in row]
    else:
        flat = list(raw_form)
    if len(flat) != rho * rho:
        raise ValueError(f"intersection_form needs {rho * rho} entries, got {len(flat)}")
    for x in flat:
        if isinstance(x, bool) or not isinstance(x, int):
            raise ValueError("intersection_form entries must be integers")
    form = tuple(tuple(flat[i * rho:(i + 1) * rho]) for i in range(rho))
    return SurfaceModel(str(data.get("name", name)), form, c1S, chiO, hyper)


def load_surface(spec: str) -> SurfaceModel:
    """Resolve a preset name or a path to a TOML surface description."""
    if spec in PRESETS:
        return PRESETS[spec]
    path = Path(spec)
    if not path.exists():
        raise ValueError(f"unknown surface {spec!r}: not a preset and no such file")
    try:
        import tomllib  # type: ignore[import-not-found]
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with path.open("rb") as fh:
        data = tomllib.load(fh)
    return surface_from_mapping(data, name=path.stem)
