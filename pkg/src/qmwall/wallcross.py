"""Correlator algebra and wall-crossing changes of variables.

Correlators <tau_{k_1}(g_1), ..., tau_{k_N}(g_N)>_{g, beta} are opaque symbols;
the engine only manipulates formal linear combinations of them.  A generating
series

    F_g(t) = sum_{N, beta} q^beta / N! <t(psi), ..., t(psi)>_{g, N, beta}

is stored with explicit t-slots; substituting t(z) -> a t(z) + b(z) expands
every slot multilinearly.  Each term of a ``BracketSeries`` remembers its
Novikov weight separately from the class of its bracket, because a substituted
insertion carries its own q-power.
"""

from __future__ import annotations

import itertools
import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, NamedTuple, Optional, Sequence

from .cohring import SurfaceModel
from .series import CohBasis, Key, NovikovSeries, Order, ZLaurent, truncate_z_le
from .rational import RationalLike, q, to_json

Weight = Key


class Ins(NamedTuple):
    """An insertion tau_psi(label); the label 't' marks the formal slot t(psi)."""

    label: str
    psi: int = 0

    @property
    def is_t(self) -> bool:
        return self.label == T_LABEL


T_LABEL = "t"
T = Ins(T_LABEL, 0)


class InvariantViolation(RuntimeError):
    """An identity that must hold by construction failed."""


class WallHypothesisError(ValueError):
    """A bracket violates 2g - 2 + N + deg(beta)/d0 > 0 at a wall it crosses."""


@dataclass(frozen=True, order=True)
class Bracket:
    g: int
    gamma: tuple[int, ...]
    m: int
    insertions: tuple[Ins, ...] = ()

    def __post_init__(self) -> None:
        if self.g < 0:
            raise ValueError("genus must be nonnegative")
        ins = tuple(sorted(Ins(str(i[0]), int(i[1])) for i in self.insertions))
        for i in ins:
            if i.psi < 0:
                raise ValueError("psi powers must be nonnegative")
            if i.is_t and i.psi != 0:
                raise ValueError("the t slot carries no psi power")
        object.__setattr__(self, "insertions", ins)
        object.__setattr__(self, "gamma", tuple(int(x) for x in self.gamma))

    @property
    def N(self) -> int:
        return len(self.insertions)

    @property
    def beta(self) -> Weight:
        return (self.gamma, self.m)

    @property
    def t_count(self) -> int:
        return sum(1 for i in self.insertions if i.is_t)

    def fixed(self) -> tuple[Ins, ...]:
        return tuple(i for i in self.insertions if not i.is_t)

    def is_zero_class(self) -> bool:
        return self.m == 0 and not any(self.gamma)

    def is_unstable(self) -> bool:
        return self.is_zero_class() and 2 * self.g - 2 + self.N <= 0

    def with_insertions(self, ins: Iterable[Ins], beta: Optional[Weight] = None) -> Bracket:
        gamma, m = beta if beta is not None else self.beta
        return Bracket(self.g, gamma, m, tuple(ins))

    def without(self, ins: Ins) -> tuple[Ins, ...]:
        lst = list(self.insertions)
        lst.remove(ins)
        return tuple(lst)

    def __str__(self) -> str:
        body = ", ".join("t" if i.is_t else f"tau_{i.psi}({i.label})" for i in self.insertions)
        return f"<{body}>_{{g={self.g}, gamma={list(self.gamma)}, m={self.m}}}"


LinComb = dict[Bracket, Fraction]


def _add_to(d: dict, key, val: Fraction) -> None:
    s = d.get(key, Fraction(0)) + val
    if s:
        d[key] = s
    else:
        d.pop(key, None)


def _wadd(a: Weight, b: Weight) -> Weight:
    return (tuple(x + y for x, y in zip(a[0], b[0])), a[1] + b[1])


def _wsub(a: Weight, b: Weight) -> Weight:
    return (tuple(x - y for x, y in zip(a[0], b[0])), a[1] - b[1])


def default_effective(beta: Weight) -> bool:
    gamma, m = beta
    return m >= 0 and all(x >= 0 for x in gamma)


def default_degree(beta: Weight) -> int:
    gamma, m = beta
    return sum(gamma) + m


# ---------------------------------------------------------------------------

class BracketSeries:
    """Finite formal sum of coefficient * q^weight * bracket."""

    __slots__ = ("order", "rho", "nmax", "mode", "_t")

    def __init__(
        self,
        order: Order,
        rho: int,
        terms: Optional[Mapping[tuple[Bracket, Weight], RationalLike]] = None,
        nmax: Optional[int] = None,
        mode: str = "standard",
    ):
        if mode not in ("standard", "perverse"):
            raise ValueError("mode must be 'standard' or 'perverse'")
        self.order = order
        self.rho = rho
        self.nmax = nmax
        self.mode = mode
        t: dict[tuple[Bracket, Weight], Fraction] = {}
        for (b, w), c in (terms or {}).items():
            w = (tuple(int(x) for x in w[0]), int(w[1]))
            if self._keeps(b, w):
                _add_to(t, (b, w), q(c))
        self._t = t

    def _keeps(self, b: Bracket, w: Weight) -> bool:
        if len(b.gamma) != self.rho or len(w[0]) != self.rho:
            raise ValueError("class length does not match the Picard rank")
        if b.is_unstable():
            return False
        if self.nmax is not None and b.N > self.nmax:
            return False
        return self.order.keeps(w)

    def like(self, terms: Mapping[tuple[Bracket, Weight], Fraction]) -> BracketSeries:
        return BracketSeries(self.order, self.rho, terms, self.nmax, self.mode)

    def items(self) -> list[tuple[tuple[Bracket, Weight], Fraction]]:
        return sorted(self._t.items(), key=lambda kv: _term_sort(kv[0]))

    def __getitem__(self, key: tuple[Bracket, Weight]) -> Fraction:
        return self._t.get(key, Fraction(0))

    def __len__(self) -> int:
        return len(self._t)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BracketSeries):
            return NotImplemented
        return self._t == other._t

    def __add__(self, other: BracketSeries) -> BracketSeries:
        out = dict(self._t)
        for k, v in other._t.items():
            _add_to(out, k, v)
        return self.like(out)

    def __sub__(self, other: BracketSeries) -> BracketSeries:
        return self + other.scale(-1)

    def scale(self, a: RationalLike) -> BracketSeries:
        a = q(a)
        return self.like({k: a * v for k, v in self._t.items()})

    def filter(self, pred: Callable[[Bracket, Weight], bool]) -> BracketSeries:
        return self.like({k: v for k, v in self._t.items() if pred(*k)})

    def times_series(self, f: NovikovSeries) -> BracketSeries:
        """Multiply by a scalar Novikov series (label '1', z^0 coefficients only)."""
        out: dict[tuple[Bracket, Weight], Fraction] = {}
        for key, zl in f.items():
            for (k, lab), c in zl.items():
                if k != 0 or lab != "1":
                    raise ValueError("times_series needs a scalar series")
                for (b, w), v in self._t.items():
                    w2 = _wadd(w, key)
                    if self.order.keeps(w2):
                        _add_to(out, (b, w2), c * v)
        return self.like(out)

    def __repr__(self) -> str:
        return f"BracketSeries({len(self._t)} terms)"


def _term_sort(key: tuple[Bracket, Weight]) -> tuple:
    b, w = key
    return (sum(w[0]), w, b.g, b.gamma, b.m, b.insertions)


def classes_in_window(order: Order, rho: int,
                      effective: Callable[[Weight], bool] = default_effective) -> list[Weight]:
    """All (gamma, m) with nonnegative entries kept by ``order``."""
    bound = max(order.gamma_max, 0)
    out = []
    for gamma in itertools.product(range(bound + 1), repeat=rho):
        for m in range(order.y_max + 1):
            key = (tuple(gamma), m)
            if order.keeps(key) and effective(key):
                out.append(key)
    return sorted(out, key=lambda k: (sum(k[0]), k))


def generic_F(
    g: int,
    order: Order,
    rho: int,
    nmax: int,
    fixed: Sequence[Ins] = (),
    effective: Callable[[Weight], bool] = default_effective,
    mode: str = "standard",
) -> BracketSeries:
    """F_g(t) = sum q^beta / N! <fixed, t^N>_{g, beta}, truncated at nmax insertions."""
    terms: dict[tuple[Bracket, Weight], Fraction] = {}
    for beta in classes_in_window(order, rho, effective):
        for n in range(0, nmax - len(fixed) + 1):
            b = Bracket(g, beta[0], beta[1], tuple(fixed) + (T,) * n)
            terms[(b, beta)] = Fraction(1, math.factorial(n))
    return BracketSeries(order, rho, terms, nmax, mode)


# ---------------------------------------------------------------------------
# substitution machinery

@dataclass(frozen=True)
class Option:
    """One summand of a slot replacement: coeff * q^delta * insertion."""

    ins: Ins
    delta: Weight
    coeff: Fraction
    tdeg: int = 0


def _check_option_weights(options: Sequence[Option], order: Order) -> None:
    for o in options:
        if o.delta[1] < 0 or order.weight(o.delta[0]) < 0:
            raise ValueError("substituted terms must have nonnegative Novikov weight")


def _multisets(
    options: Sequence[Option],
    n: int,
    start_weight: Weight,
    keep: Callable[[Weight], bool],
    tcap: Optional[int] = None,
) -> Iterator[tuple[list[int], Weight]]:
    """Nondecreasing index lists of length n whose weights stay admissible.

    Pruning relies on every option weight being nonnegative, so an
    inadmissible partial weight stays inadmissible.
    """
    chosen: list[int] = []

    def rec(start: int, remaining: int, weight: Weight, tdeg: int) -> Iterator[tuple[list[int], Weight]]:
        if remaining == 0:
            yield chosen, weight
            return
        for i in range(start, len(options)):
            o = options[i]
            t2 = tdeg + o.tdeg
            if tcap is not None and t2 > tcap:
                continue
            w2 = _wadd(weight, o.delta)
            if not keep(w2):
                continue
            chosen.append(i)
            yield from rec(i, remaining - 1, w2, t2)
            chosen.pop()

    yield from rec(0, n, start_weight, 0)


def _multiset_coeff(options: Sequence[Option], idx: list[int], ordered: bool) -> Fraction:
    """prod c_i^{e_i} times n!/prod e_i! (ordered slots) or 1/prod e_i! (1/k! sums)."""
    c = Fraction(1)
    for i in idx:
        c *= options[i].coeff
    denom = 1
    for _, grp in itertools.groupby(idx):
        denom *= math.factorial(len(list(grp)))
    if ordered:
        return c * math.factorial(len(idx)) / denom
    return c / denom


def substitute_slots(F: BracketSeries, options: Sequence[Option],
                     tcap: Optional[int] = None) -> BracketSeries:
    """Replace every t-slot by sum(options), expanding multilinearly."""
    _check_option_weights(options, F.order)
    out: dict[tuple[Bracket, Weight], Fraction] = {}
    for (b, w), c in F._t.items():
        n = b.t_count
        fixed = b.fixed()
        for idx, w2 in _multisets(options, n, w, F.order.keeps, tcap):
            coeff = c * _multiset_coeff(options, idx, ordered=True)
            if not coeff:
                continue
            ins = fixed + tuple(options[i].ins for i in idx)
            _add_to(out, (b.with_insertions(ins), w2), coeff)
    return F.like(out)


def check_mu(mu: NovikovSeries) -> None:
    """mu must have nonnegative z-support and vanishing (0, 0) term."""
    if not mu.constant().is_zero():
        raise ValueError("mu must vanish at q^0")
    for key, zl in mu.items():
        for (k, lab), _ in zl.items():
            if k < 0:
                raise ValueError(f"mu has a negative power z^{k} at {key}")
            if lab == T_LABEL:
                raise ValueError("'t' is reserved for the formal slot")


def mu_options(mu: NovikovSeries, sign: int = -1,
               pred: Callable[[Weight], bool] = lambda _k: True) -> list[Option]:
    """Insertions of mu(sign * psi): z^k -> sign^k tau_k."""
    check_mu(mu)
    opts = []
    for key, zl in mu.items():
        if not pred(key):
            continue
        for (k, lab), c in zl.items():
            opts.append(Option(Ins(lab, k), key, c * (sign ** k)))
    return opts


def expand_substitution(F: BracketSeries, mu: NovikovSeries) -> BracketSeries:
    """F(t) -> F(t + mu(-z)), expanded into brackets with mu(-psi) insertions."""
    zero = ((0,) * F.rho, 0)
    options = [Option(T, zero, Fraction(1), 1)] + mu_options(mu)
    return substitute_slots(F, options)


def substitute(F: BracketSeries, scale: NovikovSeries, shift: NovikovSeries) -> BracketSeries:
    """F(t) -> F(a t + b) for a scalar series a and a series b(z) in nonnegative z."""
    options: list[Option] = []
    for key, zl in scale.items():
        for (k, lab), c in zl.items():
            if k != 0 or lab != "1":
                raise ValueError("the scale of t must be a scalar series")
            options.append(Option(T, key, c, 1))
    for key, zl in shift.items():
        for (k, lab), c in zl.items():
            if k < 0:
                raise ValueError("the shift must have nonnegative z-support")
            options.append(Option(Ins(lab, k), key, c))
    return substitute_slots(F, options)


# ---------------------------------------------------------------------------
# walls

def _wall_corrections(
    b: Bracket,
    options: Sequence[Option],
    effective: Callable[[Weight], bool],
    nmax: Optional[int],
) -> Iterator[tuple[Bracket, Fraction]]:
    """sum_{k >= 1} 1/k! <b, mu_{beta_1}(-psi), ..., mu_{beta_k}(-psi)>_{beta - sum beta_a}."""
    if not options:
        return
    beta = b.beta
    # the loop stops once no multiset of size k fits under beta
    kmax = nmax - b.N if nmax is not None else None
    zero = ((0,) * len(b.gamma), 0)

    def keep(w: Weight) -> bool:
        return effective(_wsub(beta, w))

    k = 0
    while kmax is None or k < kmax:
        k += 1
        found = False
        for idx, w in _multisets(options, k, zero, keep):
            found = True
            coeff = _multiset_coeff(options, idx, ordered=False)
            if coeff:
                ins = b.insertions + tuple(options[i].ins for i in idx)
                yield b.with_insertions(ins, _wsub(beta, w)), coeff
        if not found:
            break


def wall_hypothesis_holds(b: Bracket, d0: int, degree: Callable[[Weight], int]) -> bool:
    return 2 * b.g - 2 + b.N + Fraction(degree(b.beta), d0) > 0


def single_wall(
    F: BracketSeries,
    d0: int,
    mu: NovikovSeries,
    degree: Callable[[Weight], int] = default_degree,
    effective: Callable[[Weight], bool] = default_effective,
) -> BracketSeries:
    """Cross the wall epsilon = 1/d0 from below: every bracket on the epsilon^- side
    is rewritten as its epsilon^+ counterpart plus the wall correction built from
    the slices mu_beta with deg(beta) = d0."""
    if d0 <= 0:
        raise ValueError("d0 must be a positive integer")
    options = mu_options(mu, pred=lambda key: degree(key) == d0)
    out = dict(F._t)
    violations = []
    for (b, w), c in F._t.items():
        corr = list(_wall_corrections(b, options, effective, F.nmax))
        if not corr:
            continue
        if not wall_hypothesis_holds(b, d0, degree):
            violations.append(str(b))
            continue
        for b2, c2 in corr:
            _add_to(out, (b2, w), c * c2)
    if violations:
        raise WallHypothesisError(
            f"2g-2+N+deg/{d0} > 0 fails for: " + "; ".join(violations[:5])
        )
    return F.like(out)


def cross_all_walls(
    F: BracketSeries,
    mu: NovikovSeries,
    dmax: int,
    degree: Callable[[Weight], int] = default_degree,
    effective: Callable[[Weight], bool] = default_effective,
) -> BracketSeries:
    """Walls 1/dmax, ..., 1/1 in increasing epsilon: 0+ brackets to oo brackets."""
    for d0 in range(dmax, 0, -1):
        F = single_wall(F, d0, mu, degree, effective)
    return F


def wallcross_bracket(
    b: Bracket,
    mu: NovikovSeries,
    effective: Callable[[Weight], bool] = default_effective,
    nmax: Optional[int] = None,
) -> LinComb:
    """<b>^{0+} as a combination of oo brackets (all walls at once)."""
    out: LinComb = {}
    if not b.is_unstable():
        out[b] = Fraction(1)
    for b2, c in _wall_corrections(b, mu_options(mu), effective, nmax):
        if not b2.is_unstable():
            _add_to(out, b2, c)
    return out


# ---------------------------------------------------------------------------
# string, dilaton, divisor
# t-slots carry no psi power, so they never produce psi-lowering corrections

@dataclass(frozen=True)
class DivisorPairing:
    """D . (gamma, m) = ns(D) . gamma + a(D) * m for divisor labels on Hilb^n(S)."""

    S: SurfaceModel
    table: Mapping[str, tuple[tuple[Fraction, ...], Fraction]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        t = dict(self.table)
        t.setdefault("c1Sn", (self.S.c1S, Fraction(0)))
        object.__setattr__(self, "table", t)

    def pair(self, label: str, beta: Weight) -> Fraction:
        if label not in self.table:
            raise KeyError(f"no pairing known for divisor {label!r}")
        ns, a = self.table[label]
        gamma, m = beta
        return self.S.pair(ns, tuple(Fraction(x) for x in gamma)) + a * m


def apply_string(b: Bracket) -> LinComb:
    """<1, prod tau_{k_i}(g_i)> = sum_i <..., tau_{k_i - 1}(g_i), ...>."""
    unit = Ins("1", 0)
    if unit not in b.insertions:
        raise ValueError("string equation needs a psi-free unit insertion")
    rest = b.without(unit)
    residual = b.with_insertions(rest)
    out: LinComb = {}
    if residual.is_unstable():
        return out
    for i, ins in enumerate(rest):
        if ins.psi >= 1:
            new = rest[:i] + (Ins(ins.label, ins.psi - 1),) + rest[i + 1:]
            _add_to(out, b.with_insertions(new), Fraction(1))
    return out


def apply_dilaton(b: Bracket) -> LinComb:
    """<tau_1(1), rest>_{g, beta} = (2g - 2 + #rest) <rest>_{g, beta}."""
    dil = Ins("1", 1)
    if dil not in b.insertions:
        raise ValueError("dilaton equation needs a tau_1(1) insertion")
    rest = b.without(dil)
    residual = b.with_insertions(rest)
    if residual.is_unstable():
        return {}
    c = Fraction(2 * b.g - 2 + len(rest))
    return {residual: c} if c else {}


def apply_divisor(b: Bracket, divisor: str, pairing: DivisorPairing,
                  basis: Optional[CohBasis] = None) -> LinComb:
    """<D, prod tau_{k_i}(g_i)>_beta
    = (D.beta) <prod tau_{k_i}(g_i)>_beta + sum_i <..., tau_{k_i - 1}(g_i . D), ...>_beta."""
    D = Ins(divisor, 0)
    if D not in b.insertions:
        raise ValueError(f"bracket has no psi-free insertion {divisor!r}")
    rest = b.without(D)
    residual = b.with_insertions(rest)
    out: LinComb = {}
    if residual.is_unstable():
        return out
    _add_to(out, residual, pairing.pair(divisor, b.beta))
    for i, ins in enumerate(rest):
        if ins.psi >= 1:
            if basis is None:
                raise ValueError("psi corrections of the divisor equation need a cup table")
            for lab, c in basis.cup(ins.label, divisor).items():
                new = rest[:i] + (Ins(lab, ins.psi - 1),) + rest[i + 1:]
                _add_to(out, b.with_insertions(new), c)
    return out


def reduce_divisor_fully(comb: LinComb, divisor: str, pairing: DivisorPairing,
                         basis: Optional[CohBasis] = None) -> LinComb:
    """Apply the divisor equation until no psi-free ``divisor`` insertion remains."""
    todo = dict(comb)
    done: LinComb = {}
    while todo:
        b, c = todo.popitem()
        if Ins(divisor, 0) in b.insertions:
            for b2, c2 in apply_divisor(b, divisor, pairing, basis).items():
                _add_to(todo, b2, c * c2)
        else:
            _add_to(done, b, c)
    return done


# ---------------------------------------------------------------------------
# del Pezzo specialisation

def delpezzo_mu(y_order: int, rho: int) -> NovikovSeries:
    """mu(z) = log(1 + y) c1Sn, the z-free change of variables for del Pezzo S."""
    order = Order(0, y_order)
    zero = (0,) * rho
    terms = {
        (zero, m): ZLaurent.const(Fraction((-1) ** (m - 1), m), "c1Sn")
        for m in range(1, y_order + 1)
    }
    return NovikovSeries(order, rho, terms)


def delpezzo_specialize(g: int, N: int, gamma: Sequence[int], y_order: int,
                        S: SurfaceModel) -> NovikovSeries:
    """Factor relating <...>^{0+}_{g, gamma} to <...>^{oo}_{g, gamma} as series in y.

    Runs the full pipeline: generic F with N fixed psi-free insertions, the
    substitution t -> t + log(1+y) c1Sn, restriction to t = 0, and reduction of
    every c1Sn insertion by the divisor equation.
    """
    if 2 * g - 2 + N < 0:
        raise ValueError("need 2g - 2 + N >= 0")
    rho = S.picard_rank
    gamma = tuple(int(x) for x in gamma)
    if len(gamma) != rho:
        raise ValueError(f"gamma must have {rho} entries")
    fixed = tuple(Ins(f"gamma_{i + 1}", 0) for i in range(N))
    extra = 1  # room to read the factor off a base class with m' = 1
    ymax = y_order + extra
    order = Order(0, ymax, ())
    # F restricted to classes (gamma, m') with the weight on m only
    terms: dict[tuple[Bracket, Weight], Fraction] = {}
    for mp in range(ymax + 1):
        for k in range(0, ymax + 1):
            b = Bracket(g, gamma, mp, fixed + (T,) * k)
            terms[(b, ((0,) * rho, mp))] = Fraction(1, math.factorial(k))
    F = BracketSeries(order, rho, terms)
    mu = delpezzo_mu(ymax, rho)
    G = expand_substitution(F, mu).filter(lambda b, _w: b.t_count == 0)
    pairing = DivisorPairing(S)
    # collect: coefficient of <fixed>_{(gamma, m')} at y^m
    table: dict[tuple[int, int], Fraction] = {}
    for (b, w), c in G.items():
        reduced = reduce_divisor_fully({b: c}, "c1Sn", pairing)
        for b2, c2 in reduced.items():
            if b2.insertions != tuple(sorted(fixed)) or b2.gamma != gamma:
                raise InvariantViolation(f"unexpected residual bracket {b2}")
            _add_to(table, (b2.m, w[1]), c2)
    bases = sorted({mp for mp, _ in table})
    if not bases:
        # every base bracket is unstable or zero: the relation is vacuous
        return NovikovSeries.one(Order(0, y_order), 1)
    base = bases[0]
    if base > extra:
        raise InvariantViolation("no base bracket within reach of the requested order")
    factor = [table.get((base, base + j), Fraction(0)) for j in range(y_order + 1)]
    for mp in bases:
        for j in range(ymax - mp + 1):
            want = factor[j] if j <= y_order else None
            got = table.get((mp, mp + j), Fraction(0))
            if want is not None and got != want:
                raise InvariantViolation(
                    f"factor read from base m'={mp} differs at y^{j}: {got} != {want}"
                )
    return NovikovSeries.y_series(factor, Order(0, y_order), 1)


# ---------------------------------------------------------------------------
# checks against I-function data

@dataclass(frozen=True)
class CheckReport:
    status: str  # "pass" | "fail" | "incomplete"
    first: Optional[dict] = None
    missing: tuple[Bracket, ...] = ()
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "pass"


MARK = "@"
TMARK = "$"


def _strip(b: Bracket) -> Bracket:
    ins = tuple(Ins(i.label.lstrip(MARK + TMARK), i.psi) for i in b.insertions)
    return b.with_insertions(ins)


def _marked(b: Bracket) -> Ins:
    for i in b.insertions:
        if i.label.startswith(MARK):
            return Ins(i.label[len(MARK):], i.psi)
    raise InvariantViolation("bracket lost its marked insertion")


def _tdeg(b: Bracket) -> int:
    return sum(1 for i in b.insertions if i.label.startswith(TMARK))


def _t_options(t: Optional[ZLaurent], rho: int) -> list[Option]:
    zero = ((0,) * rho, 0)
    if t is None:
        return []
    out = []
    for (k, lab), c in t.items():
        if k < 0:
            raise ValueError("t(z) must have nonnegative powers of z")
        out.append(Option(Ins(TMARK + lab, k), zero, c, 1))
    return out


@dataclass(frozen=True)
class JSetup:
    """Shared data for the genus-0 J-function relation."""

    I: NovikovSeries
    dual: Mapping[str, str]
    order: Order
    t: Optional[ZLaurent] = None
    jmax: int = 2
    amax: int = 1
    effective: Callable[[Weight], bool] = default_effective

    @property
    def rho(self) -> int:
        return self.I.rho

    @property
    def mu(self) -> NovikovSeries:
        from .series import mu_from_I

        return mu_from_I(self.I).truncate(self.order)

    def zmin(self) -> int:
        return -(self.amax + 2)

    def nmax_inf(self) -> int:
        return 1 + self.jmax + self.order.y_max + max(self.order.gamma_max, 0)


def _J_inf_brackets(js: JSetup) -> BracketSeries:
    """sum q^beta/N! <@B psi^a, t^N>^oo with t -> t + mu(-psi), t concrete."""
    terms: dict[tuple[Bracket, Weight], Fraction] = {}
    nmax = js.nmax_inf()
    for beta in classes_in_window(js.order, js.rho, js.effective):
        for B in js.dual:
            for a in range(js.amax + 1):
                for n in range(0, nmax):
                    b = Bracket(0, beta[0], beta[1], (Ins(MARK + B, a),) + (T,) * n)
                    terms[(b, beta)] = Fraction(1, math.factorial(n))
    F = BracketSeries(js.order, js.rho, terms)
    options = _t_options(js.t, js.rho) + mu_options(js.mu)
    return substitute_slots(F, options, tcap=js.jmax)


def _J_0_brackets(js: JSetup) -> BracketSeries:
    """sum q^beta/N! <@B psi^a, t^N>^{0+} for N >= 1, t concrete."""
    terms: dict[tuple[Bracket, Weight], Fraction] = {}
    for beta in classes_in_window(js.order, js.rho, js.effective):
        for B in js.dual:
            for a in range(js.amax + 1):
                for n in range(1, js.jmax + 1):
                    b = Bracket(0, beta[0], beta[1], (Ins(MARK + B, a),) + (T,) * n)
                    terms[(b, beta)] = Fraction(1, math.factorial(n))
    F = BracketSeries(js.order, js.rho, terms)
    return substitute_slots(F, _t_options(js.t, js.rho), tcap=js.jmax)


Coef = dict[tuple[Weight, int, int, str], Fraction]  # (weight, tdeg, zpow, label)


def _assemble(
    js: JSetup,
    brackets: BracketSeries,
    values: Mapping[Bracket, Fraction],
    missing: set[Bracket],
) -> Coef:
    out: Coef = {}
    for (b, w), c in brackets.items():
        key = _strip(b)
        if key.is_unstable():
            continue
        if key not in values:
            missing.add(key)
            continue
        B, a = _marked(b)
        zpow = -a - 2
        if zpow < js.zmin():
            continue
        _add_to(out, (w, _tdeg(b), zpow, js.dual[B]), c * q(values[key]))
    return out


def _series_into(out: Coef, f: NovikovSeries, tdeg: int, zmin: int) -> None:
    for w, zl in f.items():
        for (k, lab), c in zl.items():
            if k >= zmin:
                _add_to(out, (w, tdeg, k, lab), c)


def _t_term(js: JSetup) -> NovikovSeries:
    zero = (0,) * js.rho
    if js.t is None:
        return NovikovSeries.zero(js.order, js.rho)
    return NovikovSeries(js.order, js.rho, {(zero, 0): js.t.substitute_z_sign().shift(-1)})


def j_sides(js: JSetup, values_inf: Mapping[Bracket, Fraction],
            values_0: Mapping[Bracket, Fraction]) -> tuple[Coef, Coef, set[Bracket]]:
    missing: set[Bracket] = set()
    lhs = _assemble(js, _J_inf_brackets(js), values_inf, missing)
    rhs = _assemble(js, _J_0_brackets(js), values_0, missing)
    tt = _t_term(js)
    _series_into(lhs, tt, 1, js.zmin())
    _series_into(rhs, tt, 1, js.zmin())
    mu = js.mu
    mu_over_z = mu.map(lambda f: f.shift(-1)) + NovikovSeries.one(js.order, js.rho)
    _series_into(lhs, mu_over_z, 0, js.zmin())
    _series_into(rhs, js.I.truncate(js.order), 0, js.zmin())
    return lhs, rhs, missing


def j_relation_check(js: JSetup, values_inf: Mapping[Bracket, Fraction],
                     values_0: Mapping[Bracket, Fraction]) -> CheckReport:
    """Compare J^oo(t + mu(-z)) with J^{0+}(t) coefficientwise.

    Coefficients are graded by the number of t insertions (up to ``jmax``) and
    by z down to z^{-(amax+2)}.  Missing bracket values yield 'incomplete'.
    """
    lhs, rhs, missing = j_sides(js, values_inf, values_0)
    if missing:
        ms = tuple(sorted(missing))
        return CheckReport("incomplete", None, ms, f"{len(ms)} bracket values missing")
    keys = sorted(set(lhs) | set(rhs), key=lambda k: (sum(k[0][0]), k[0], k[1], -k[2], k[3]))
    for k in keys:
        a, b = lhs.get(k, Fraction(0)), rhs.get(k, Fraction(0))
        if a != b:
            (gamma, m), tdeg, zpow, lab = k
            first = {"gamma": list(gamma), "m": m, "z": zpow, "label": lab,
                     "t_degree": tdeg, "lhs": a, "rhs": b}
            return CheckReport("fail", first, (), "J relation fails")
    return CheckReport("pass")


def synthesize_j_inputs(js: JSetup, rng: random.Random,
                        lo: int = -9, hi: int = 9) -> tuple[dict[Bracket, Fraction], dict[Bracket, Fraction]]:
    """Random oo bracket values and the unique completion satisfying the J relation.

    All oo brackets with at least two insertions are random; one-point brackets
    <B psi^a>^oo are solved from the z^{<=-2} part of I; 0+ brackets come from
    the all-walls formula.
    """
    if len(set(js.dual.values())) != len(js.dual):
        raise ValueError("dual map must be injective")
    Finf = _J_inf_brackets(js)
    values_inf: dict[Bracket, Fraction] = {}
    one_point: set[Bracket] = set()
    for (b, _w), _c in Finf.items():
        key = _strip(b)
        if key.is_unstable() or key in values_inf:
            continue
        if key.N == 1:
            one_point.add(key)
        else:
            values_inf[key] = Fraction(rng.randint(lo, hi), rng.randint(1, 4))
    # solve one-point values at tdeg 0 from the I relation
    for key in one_point:
        values_inf[key] = Fraction(0)
    lhs, rhs, _ = j_sides(js, values_inf, {})
    for key in sorted(one_point):
        (B, a) = key.insertions[0]
        w = key.beta
        slot = (w, 0, -a - 2, js.dual[B])
        target = rhs.get(slot, Fraction(0)) - lhs.get(slot, Fraction(0))
        values_inf[key] = target
    # 0+ values through the walls
    values_0: dict[Bracket, Fraction] = {}
    for (b, _w), _c in _J_0_brackets(js).items():
        key = _strip(b)
        if key in values_0 or key.is_unstable():
            continue
        total = Fraction(0)
        for b2, c2 in wallcross_bracket(key, js.mu, js.effective).items():
            if b2 not in values_inf:
                raise InvariantViolation(f"oo value for {b2} was not generated")
            total += c2 * values_inf[b2]
        values_0[key] = total
    return values_inf, values_0


def unstable_wall_check(I: NovikovSeries, pushforward: ZLaurent, beta: Weight) -> CheckReport:
    """Compare supplied ev_* values with [I]_{z <= -2, q^beta}."""
    expected = truncate_z_le(I[beta], -2)
    diff = expected - pushforward
    if diff.is_zero():
        return CheckReport("pass")
    (k, lab), _ = next(diff.items())
    first = {"gamma": list(beta[0]), "m": beta[1], "z": k, "label": lab,
             "expected": expected[(k, lab)], "supplied": pushforward[(k, lab)]}
    return CheckReport("fail", first, (), "pushforward differs from the z^{<=-2} truncation of I")


def semipositive_identities(
    I0: NovikovSeries,
    I1: NovikovSeries,
    values: Mapping[Bracket, RationalLike],
    dual: Mapping[str, str],
    divisors: Sequence[str],
    use_string: bool = False,
) -> CheckReport:
    """Check I_0^{-1} = 1 + sum q^beta <g_i, 1, g^i>_{0,3,beta} and the I_1 split.

    ``dual`` maps every basis label to its dual; ``divisors`` lists the H^2
    labels D_j.  With ``use_string`` missing brackets that carry a psi-free
    unit are evaluated by the string equation.
    """
    from .series import nov_inverse, nov_mul

    order = I0.order.meet(I1.order)
    rho = I0.rho
    missing: set[Bracket] = set()

    def val(b: Bracket) -> Fraction:
        if b in values:
            return q(values[b])
        if use_string and Ins("1", 0) in b.insertions:
            total = Fraction(0)
            for b2, c in apply_string(b).items():
                total += c * val(b2)
            return total
        missing.add(b)
        return Fraction(0)

    betas = [k for k in classes_in_window(order, rho) if k != ((0,) * rho, 0)]
    zero = (0,) * rho
    # (i)
    rhs_i: dict[Key, ZLaurent] = {(zero, 0): ZLaurent.one()}
    for beta in betas:
        s = Fraction(0)
        for lab, dlab in dual.items():
            s += val(Bracket(0, beta[0], beta[1], (Ins(lab, 0), Ins("1", 0), Ins(dlab, 0))))
        rhs_i[beta] = ZLaurent.const(s)
    inv = nov_inverse(I0.truncate(order))
    # (ii)
    f_over = {}
    for lab in ["pt"] + list(divisors):
        terms = {}
        for beta in betas:
            target = dual.get(lab, lab) if lab != "pt" else "pt"
            terms[beta] = ZLaurent.const(val(Bracket(0, beta[0], beta[1], (Ins(target, 0), Ins("1", 0)))))
        f_over[lab] = NovikovSeries(order, rho, terms)
    if missing:
        ms = tuple(sorted(missing))
        return CheckReport("incomplete", None, ms, f"{len(ms)} bracket values missing")
    want_i = NovikovSeries(order, rho, rhs_i)
    if inv != want_i:
        return CheckReport("fail", _first_diff(inv, want_i), (), "(i) fails")
    I0t = I0.truncate(order)
    predicted: dict[Key, ZLaurent] = {}
    for lab, s in f_over.items():
        f = nov_mul(s, I0t)
        out_lab = "1" if lab == "pt" else lab
        for key, zl in f.items():
            prev = predicted.get(key, ZLaurent())
            predicted[key] = prev + ZLaurent.const(zl.scalar(), out_lab)
    want_ii = NovikovSeries(order, rho, predicted)
    got_ii = I1.truncate(order)
    if got_ii != want_ii:
        return CheckReport("fail", _first_diff(got_ii, want_ii), (), "(ii) fails")
    return CheckReport("pass")


def _first_diff(a: NovikovSeries, b: NovikovSeries) -> dict:
    d = a - b
    (key, zl) = d.items()[0]
    (k, lab), c = next(zl.items())
    return {"gamma": list(key[0]), "m": key[1], "z": k, "label": lab, "difference": c}


# ---------------------------------------------------------------------------
# DT/PT composite

@dataclass(frozen=True)
class DTPTResult:
    route_a: BracketSeries
    route_b: BracketSeries

    @property
    def ok(self) -> bool:
        return self.route_a == self.route_b

    def first_difference(self) -> Optional[tuple[Bracket, Weight, Fraction, Fraction]]:
        diff = self.route_a - self.route_b
        for (b, w), _c in diff.items():
            return b, w, self.route_a[(b, w)], self.route_b[(b, w)]
        return None


def _scalar(f: NovikovSeries) -> NovikovSeries:
    for _k, zl in f.items():
        for (k, lab), _c in zl.items():
            if k != 0 or lab != "1":
                raise ValueError("I_0 must be a scalar series")
    return f


def dtpt_composite(
    F_inf: BracketSeries,
    I0: NovikovSeries,
    I1: NovikovSeries,
    I0s: NovikovSeries,
    I1s: NovikovSeries,
    g: int,
) -> DTPTResult:
    """Two routes to the perverse 0+ series from the common oo series.

    Route A: F^{0+}(t) = I0^{2-2g} F^oo((t + I1)/I0), then
    (I0/I0s)^{2g-2} F^{0+}((I0/I0s)(t + I1s) - I1).
    Route B: I0s^{2-2g} F^oo((t + I1s)/I0s).
    """
    from .series import nov_inverse, nov_mul, nov_pow

    if g == 1:
        raise ValueError("g = 1 carries an extra constant term in the dilaton shift and is excluded")
    for name, f in (("I0", I0), ("I0s", I0s)):
        if f.constant() != ZLaurent.one():
            raise ValueError(f"{name} must have constant term 1")
    order = F_inf.order
    I0, I0s = _scalar(I0.truncate(order)), _scalar(I0s.truncate(order))
    I1, I1s = I1.truncate(order), I1s.truncate(order)
    inv0, inv0s = nov_inverse(I0), nov_inverse(I0s)

    def std_to_zero(F: BracketSeries, a0: NovikovSeries, a0inv: NovikovSeries,
                    a1: NovikovSeries) -> BracketSeries:
        # a0^{2-2g} F((t + a1)/a0)
        G = substitute(F, a0inv, nov_mul(a1, a0inv))
        return G.times_series(nov_pow(a0, 2 - 2 * g))

    F0 = std_to_zero(F_inf, I0, inv0, I1)
    ratio = nov_mul(I0, inv0s)
    shift = nov_mul(ratio, I1s) - I1
    route_a = substitute(F0, ratio, shift).times_series(nov_pow(ratio, 2 * g - 2))
    route_b = std_to_zero(F_inf, I0s, inv0s, I1s)
    return DTPTResult(route_a, route_b)


# ---------------------------------------------------------------------------
# JSON

def ins_to_obj(i: Ins):
    return T_LABEL if i.is_t else {"label": i.label, "psi": i.psi}


def ins_from_obj(o) -> Ins:
    if o == T_LABEL:
        return T
    if isinstance(o, Mapping):
        lab = str(o["label"])
        if lab == T_LABEL:
            raise ValueError("'t' is reserved for the formal slot")
        return Ins(lab, int(o.get("psi", 0)))
    raise ValueError(f"bad insertion record {o!r}")


def bracket_to_obj(b: Bracket) -> dict:
    return {"g": b.g, "gamma": list(b.gamma), "m": b.m,
            "insertions": [ins_to_obj(i) for i in b.insertions]}


def bracket_from_obj(o: Mapping) -> Bracket:
    return Bracket(int(o["g"]), tuple(int(x) for x in o["gamma"]), int(o["m"]),
                   tuple(ins_from_obj(i) for i in o.get("insertions", [])))


def bseries_to_obj(F: BracketSeries) -> dict:
    terms = []
    for (b, w), c in F.items():
        terms.append({"bracket": bracket_to_obj(b), "gamma": list(w[0]), "m": w[1],
                      "coeff": to_json(c)})
    order = {"gamma_max": F.order.gamma_max, "y_max": F.order.y_max}
    if F.order.gamma_weight:
        order["gamma_weight"] = list(F.order.gamma_weight)
    out = {"order": order, "rho": F.rho, "mode": F.mode, "terms": terms}
    if F.nmax is not None:
        out["nmax"] = F.nmax
    return out


def bseries_from_obj(o: Mapping) -> BracketSeries:
    od = o["order"]
    order = Order(int(od["gamma_max"]), int(od["y_max"]), tuple(int(x) for x in od.get("gamma_weight", ())))
    terms: dict[tuple[Bracket, Weight], Fraction] = {}
    rho = o.get("rho")
    for t in o.get("terms", []):
        b = bracket_from_obj(t["bracket"])
        if rho is None:
            rho = len(b.gamma)
        w = (tuple(int(x) for x in t["gamma"]), int(t["m"]))
        _add_to(terms, (b, w), q(t["coeff"]))
    nmax = o.get("nmax")
    return BracketSeries(order, int(rho or 1), terms, None if nmax is None else int(nmax),
                         o.get("mode", "standard"))


def bseries_to_json(F: BracketSeries) -> str:
    return json.dumps(bseries_to_obj(F), sort_keys=True, indent=2)
