"""Langton-ledger bookkeeping for base points.

A base point of a quasimap is resolved by a finite sequence of elementary
modifications along destabilising quotients Q^1, ..., Q^k of the central
fiber.  Each modification lowers the degree of L_1 and of L_beta = L_0 (x) L_1^m
by an amount computable from the numerics (rk, deg, chi) of Q^i alone.  This
module evaluates those drops, the resulting length of the point, and a
certified threshold for m beyond which every admissible drop is positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .cohring import ChernVector, SurfaceModel, chi_surface
from .rational import RationalLike, q


class LedgerError(ValueError):
    """A ledger violates the step invariants."""


@dataclass(frozen=True)
class QuotientData:
    rk: Fraction
    deg: Fraction
    chi: Fraction

    @classmethod
    def of(cls, rk: RationalLike, deg: RationalLike, chi: RationalLike) -> QuotientData:
        rk_q = q(rk)
        if rk_q < 0:
            raise ValueError("quotient rank must be nonnegative")
        return cls(rk_q, q(deg), q(chi))


@dataclass(frozen=True)
class LangtonLedger:
    steps: tuple[QuotientData, ...]
    v: ChernVector
    m: int

    def __post_init__(self) -> None:
        if isinstance(self.m, bool) or not isinstance(self.m, int) or self.m <= 0:
            raise ValueError("ledger exponent m must be a positive integer")

    def concat(self, other: LangtonLedger) -> LangtonLedger:
        if other.v != self.v or other.m != self.m:
            raise ValueError("can only concatenate ledgers for the same v and m")
        return LangtonLedger(self.steps + other.steps, self.v, self.m)


@dataclass(frozen=True)
class Interval:
    """A real interval with rational endpoints and explicit closedness."""

    lo: Fraction
    hi: Fraction
    lo_closed: bool
    hi_closed: bool

    def __contains__(self, x: object) -> bool:
        x = Fraction(x)  # type: ignore[arg-type]
        above = x >= self.lo if self.lo_closed else x > self.lo
        below = x <= self.hi if self.hi_closed else x < self.hi
        return above and below

    def integers(self) -> range:
        lo = math.ceil(self.lo)
        if not self.lo_closed and lo == self.lo:
            lo += 1
        hi = math.floor(self.hi)
        if not self.hi_closed and hi == self.hi:
            hi -= 1
        return range(lo, hi + 1)

    def __str__(self) -> str:
        left = "[" if self.lo_closed else "("
        right = "]" if self.hi_closed else ")"
        return f"{left}{self.lo}, {self.hi}{right}"


def _deg_v(v: ChernVector, S: SurfaceModel) -> Fraction:
    return S.deg(v.c1)


def step_drop_L1(Q: QuotientData, v: ChernVector, S: SurfaceModel) -> Fraction:
    """Decrease of L_1 . C caused by one modification along Q."""
    return _deg_v(v, S) * Q.rk - v.rk * Q.deg


def chi_term(Q: QuotientData, v: ChernVector, S: SurfaceModel) -> Fraction:
    return chi_surface(v, S) * Q.rk - v.rk * Q.chi


def step_drop_Lbeta(Q: QuotientData, v: ChernVector, m: int, S: SurfaceModel) -> Fraction:
    """Decrease of (L_0 (x) L_1^m) . C caused by one modification along Q."""
    return m * step_drop_L1(Q, v, S) + chi_term(Q, v, S)


def check_step(Q: QuotientData, L: LangtonLedger, S: SurfaceModel) -> str | None:
    """Return a reason string if the step cannot occur in a ledger, else None."""
    if Q.rk > L.v.rk:
        return f"quotient rank {Q.rk} exceeds rk(v) = {L.v.rk}"
    d1 = step_drop_L1(Q, L.v, S)
    if d1 < 0:
        return f"L1 drop {d1} is negative, so Q does not destabilise"
    if d1 == 0:
        c = chi_term(Q, L.v, S)
        if c <= 0:
            return f"zero slope drop needs a positive chi term, got {c}"
        return None
    total = step_drop_Lbeta(Q, L.v, L.m, S)
    if total <= 0:
        return f"L_beta drop {total} is not positive at m = {L.m}; m is below the threshold"
    return None


def length_of_point(L: LangtonLedger, S: SurfaceModel) -> Fraction:
    """Length of a base point: total L_beta drop along the ledger."""
    total = Fraction(0)
    for i, Q in enumerate(L.steps):
        reason = check_step(Q, L, S)
        if reason is not None:
            raise LedgerError(f"step {i}: {reason}")
        total += step_drop_Lbeta(Q, L.v, L.m, S)
    return total


def deg_bounds_Q(v: ChernVector, L1_C: RationalLike, S: SurfaceModel) -> Interval:
    """Uniform window for deg(Q^i) over all positive-drop steps."""
    L1_C = q(L1_C)
    if v.rk <= 0:
        raise ValueError("deg_bounds_Q needs rk(v) > 0")
    dv = _deg_v(v, S)
    if dv >= 0:
        return Interval(-L1_C / v.rk, dv, True, False)
    return Interval(dv - L1_C / v.rk, dv / v.rk, False, False)


# ---------------------------------------------------------------------------
# Bogomolov-type bound on ch_2

def _require_rho1(S: SurfaceModel) -> None:
    if S.picard_rank != 1:
        raise ValueError(
            "bogomolov_bound is only available for Picard rank 1; for rho > 1 the bound "
            "needs slope functions on a neighbourhood of O_S(1) in the ample cone, "
            "which is not implemented"
        )


def _piece_window(r: int, degF: Fraction, B: Fraction, inclusive: bool) -> Interval:
    # Degrees of HN factors of a rank r sheaf with mu_max < B (or <= B).
    if B >= 0:
        return Interval(degF - B * (r - 1), B * r, True, inclusive)
    return Interval(degF, B, True, inclusive)


def _A_prime(r: int, c1F: Sequence[RationalLike], B: Fraction, S: SurfaceModel,
             inclusive: bool) -> Fraction:
    _require_rho1(S)
    gen_deg = S.deg((Fraction(1),))
    gen_sq = Fraction(S.intersection_form[0][0])
    degF = S.deg(tuple(q(x) for x in c1F))
    win = _piece_window(r, degF, B, inclusive)
    # c1(gr) = a * generator with deg = a * gen_deg
    lo, hi = win.lo / gen_deg, win.hi / gen_deg
    if gen_deg < 0:
        lo, hi = hi, lo
    coeffs = Interval(lo, hi, True, True).integers()
    coeffs = [a for a in coeffs if a * gen_deg in win]
    if not coeffs:
        return Fraction(1)
    return max(a * a * gen_sq for a in coeffs) + 1


def bogomolov_constant(r: int, c1F: Sequence[RationalLike], B: RationalLike,
                       S: SurfaceModel, inclusive: bool = False) -> Fraction:
    """Per-factor constant A with ch_2(gr_i) < A for every HN factor."""
    if isinstance(r, bool) or not isinstance(r, int) or r <= 0:
        raise ValueError("rank must be a positive integer")
    Ap = _A_prime(r, c1F, q(B), S, inclusive)
    return Ap if Ap >= 0 else Ap / (2 * r)


def bogomolov_bound(r: int, c1F: Sequence[RationalLike], B: RationalLike,
                    S: SurfaceModel, inclusive: bool = False) -> Fraction:
    """Upper bound: ch_2(F) < r * A for F torsion free, rank r, mu_max(F) < B.

    With ``inclusive=True`` the hypothesis is relaxed to mu_max(F) <= B.
    """
    return r * bogomolov_constant(r, c1F, B, S, inclusive)


def chi_bound(rkQ: int, c1Q: Sequence[RationalLike], B: RationalLike, S: SurfaceModel) -> Fraction:
    """Strict upper bound for chi(Q) when mu_max(Q) <= B."""
    c1 = tuple(q(x) for x in c1Q)
    return bogomolov_bound(rkQ, c1, B, S, inclusive=True) + S.pair(c1, S.c1S) / 2 + rkQ * S.chiO


def _c1_candidates(win: Interval, S: SurfaceModel) -> list[tuple[Fraction, ...]]:
    gen_deg = S.deg((Fraction(1),))
    lo, hi = win.lo / gen_deg, win.hi / gen_deg
    if gen_deg < 0:
        lo, hi = hi, lo
    return [
        (Fraction(a),)
        for a in Interval(lo, hi, True, True).integers()
        if a * gen_deg in win
    ]


def _quotient_ranks(v: ChernVector) -> range:
    return range(1, math.ceil(v.rk))


def m0_threshold(v: ChernVector, L1_C: RationalLike, m_ample: int, S: SurfaceModel) -> int:
    """Certified (not necessarily minimal) m beyond which every positive-slope
    step of a ledger for v has positive L_beta drop.

    Zero-slope steps have positive drop for every m.  A positive-slope step
    is a slope-destabilising quotient whose kernel has positive rank, so only
    1 <= rk(Q) < rk(v) is scanned; for rank-1 v this leaves nothing.
    """
    L1_C = q(L1_C)
    if isinstance(m_ample, bool) or not isinstance(m_ample, int) or m_ample <= 0:
        raise ValueError("m_ample must be a positive integer")
    if v.rk <= 0:
        raise ValueError("m0_threshold needs rk(v) > 0")
    _require_rho1(S)
    if L1_C <= 0:
        return m_ample
    win = deg_bounds_Q(v, L1_C, S)
    mu_v = _deg_v(v, S) / v.rk
    cands = _c1_candidates(win, S)
    if not cands:
        return m_ample
    ranks = _quotient_ranks(v)
    if not ranks:
        return m_ample
    A_chi = max(chi_bound(r, c1, mu_v, S) for r in ranks for c1 in cands)
    chi_v = chi_surface(v, S)
    if chi_v >= 0:
        T = A_chi * v.rk - chi_v
    else:
        T = A_chi * v.rk - chi_v * v.rk
    return max(m_ample, math.floor(T) + 1)


def brute_force_quotients(
    v: ChernVector, L1_C: RationalLike, S: SurfaceModel, depth: int = 3
) -> Iterable[QuotientData]:
    """Integral quotient numerics a positive-slope step could have.

    Ranks 1..rk(v)-1, integral c1 in the uniform degree window with positive
    slope drop, and ch_2 from the Bogomolov bound downwards in ``depth`` unit
    steps (lower ch_2 only makes the drop larger).
    """
    _require_rho1(S)
    L1_C = q(L1_C)
    win = deg_bounds_Q(v, L1_C, S)
    mu_v = _deg_v(v, S) / v.rk
    for r in _quotient_ranks(v):
        for c1 in _c1_candidates(win, S):
            degQ = S.deg(c1)
            Q0 = QuotientData(Fraction(r), degQ, Fraction(0))
            if step_drop_L1(Q0, v, S) <= 0:
                continue
            bound = bogomolov_bound(r, c1, mu_v, S, inclusive=True)
            base = S.pair(c1, c1) / 2
            # ch_2 lies in c1^2/2 + Z and strictly below the bound
            top = base + math.ceil(bound - base) - 1
            for k in range(depth):
                ch2 = top - k
                chi = ch2 + S.pair(c1, S.c1S) / 2 + r * S.chiO
                yield QuotientData(Fraction(r), degQ, chi)
