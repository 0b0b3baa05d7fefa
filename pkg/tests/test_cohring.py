import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from qmwall.cohring import (
    PRESETS,
    ChernVector,
    DegreeClass,
    KClassRep,
    SurfaceModel,
    chi_pair,
    chi_surface,
    chi_u0,
    chi_u1,
    det_degree,
    hilb_class,
    is_del_pezzo,
    load_surface,
    mult_k,
    surface_from_mapping,
    u_class,
)

P2 = PRESETS["P2"]
P1P1 = PRESETS["P1xP1"]


def tup(v):
    return (v.rk, tuple(v.c1), v.ch2)


def line(S, a):
    """ch(O(a)) for a divisor class a."""
    a = tuple(Fraction(x) for x in a)
    return ChernVector(Fraction(1), a, S.pair(a, a) / 2)


# closed-form Euler characteristics of line bundles, independent of the HRR code
def chi_P2(a):
    return Fraction((a + 1) * (a + 2), 2)


def chi_P1P1(a, b):
    return Fraction((a + 1) * (b + 1))


def test_preset_standard_values():
    assert P2.picard_rank == 1
    assert P2.d == 1
    assert P2.c1S == (3 * P2.hyperplane[0],)
    assert P2.chiO == 1
    assert P2.K2 == 9
    assert P1P1.K2 == 8
    for k in range(1, 9):
        S = PRESETS[f"dP{k}"]
        assert S.K2 == 9 - k
        assert S.d > 0
    for S in PRESETS.values():
        assert chi_surface(ChernVector.of(1, S.zero(), 0), S) == S.chiO


def test_surface_validation():
    with pytest.raises(ValueError):
        SurfaceModel("bad", ((1, 2), (3, 1)), (Fraction(0), Fraction(0)), Fraction(1), (Fraction(1), Fraction(0)))
    with pytest.raises(ValueError):
        SurfaceModel("neg", ((-1,),), (Fraction(0),), Fraction(1), (Fraction(1),))


def test_chi_surface_examples():
    assert chi_surface(ChernVector.of(1, [0], 0), P2) == 1
    for S in PRESETS.values():
        assert chi_surface(KClassRep.point(S), S) == 1
    for n in range(6):
        assert chi_surface(ChernVector.of(1, [0], -n), P2) == 1 - n


@pytest.mark.parametrize("a", range(-4, 5))
def test_chi_line_bundles_P2(a):
    assert chi_surface(line(P2, [a]), P2) == chi_P2(a)


@pytest.mark.parametrize("a,b", [(a, b) for a in range(-2, 3) for b in range(-2, 3)])
def test_chi_pair_line_bundles_P1P1(a, b):
    # O(a, b) . O(1, -1) = O(a + 1, b - 1)
    u = line(P1P1, [b, a])  # NS basis (f1, f2) with f1.f2 = 1: O(a,b) = a f2 + b f1
    v = line(P1P1, [-1, 1])
    assert chi_pair(u, v, P1P1) == chi_P1P1(a + 1, b - 1)


def test_mult_k_examples():
    v = ChernVector.of(3, [2], 5)
    assert tup(mult_k(ChernVector.of(1, [0], 0), v, P2)) == tup(v)
    assert tup(mult_k(KClassRep.point(P2), v, P2)) == (0, (0,), 3)
    assert tup(mult_k(KClassRep.hyperplane(P2), ChernVector.of(2, [0], 0), P2)) == (0, (2,), -1)


def test_hyperplane_class():
    assert tup(KClassRep.hyperplane(P2)) == tup(ChernVector.of(0, [1], Fraction(-1, 2)))
    assert tup(KClassRep.point(P2)) == tup(ChernVector.of(0, [0], 1))


def test_chi_pair_examples():
    x = KClassRep.point(P2)
    for n in range(5):
        assert chi_pair(x, hilb_class(n, P2), P2) == 1
    assert chi_pair(x, ChernVector.of(4, [7], -3), P2) == 4


def test_u_class_examples():
    for n in range(5):
        v = hilb_class(n, P2)
        u0 = u_class(v, 0, P2)
        assert tup(u0) == (-1, (0,), 1 - n)
    v = ChernVector.of(1, [0], 0)
    u1 = u_class(v, 1, P2)
    # chi(O_H) on P2 is 1
    assert tup(u1) == (0, (-1,), Fraction(1, 2) + 1)
    tors = ChernVector.of(0, [2], 1)
    for i in (0, 1):
        u = u_class(tors, i, P2)
        assert u.rk == 0 and u.c1 == (0,)


def test_u_class_rejects_index():
    with pytest.raises(ValueError):
        u_class(hilb_class(1, P2), 2, P2)


def test_det_degree_examples():
    beta = DegreeClass.of(0, [2], 5)
    assert det_degree(KClassRep.point(P2), beta, P2) == 0
    # O_S pairs to m + gamma . c1S / 2
    for g, m in [(0, 0), (1, 0), (2, 3), (-1, 4)]:
        b = DegreeClass.of(0, [g], m)
        assert det_degree(KClassRep.structure_sheaf(P2), b, P2) == m + Fraction(3 * g, 2)


def test_chi_u1_examples():
    v = ChernVector.of(2, [3], 0)
    B = ChernVector.of(5, [4], 0)
    assert chi_u1(v, B, P2) == 7
    assert chi_u1(v, v, P2) == 0
    assert chi_u0(v, v, P2) == 0
    n = 4
    assert chi_u0(hilb_class(n, P2), KClassRep.point(P2), P2) == -1


def _rand_chern(rng, S, lo=-6, hi=6):
    return ChernVector.of(rng.randint(0, 4), [rng.randint(lo, hi) for _ in range(S.picard_rank)],
                          Fraction(rng.randint(lo, hi), rng.choice([1, 2])))


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_orthogonality(name):
    S = PRESETS[name]
    rng = random.Random(name)
    for _ in range(100):
        v = _rand_chern(rng, S)
        for i in (0, 1):
            assert chi_pair(u_class(v, i, S), v, S) == 0


@settings(max_examples=60, deadline=None)
@given(
    st.integers(-5, 5), st.integers(-5, 5), st.integers(-5, 5),
    st.integers(-5, 5), st.integers(-5, 5), st.integers(-5, 5),
    st.fractions(max_denominator=6),
)
def test_det_degree_bilinear(r1, c1, s1, r2, c2, s2, a):
    u = ChernVector.of(r1, [c1], s1)
    w = ChernVector.of(r2, [c2], s2)
    beta = DegreeClass.of(0, [c2 - c1], s1 + s2)
    beta2 = DegreeClass.of(r1, [s2], c1)
    lhs = det_degree(u.scale(a) + w, beta, P2)
    assert lhs == a * det_degree(u, beta, P2) + det_degree(w, beta, P2)
    assert det_degree(u, beta.scale(a) + beta2, P2) == a * det_degree(u, beta, P2) + det_degree(u, beta2, P2)


def test_curve_class_convention():
    b = DegreeClass.from_curve_class([2], 3)
    assert b.gamma == (2,) and b.m == 3
    assert tup(b.as_chern()) == (0, (-2,), -3)


def test_del_pezzo_predicate():
    assert is_del_pezzo(P2) and is_del_pezzo(PRESETS["dP8"])
    assert not is_del_pezzo(PRESETS["rho1"])


def test_load_surface_toml(tmp_path):
    p = tmp_path / "cubic.toml"
    p.write_text(
        'picard_rank = 1\nintersection_form = [[3]]\nc1S = ["0"]\nchiO = 2\nhyperplane = [1]\n'
    )
    S = load_surface(str(p))
    assert S.d == 3 and S.chiO == 2 and S.name == "cubic"
    assert load_surface("P2") is P2
    with pytest.raises(ValueError):
        load_surface(str(tmp_path / "missing.toml"))


def test_surface_from_mapping_errors():
    with pytest.raises(ValueError):
        surface_from_mapping({"picard_rank": 1, "c1S": [3], "chiO": 1, "hyperplane": [1]})
    with pytest.raises(ValueError):
        surface_from_mapping({"picard_rank": 2, "intersection_form": [1], "c1S": [3, 0],
                              "chiO": 1, "hyperplane": [1, 0]})
