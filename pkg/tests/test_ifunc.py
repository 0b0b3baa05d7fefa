import math
from fractions import Fraction

import pytest
import sympy as sp

from qmwall.cohring import PRESETS
from qmwall.ifunc import (
    C1_LABELS,
    I0,
    I1,
    I_sharp_hilbn,
    I_sharp_n1,
    def_weights,
    euler_numerator,
    euler_ratio,
    obs_weights,
)
from qmwall.series import ZLaurent, log1p, mu_from_I

P2 = PRESETS["P2"]
z, c = sp.symbols("z c")


def sympy_ratio(m):
    """Oracle: expand prod_{j<m}(c - j z) / prod_{j<=m}(j z) modulo c^3."""
    num = sp.prod([c - j * z for j in range(m)])
    den = sp.prod([j * z for j in range(1, m + 1)])
    expr = sp.expand(num / den)
    out = {}
    for term in sp.Add.make_args(expr):
        coeff, rest = term.as_coeff_Mul()
        pc = sp.degree(rest, c) if rest.has(c) else 0
        if pc > 2:
            continue
        pz = sp.Poly(sp.together(rest / c ** pc)).as_expr()
        zp = sp.degree(sp.numer(pz), z) - sp.degree(sp.denom(pz), z)
        key = (int(zp), C1_LABELS[pc])
        out[key] = out.get(key, Fraction(0)) + Fraction(int(coeff.p), int(coeff.q))
    return ZLaurent(out)


def test_weights():
    assert [w.zmult for w in def_weights(3)] == [1, 2, 3]
    assert [(w.zmult, w.shift) for w in obs_weights(3)] == [(-2, 1), (-1, 1), (0, 1)]
    with pytest.raises(ValueError):
        def_weights(0)


def test_euler_ratio_two():
    assert euler_ratio(2) == ZLaurent({(-1, "c1"): Fraction(-1, 2), (-2, "c1^2"): Fraction(1, 2)})


@pytest.mark.parametrize("m", range(1, 9))
def test_euler_ratio_sympy_oracle(m):
    assert euler_ratio(m) == sympy_ratio(m)


@pytest.mark.parametrize("m", range(1, 13))
def test_residue_law(m):
    r = euler_ratio(m)
    assert r[(-1, "c1")] == Fraction((-1) ** (m - 1), m)
    assert r[(0, "1")] == 0
    # multiply back by prod (j z) = m! z^m
    back = r.shift(m).scale(math.factorial(m))
    assert back == euler_numerator(m)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_I_closed_form(n):
    I = I_sharp_hilbn(n, P2, 12)
    assert I0(I).constant() == ZLaurent.one()
    assert all(k == ((0,), 0) for k, _ in I0(I).items())
    coeffs = I1(I).y_coefficients("c1Sn", 0)
    assert coeffs[1:] == log1p(12).y_coefficients()[1:]


def test_I_n1_point_term():
    S = PRESETS["dP3"]
    I = I_sharp_n1(S, 4)
    # c1^2 term of euler_ratio(2) is 1/(2 z^2); integrates against K^2
    assert I[((0,) * S.picard_rank, 2)][(-2, "pt")] == Fraction(S.K2, 2)
    assert I_sharp_hilbn(2, S, 4)[((0,) * S.picard_rank, 2)][(-2, "pt")] == 0


def test_mu_of_del_pezzo_I():
    I = I_sharp_hilbn(2, P2, 6)
    mu = mu_from_I(I)
    assert mu.y_coefficients("c1Sn", 0) == log1p(6).y_coefficients()
    assert all(k >= 0 for _, f in mu.items() for k in f.zpowers())
    assert mu.z_part(1).is_zero()


def test_non_del_pezzo_rejected():
    with pytest.raises(ValueError):
        I_sharp_n1(PRESETS["rho1"], 3)
    with pytest.raises(ValueError):
        I_sharp_hilbn(0, P2, 3)
