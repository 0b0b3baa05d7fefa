"""The eleven acceptance criteria, one test each.

Every test records a single PASS/FAIL line (shown in the pytest terminal
summary, or printed when this file is run as a script) and then asserts.
"""

import io
import itertools
import math
import random
import time
from fractions import Fraction
from pathlib import Path

import pytest

from conftest import ACCEPTANCE_LINES
from oracles import chi_P2, graph_family, max_ch2_P2
from qmwall import cli
from qmwall.cohring import (
    PRESETS,
    ChernVector,
    DegreeClass,
    KClassRep,
    chi_pair,
    chi_u0,
    chi_u1,
    det_degree,
    hilb_class,
    u_class,
)
from qmwall.detline import QuotientData, deg_bounds_Q, m0_threshold, step_drop_L1, step_drop_Lbeta
from qmwall.ifunc import I0, I1, I_sharp_hilbn, euler_ratio
from qmwall.polappx import (
    Component,
    Instance,
    PolarizedProduct,
    SheafNumerics,
    bounds_check,
    bounds_lhs,
    n0_search,
    nonsep_term,
    sep_terms,
    slope,
    total_at,
)
from qmwall.qstab import Epsilon, chamber_bounds, graph_from_mapping, is_epsilon_stable, vdim, walls
from qmwall.series import NovikovSeries, Order, ZLaurent
from qmwall.wallcross import (
    JSetup,
    cross_all_walls,
    delpezzo_specialize,
    expand_substitution,
    generic_F,
    Ins,
    j_relation_check,
    synthesize_j_inputs,
)

P2 = PRESETS["P2"]


def record(n, ok, detail, elapsed=None):
    t = f" [{elapsed:.2f}s]" if elapsed is not None else ""
    ACCEPTANCE_LINES[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}{t}"
    print(ACCEPTANCE_LINES[n])


def log1p_coeff(m):
    return Fraction((-1) ** (m - 1), m)


# 1 -------------------------------------------------------------------------

def test_criterion_01_ifunction_closed_form():
    t0 = time.perf_counter()
    bad = []
    for n in (1, 2, 3):
        I = I_sharp_hilbn(n, P2, 12)
        i0 = I0(I)
        if i0 != NovikovSeries.one(i0.order, i0.rho):
            bad.append((n, "I0"))
        i1 = I1(I)
        for m in range(0, 13):
            want = ZLaurent.const(log1p_coeff(m), "c1Sn") if m else ZLaurent({})
            if i1[((0,), m)] != want:
                bad.append((n, m))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 1
    record(1, ok, f"I0 = 1 and I1 = log(1+y) c1Sn for n = 1, 2, 3 to y^12; mismatches: {bad}", dt)
    assert ok


# 2 -------------------------------------------------------------------------

def _numerator_oracle(m):
    """prod_{j<m} (c1 - j z) mod c1^3 as {(zpow, c1pow): coeff}."""
    poly = {(0, 0): Fraction(1)}
    for j in range(m):
        nxt = {}
        for (zp, cp), v in poly.items():
            for (dz, dc), w in (((1, 0), Fraction(-j)), ((0, 1), Fraction(1))):
                if cp + dc > 2 or w == 0:
                    continue
                key = (zp + dz, cp + dc)
                nxt[key] = nxt.get(key, 0) + v * w
        poly = {k: v for k, v in nxt.items() if v}
    return ZLaurent({(zp, ("1", "c1", "c1^2")[cp]): v for (zp, cp), v in poly.items()})


def test_criterion_02_residue_law():
    t0 = time.perf_counter()
    bad = []
    for m in range(1, 13):
        r = euler_ratio(m)
        if r[(-1, "c1")] != log1p_coeff(m):
            bad.append((m, "residue"))
        if r.shift(m).scale(math.factorial(m)) != _numerator_oracle(m):
            bad.append((m, "numerator"))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 1
    record(2, ok, f"z^-1 c1 residue and numerator for m <= 12; mismatches: {bad}", dt)
    assert ok


# 3 -------------------------------------------------------------------------

def test_criterion_03_del_pezzo_factor():
    t0 = time.perf_counter()
    cases = [
        (P2, (0,)),
        (PRESETS["dP8"], (0, 1, 0, 0, 0, 0, 0, 0, 0)),
        (PRESETS["P1xP1"], (1, 0)),
        (P2, (1,)),
        (P2, (2,)),
        (P2, (3,)),
    ]
    bad = []
    seen = []
    for S, gamma in cases:
        a = S.pair(gamma, S.c1S)
        seen.append(int(a))
        got = delpezzo_specialize(0, 3, gamma, 10, S).y_coefficients()
        got += [0] * (11 - len(got))
        if got != [math.comb(int(a), j) for j in range(11)]:
            bad.append((S.name, gamma))
    dt = time.perf_counter() - t0
    ok = not bad and sorted(seen) == [0, 1, 2, 3, 6, 9] and dt < 5
    record(3, ok, f"(1+y)^(c1.gamma) to y^10 for c1.gamma in {sorted(seen)}; mismatches: {bad}", dt)
    assert ok


# 4 -------------------------------------------------------------------------

LABELS = ["1", "c1Sn", "pt"]


def _random_fixture(rng):
    rho = rng.choice([1, 2])
    d = rng.randint(1, 5)
    g = rng.choice([0, 1, 2])
    gm = rng.randint(0, d)
    order = Order(gm, d - gm)
    keys = [
        (gamma, m)
        for gamma in itertools.product(range(order.gamma_max + 1), repeat=rho)
        for m in range(order.y_max + 1)
        if order.keeps((gamma, m)) and (any(gamma) or m)
    ]
    mu_terms = {}
    for key in rng.sample(keys, k=min(len(keys), rng.randint(1, 4))):
        zl = {}
        for _ in range(rng.randint(1, 2)):
            zl[(rng.randint(0, 2), rng.choice(LABELS))] = Fraction(rng.randint(-5, 5) or 1, rng.randint(1, 4))
        mu_terms[key] = ZLaurent(zl)
    mu = NovikovSeries(order, rho, mu_terms)
    nmax = 5 if d > 3 else 6
    # in genus 0 two fixed insertions keep 2g - 2 + N > 0 on every bracket that meets a wall
    nfixed = (2,) if g == 0 else (0, 1)
    F = None
    for _ in range(rng.randint(1, 2)):
        fixed = tuple(Ins(rng.choice(LABELS), rng.randint(0, 2)) for _ in range(rng.choice(nfixed)))
        part = generic_F(g, order, rho, nmax, fixed).scale(Fraction(rng.randint(1, 9), rng.randint(1, 5)))
        F = part if F is None else F + part
    return F, mu, d


def test_criterion_04_exponential_formula():
    t0 = time.perf_counter()
    rng = random.Random(2024)
    bad = []
    sizes = []
    moved = 0
    for i in range(10):
        F, mu, d = _random_fixture(rng)
        A = cross_all_walls(F, mu, d)
        B = expand_substitution(F, mu)
        sizes.append((d, len(B)))
        moved += A != F
        if A != B:
            bad.append(i)
            continue
        # scalar evaluation on random oo values as a second reading
        vals = {}
        total_a = total_b = Fraction(0)
        for (b, _w), c in A.items():
            vals.setdefault(b, Fraction(rng.randint(-9, 9), rng.randint(1, 5)))
            total_a += c * vals[b]
        for (b, _w), c in B.items():
            total_b += c * vals.get(b, Fraction(0))
        if total_a != total_b:
            bad.append(i)
    dt = time.perf_counter() - t0
    ok = not bad and moved >= 8 and dt < 30
    record(4, ok, f"walls == substitution on 10 random fixtures, (d, terms) = {sizes}, {moved} with corrections; "
                  f"mismatches: {bad}", dt)
    assert ok


# 5 -------------------------------------------------------------------------

DUAL = {"1": "pt", "pt": "1", "c1Sn": "c1Sn"}


def test_criterion_05_j_relation():
    t0 = time.perf_counter()
    bad = []
    for y in range(1, 9):
        rng = random.Random(100 + y)
        js = JSetup(I_sharp_hilbn(1, P2, y), DUAL, Order(0, y), t=ZLaurent.const(1, "c1Sn"), jmax=2, amax=1)
        vi, v0 = synthesize_j_inputs(js, rng)
        if not j_relation_check(js, vi, v0).ok:
            bad.append((y, "consistent"))
        for side in ("0", "inf"):
            vals = dict(v0 if side == "0" else vi)
            key = rng.choice(sorted(vals))
            vals[key] += Fraction(1, 7)
            rep = j_relation_check(js, vi, vals) if side == "0" else j_relation_check(js, vals, v0)
            if rep.status != "fail":
                bad.append((y, side))
    dt = time.perf_counter() - t0
    ok = not bad
    record(5, ok, f"consistent inputs pass and single perturbations fail for y-order 1..8; problems: {bad}", dt)
    assert ok


# 6 -------------------------------------------------------------------------

def _rand_chern(rng, S):
    return ChernVector.of(rng.randint(-4, 4), [rng.randint(-9, 9) for _ in range(S.picard_rank)], rng.randint(-9, 9))


def test_criterion_06_grr_consistency():
    t0 = time.perf_counter()
    bad = []
    for name, S in sorted(PRESETS.items()):
        rng = random.Random(name)
        for _ in range(1000):
            v, B = _rand_chern(rng, S), _rand_chern(rng, S)
            if chi_u1(v, B, S) != chi_pair(u_class(v, 1, S), B, S):
                bad.append((name, "u1"))
            if chi_u0(v, B, S) != chi_pair(u_class(v, 0, S), B, S):
                bad.append((name, "u0"))
        for _ in range(1000):
            u, w = _rand_chern(rng, S), _rand_chern(rng, S)
            rb = lambda: DegreeClass.of(rng.randint(-4, 4), [rng.randint(-9, 9) for _ in range(S.picard_rank)],  # noqa: E731
                                        rng.randint(-9, 9))
            b1, b2 = rb(), rb()
            a, c = rng.randint(-7, 7), rng.randint(-7, 7)
            if det_degree(u.scale(a) + w.scale(c), b1, S) != a * det_degree(u, b1, S) + c * det_degree(w, b1, S):
                bad.append((name, "left"))
            if det_degree(u, b1.scale(a) + b2.scale(c), S) != a * det_degree(u, b1, S) + c * det_degree(u, b2, S):
                bad.append((name, "right"))
    dt = time.perf_counter() - t0
    ok = not bad
    record(6, ok, f"chi_u0/chi_u1 vs chi_pair(u_class) and det_degree bilinearity, {len(PRESETS)} presets x 1000; "
                  f"failures: {len(bad)}", dt)
    assert ok


# 7 -------------------------------------------------------------------------

def _curve(gamma):
    return DegreeClass.from_curve_class(gamma, 0)


# (surface, v, degree class, g, N, dimM, hand value)
VDIM_TABLE = [
    ("P2", hilb_class(2, P2), _curve([1]), 0, 3, 4, 7),  # 3 + 1 + 3
    ("P2", hilb_class(2, P2), _curve([0]), 1, 0, 4, 0),
    ("P2", hilb_class(3, P2), _curve([2]), 0, 0, 6, 9),  # 6 + 3
    ("P2", hilb_class(1, P2), _curve([0]), 2, 1, 2, 2),  # (-1)(-1) + 1
    ("P1xP1", None, _curve([1, 0]), 0, 0, 4, 3),  # c1.f = 2, plus 1
    ("P1xP1", None, _curve([1, 1]), 0, 2, 4, 7),  # 4 + 1 + 2
    ("dP3", None, _curve([1, 0, 0, 0]), 0, 0, 2, 2),  # c1.H = 3, minus 1
    ("dP3", None, _curve([0, 1, 0, 0]), 1, 2, 2, 3),  # c1.E = 1, plus 2
    ("P2", ChernVector.of(2, [1], 0), _curve([1]), 0, 0, 4, 7),  # 2 * 3 + 1
    ("P2", ChernVector.of(1, [2], 0), DegreeClass.of(-1, [-1], 0), 0, 0, 5, -1),  # 3 - 6 + 2
    ("P2", hilb_class(5, P2), _curve([3]), 3, 4, 10, -1),  # 9 - 14 + 4
    ("dP8", None, _curve([1, 0, 0, 0, 0, 0, 0, 0, 0]), 0, 1, 4, 5),  # 3 + 1 + 1
]


def test_criterion_07_chi_gate_and_vdim():
    t0 = time.perf_counter()
    bad = []
    for name, S in sorted(PRESETS.items()):
        x = KClassRep.point(S)
        for n in range(21):
            if chi_pair(x, hilb_class(n, S), S) != 1:
                bad.append((name, n))
    for i, (name, v, beta, g, N, dimM, want) in enumerate(VDIM_TABLE):
        S = PRESETS[name]
        v = v if v is not None else hilb_class(2, S)
        if vdim(v, beta, S, g, N, dimM) != want:
            bad.append(("vdim", i))
    dt = time.perf_counter() - t0
    ok = not bad and len(VDIM_TABLE) == 12
    record(7, ok, f"chi([O_x], I_Z) = 1 for n <= 20 on all presets and 12 vdim spot values; failures: {bad}", dt)
    assert ok


# 8 -------------------------------------------------------------------------

def _samples(i, d, count=10):
    lo, hi = chamber_bounds(i, d)
    if hi is None:
        return [lo + 1 + Fraction(j, 3) for j in range(count)]
    return [lo + (hi - lo) * Fraction(j, count + 1) for j in range(1, count + 1)]


def _has_rational_tail(data):
    verts = data["vertices"]
    valence = [0] * len(verts)
    for a, b in data["edges"]:
        valence[a] += 1
        valence[b] += 1
    return any(v["genus"] == 0 and v["markings"] + valence[i] == 1 for i, v in enumerate(verts))


def _has_base_point(data):
    return any(v["base_points"] for v in data["vertices"])


def test_criterion_08_stability_chambers():
    t0 = time.perf_counter()
    fam = graph_family(6)
    bad = []
    for idx, data in enumerate(fam):
        G = graph_from_mapping(data)
        d = G.total_degree
        verdicts = []
        for i in range(len(walls(d)) + 1):
            vs = {bool(is_epsilon_stable(G, Epsilon.finite(e))) for e in _samples(i, d)}
            if len(vs) != 1:
                bad.append((idx, "chamber", i))
            verdicts.append(vs.pop())
        zp = bool(is_epsilon_stable(G, Epsilon.zero_plus()))
        inf = bool(is_epsilon_stable(G, Epsilon.infinity()))
        if zp != verdicts[0] or inf != verdicts[-1]:
            bad.append((idx, "ends"))
        if _has_rational_tail(data) and zp:
            bad.append((idx, "tail at 0+"))
        if _has_base_point(data) and inf:
            bad.append((idx, "base point at inf"))
        # any flip sits at a wall: just below and just above the wall match the chambers
        for i, w in enumerate(sorted(walls(d))):
            delta = Fraction(1, 10 ** 6)
            below = bool(is_epsilon_stable(G, Epsilon.finite(w - delta)))
            above = bool(is_epsilon_stable(G, Epsilon.finite(w + delta)))
            if below != verdicts[i] or above != verdicts[i + 1]:
                bad.append((idx, "wall", w))
    dt = time.perf_counter() - t0
    ok = not bad and len(fam) >= 200
    record(8, ok, f"{len(fam)} graphs of degree <= 6: constant on chambers, flips only at walls, "
                  f"0+ and oo exclusions; failures: {bad[:5]}", dt)
    assert ok


# 9 -------------------------------------------------------------------------

def test_criterion_09_threshold_soundness():
    t0 = time.perf_counter()
    bad = []
    checked = 0
    for r in (1, 2, 3):
        for a in range(-5, 6):
            for k in range(3):
                base = Fraction(a * a, 2)
                v = ChernVector.of(r, [a], base - k)
                mu_v = Fraction(a, r)
                for L1 in range(0, 6):
                    m0 = m0_threshold(v, L1, 1, P2)
                    win = deg_bounds_Q(v, L1, P2)
                    for rq in range(1, r):
                        for aq in win.integers():
                            if step_drop_L1(QuotientData.of(rq, aq, 0), v, P2) <= 0:
                                continue
                            # a quotient of the kernel-side slope: mu_max below mu(v)
                            top = max_ch2_P2(rq, aq, mu_v, True)
                            if top is None:
                                continue
                            for c in range(4):
                                Q = QuotientData.of(rq, aq, chi_P2(rq, aq, top - c))
                                checked += 1
                                if step_drop_Lbeta(Q, v, m0, P2) <= 0:
                                    bad.append((r, a, k, L1, rq, aq, c))
    dt = time.perf_counter() - t0
    ok = not bad and checked > 0 and dt < 60
    record(9, ok, f"{checked} brute-force quotient data on P2, rank <= 3, |deg| <= 5: drop > 0 at m0; "
                  f"failures: {bad[:5]}", dt)
    assert ok


# 10 ------------------------------------------------------------------------

SN = SheafNumerics.of
SURFACES = ["P2", "P1xP1", "dP3", "dP5", "dP8", "rho1"]


def _destab_pair(rng, fF):
    F = SN(2, fF, rng.randint(-100, 100))
    lo = fF // 2 + 1  # 2 deg_f(G) > deg_f(F)
    G = SN(1, rng.randint(lo, min(100, lo + 40)), rng.randint(-100, 100))
    return F, G


def _random_instance(rng, node):
    S = PRESETS[rng.choice(SURFACES)]
    n_comp = 2 if node == "separating" else 1
    comps = tuple(Component(rng.randint(0, 5), rng.randint(1, 6)) for _ in range(n_comp))
    X = PolarizedProduct(S, comps, node)
    fF = rng.randint(-100, 99)  # the same fiber component on every piece
    pairs = [_destab_pair(rng, fF) for _ in range(n_comp)]
    return X, Instance(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))


def _first_negative(G, F, d):
    n = 1
    while bounds_lhs(G, F, n, d) >= 0:
        n += 1
    return n


def _check_instance(X, inst):
    problems = []
    K = [_first_negative(G, F, X.d) for G, F in zip(inst.G, inst.F)]
    for G, F, Ki in zip(inst.G, inst.F, K):
        if not all(bounds_check(G, F, n, Ki, X.d) for n in range(Ki, Ki + 5)):
            problems.append("bounds_check")
    res = {mode: n0_search([inst], X, K, mode) for mode in ("paper", "oracle")}
    if not all(r.feasible for r in res.values()):
        return problems + ["infeasible"]
    if res["paper"].n0 != res["oracle"].n0:
        problems.append("n0 differs between modes")
    n0 = res["paper"].n0
    for mode in ("paper", "oracle"):
        for n in range(n0, n0 + 4):
            if X.node_structure == "nonseparating":
                val = nonsep_term(inst.G[0], inst.F[0], X, n * X.components[0].k, mode)
            elif X.node_structure == "separating":
                ks = [n * c.k for c in X.components]
                val = sep_terms(*inst.G, *inst.F, X, ks[0], ks[1], mode).total
            else:
                val = total_at(inst, X, n, mode)
            if val >= 0:
                problems.append(f"not negative at n = {n} ({mode})")
        if n0 > 1 and total_at(inst, X, n0 - 1, mode) < 0:
            problems.append(f"not minimal ({mode})")
    for n in range(1, n0 + 4):
        sp, so = total_at(inst, X, n, "paper"), total_at(inst, X, n, "oracle")
        if (sp > 0) - (sp < 0) != (so > 0) - (so < 0):
            problems.append(f"sign verdicts differ at n = {n}")
    for i, (G, F) in enumerate(zip(inst.G, inst.F)):
        dp = slope(F, X, i, "paper") - slope(G, X, i, "paper")
        do = slope(F, X, i, "oracle") - slope(G, X, i, "oracle")
        if (dp > 0) - (dp < 0) != (do > 0) - (do < 0):
            problems.append("slope comparison differs")
    return problems


def test_criterion_10_appendix_a():
    t0 = time.perf_counter()
    rng = random.Random(10)
    bad = []
    nodes = ["smooth", "nonseparating", "separating"]
    for i in range(1000):
        X, inst = _random_instance(rng, nodes[i % 3])
        probs = _check_instance(X, inst)
        if probs:
            bad.append((i, probs[0]))
    # batches sharing one X: the joint threshold is minimal over the batch
    for node in nodes:
        X, first = _random_instance(rng, node)
        batch = [first]
        while len(batch) < 50:
            _, inst = _random_instance(rng, node)
            batch.append(inst)
        for mode in ("paper", "oracle"):
            res = n0_search(batch, X, None, mode)
            if not res.feasible:
                bad.append((node, "batch infeasible"))
                continue
            if not all(total_at(j, X, res.n0, mode) < 0 for j in batch):
                bad.append((node, "batch not negative"))
            if res.n0 > 1 and all(total_at(j, X, res.n0 - 1, mode) < 0 for j in batch):
                bad.append((node, "batch not minimal"))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 60
    record(10, ok, f"1000 random destabilising instances plus 3 batches: bounds, negativity, minimality, "
                   f"paper/oracle sign agreement; failures: {bad[:5]}", dt)
    assert ok


# 11 ------------------------------------------------------------------------

def test_criterion_11_cli_determinism(monkeypatch):
    from test_cli import CASES, INPUTS, GOLDEN

    monkeypatch.chdir(INPUTS)
    t0 = time.perf_counter()
    bad = []

    def run(argv):
        out, err = io.StringIO(), io.StringIO()
        rc = cli.run(argv, out, err)
        return rc, out.getvalue()

    for name, cmd in sorted(CASES.items()):
        argv = cmd.split()
        golden = (Path(GOLDEN) / f"{name}.out").read_text()
        outs = [run(argv) for _ in range(3)] + [run(argv + ["--jobs", "1"]), run(argv + ["--jobs", "4"])]
        if any(rc != 0 or out != golden for rc, out in outs):
            bad.append(name)
    dt = time.perf_counter() - t0
    ok = not bad
    record(11, ok, f"{len(CASES)} golden CLI cases byte-identical over 3 runs and --jobs 1/4; failures: {bad}", dt)
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
