import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypcomp.conformal_density import Density
from hypcomp.errors import DimensionCap, ParameterOutOfRange
from hypcomp.kernel_ops import (decomposition_defect, ds_form, gram_matrix, i_s_one, ms_form,
                                pair_energy, positivity_report, qs_pair, sandwich_check,
                                theta_eval)
from hypcomp.rep_space import CylinderFunction, apply_pi, random_step_function
from hypcomp.tree_geometry import Cylinder, TreeModel, all_cylinders, parse_word

from oracles import truncated_pair_energy

U2 = TreeModel.create(2)
D2 = Density(U2)
W2 = TreeModel.create(2, (1.0, 2.0))
DW = Density(W2)
ROOT3 = math.sqrt(3)
# exact energy of C_a x C_a at s = 3/4: geometric series over the common-prefix depth
E_AA = 0.125 / (ROOT3 - 1)


def cyl(w):
    return Cylinder.of(parse_word(w))


def test_energy_examples():
    assert pair_energy(cyl("a"), cyl("b"), 0.75, D2) == pytest.approx(0.0625, abs=1e-15)
    assert pair_energy(cyl("a"), cyl("a"), 0.75, D2) == pytest.approx(E_AA, abs=1e-14)
    # the same number written as sqrt(3)(1/16)(2/3)/(1 - sqrt(3)/3)
    assert E_AA == pytest.approx(ROOT3 / 16 * (2 / 3) / (1 - ROOT3 / 3), rel=1e-15)
    assert pair_energy(cyl("ab"), cyl("aB"), 1.0, D2) == pytest.approx(1 / 144)


@pytest.mark.parametrize("v, w", [("a", "a"), ("ab", "aB"), ("ab", "ab"), ("a", "ab"), ("aB", "b")])
@pytest.mark.parametrize("s", [0.6, 0.75, 0.95])
def test_energy_matches_brute_force(v, w, s):
    beta = 2 * (1 - s) * math.log(3)
    expected = truncated_pair_energy(v, w, beta, 2, 4)
    assert pair_energy(cyl(v), cyl(w), s, D2) == pytest.approx(expected, rel=1e-11)


def test_weighted_energy_brackets_truncations():
    # truncating the diagonal at depth n undercounts, and the gap shrinks geometrically
    s, beta = 0.75, 2 * 0.25 * W2.delta
    exact = pair_energy(cyl("a"), cyl("a"), s, DW)
    gaps = []
    for n in range(2, 8):
        cells = [c for c in all_cylinders(2, n) if c.label.startswith("a")]
        total = 0.0
        for x in cells:
            for y in cells:
                k = 0
                while k < n and x.prefix[k] == y.prefix[k]:
                    k += 1
                depth = W2.word_length(x.prefix[:k])
                total += DW.mass(x) * DW.mass(y) * math.exp(beta * depth)
        gaps.append(exact - total)
    assert all(g > 0 for g in gaps)
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] / gaps[-2] < 0.9


def test_qs_pair_examples():
    one = CylinderFunction.one(2)
    assert qs_pair(one, one, 0.75, D2).real == pytest.approx((4 + ROOT3) / 4, abs=1e-12)
    assert qs_pair(one, one, 0.75, D2).real == pytest.approx(4 * E_AA + 12 * 0.0625, abs=1e-12)
    a = CylinderFunction.indicator(2, (1,))
    b = CylinderFunction.indicator(2, (2,))
    assert qs_pair(a, b, 0.75, D2) == pytest.approx(0.0625)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_qs_at_one_is_rank_one(seed):
    phi = random_step_function(np.random.default_rng(seed), 2, 2, True)
    mean = sum(v * DW.mass(c) for c, v in phi.terms)
    assert qs_pair(phi, phi, 1.0, DW).real == pytest.approx(abs(mean) ** 2, abs=1e-12)


def test_gram_examples():
    g = gram_matrix(1, 0.75, D2)
    np.testing.assert_allclose(np.diag(g), E_AA, atol=1e-14)
    np.testing.assert_allclose(g[~np.eye(4, dtype=bool)], 0.0625, atol=1e-15)
    ev = np.linalg.eigvalsh(g)
    np.testing.assert_allclose(ev, [E_AA - 0.0625] * 3 + [E_AA + 3 * 0.0625], atol=1e-13)
    np.testing.assert_allclose(gram_matrix(1, 1.0, D2), np.full((4, 4), 1 / 16), atol=1e-15)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.51, 1.0), st.integers(1, 3), st.sampled_from([D2, DW]))
def test_gram_is_positive(s, n, d):
    g = gram_matrix(n, s, d)
    ev = np.linalg.eigvalsh(g)
    assert ev.min() >= -1e-9 * np.trace(g) / len(g)


def test_positivity_report():
    rows = positivity_report(2, [0.55, 0.75, 1.0], DW)
    assert all(r["pass"] for r in rows)
    assert rows[-1]["min_eig"] >= -1e-12
    with pytest.raises(ParameterOutOfRange):
        positivity_report(1, [0.5], D2)
    with pytest.raises(DimensionCap):
        gram_matrix(7, 0.75, D2)


def test_i_s_one():
    lo, hi = i_s_one(cyl("abA"), 0.75, D2)
    assert lo == pytest.approx((4 + ROOT3) / 4) and hi == pytest.approx((4 + ROOT3) / 4)
    assert i_s_one(cyl("a"), 1.0, DW) == pytest.approx((1.0, 1.0))
    lo, hi = i_s_one(cyl("a"), 0.75, DW)
    # averaging I_s[1] against mu over C_a must land inside the interval
    avg = pair_energy(cyl("a"), Cylinder(()), 0.75, DW) / DW.mass(cyl("a"))
    assert lo - 1e-12 <= avg <= hi + 1e-12


def test_theta_examples():
    one = CylinderFunction.one(2)
    assert theta_eval(one, parse_word("a"), 0.5, D2) == pytest.approx(ROOT3 / 2)
    assert theta_eval(one, parse_word("a"), 0.5, D2) == pytest.approx(ROOT3 / 4 + 0.75 / ROOT3)
    assert theta_eval(one, (), 0.8, DW) == pytest.approx(1.0)
    n = 30
    v = theta_eval(one, (1,) * n, 0.75, D2).real
    assert math.log(v) / n == pytest.approx(-math.log(3) / 4, abs=0.02)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.6, 0.75, 0.9]))
def test_theta_is_an_rn_integral(seed, s):
    # Theta_s[phi](g.o) = <pi_{1-s}(g) 1, conj phi>
    phi = random_step_function(np.random.default_rng(seed), 2, 2)
    g = parse_word("aBa")
    moved = apply_pi(1 - s, g, CylinderFunction.one(2), DW)
    expected = sum(v * DW.mass(c) * moved.value_at(c.prefix + (c.prefix[-1],) * 4)
                   for c, v in [(c, phi.value_at(c.prefix)) for c in all_cylinders(2, 4)])
    assert theta_eval(phi, g, s, DW) == pytest.approx(expected, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.55, 1.0), st.sampled_from([D2, DW]))
def test_decomposition(seed, s, d):
    phi = random_step_function(np.random.default_rng(seed), 2, 2, True)
    assert decomposition_defect(phi, s, d) <= 1e-11
    assert ds_form(phi, s, d) >= -1e-14
    assert ms_form(phi, s, d) >= qs_pair(phi, phi, s, d).real - 1e-12


def test_sandwich():
    rep = sandwich_check(1, 0.75, D2)
    assert rep["c_upper"] == pytest.approx((E_AA + 3 * 0.0625) / 0.25)
    assert rep["c_upper"] == pytest.approx((4 + ROOT3) / 4)
    assert sandwich_check(1, 1.0, D2)["c_upper"] == pytest.approx(1.0)
