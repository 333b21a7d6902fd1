import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypcomp.conformal_density import Density
from hypcomp.errors import SizeCap, VanishingCoefficient
from hypcomp.kernel_ops import qs_pair, theta_eval
from hypcomp.lattice_dynamics import (CompactTestFunction, DiscreteMeasure, averaged_coefficient,
                                      averaged_coefficient_limit, coefficient_separation,
                                      cone_count, cyclicity_rank, decay_profile,
                                      equidistribution_error, fell_scan, nu_t, shell,
                                      vitali_cover, weak_containment_probe)
from hypcomp.rep_space import CylinderFunction
from hypcomp.tree_geometry import Cylinder, TreeModel, format_word, parse_word

from oracles import length_str, uniform_mass, words_of_length

U2 = TreeModel.create(2)
D2 = Density(U2)
W2 = TreeModel.create(2, (1.0, 2.0))
DW = Density(W2)
ONE = CylinderFunction.one(2)
C_S = (4 + math.sqrt(3)) / 4  # I_s[1] at s = 3/4, uniform F2


def ind(w):
    return CylinderFunction.indicator(2, parse_word(w))


def test_shell_sizes():
    assert [len(shell(t, U2)) for t in range(4)] == [1, 4, 12, 36]
    assert shell(0, U2).elements == ((),)


@pytest.mark.parametrize("t", [1, 2, 3, 4])
def test_weighted_shell_matches_enumeration(t):
    R = 2.0
    expected = {w for n in range(0, 2 * t + 2) for w in words_of_length(2, n)
                if t * R <= length_str(w, (1.0, 2.0)) < (t + 1) * R}
    assert {format_word(g) for g in shell(t, W2).elements} == expected


def test_cone_count_examples():
    target = Cylinder.of(parse_word("aaa"))
    assert cone_count(target, 1.0, 3, "+", U2)["count"] == 9
    assert cone_count(target, 1.0, 3, "+", U2)["normalized_ratio"] == pytest.approx(1.0)
    assert cone_count(target, 2.0, 3, "+", U2)["count"] == 3
    assert cone_count(target, 2.0, 3, "+", U2)["normalized_ratio"] == pytest.approx(1.0)
    assert cone_count(target, 1.0, 3, "-", U2)["count"] == 9


def _cell_of(cover, u: str, w: str) -> list[int]:
    return [k for k, cell in enumerate(cover.cells)
            if any(u.startswith(a.label) and w.startswith(b.label) for a, b in cell)]


@pytest.mark.parametrize("t", [1, 2, 3, 4])
def test_vitali_cells_partition_the_square(t):
    cover = vitali_cover(t, d=D2)
    assert cover.ok
    pixels = words_of_length(2, cover.resolution)
    weights = np.zeros(len(cover.selected))
    for u in pixels:
        for w in pixels:
            owners = _cell_of(cover, u, w)
            assert len(owners) == 1, (u, w, owners)
            weights[owners[0]] += uniform_mass(u, 2) * uniform_mass(w, 2)
    np.testing.assert_allclose(weights, cover.weights, atol=1e-15)
    for k, (small, big) in enumerate(zip(cover.small_boxes, cover.big_boxes)):
        for a, b in cover.cells[k]:
            assert big[0].contains(a) and big[1].contains(b)
    for i, (a, b) in enumerate(cover.small_boxes):
        for c, e in cover.small_boxes[i + 1:]:
            assert a.disjoint(c) or b.disjoint(e)


def test_vitali_examples():
    assert vitali_cover(2, d=D2).cover_defect <= 1e-12
    assert len(vitali_cover(1, d=D2).selected) <= 4
    assert vitali_cover(3, d=DW).ok


def test_nu_t():
    for t in range(1, 7):
        assert math.fsum(nu_t(t, d=D2).weights) == pytest.approx(1.0, abs=1e-12)
    tops = [nu_t(t, d=D2).weights.max() for t in range(2, 7)]
    assert all(b < a for a, b in zip(tops, tops[1:]))


def test_discrete_measure_validation():
    with pytest.raises(ValueError):
        DiscreteMeasure(((),), np.array([0.5]))
    nu = DiscreteMeasure(((), (1,)), np.array([0.25, 0.75]))
    assert nu.integrate(lambda g: 1j * len(g)) == pytest.approx(0.75j)
    assert nu.l2_norm() == pytest.approx(math.sqrt(0.625))


def test_equidistribution_error():
    assert equidistribution_error((ONE, ONE), 3, D2) <= 1e-14
    errs = [equidistribution_error((ind("a"), ind("b")), t, D2) for t in range(2, 7)]
    assert errs[-1] <= 0.05
    assert equidistribution_error((ind("ab"), ind("ba")), 4, DW) <= 0.05


def test_compact_test_function():
    f = CompactTestFunction(ind("ab"), blend_depth=2, interior=5.0)
    assert f(parse_word("a")) == 5.0
    assert f(parse_word("abAB")) == 1.0
    assert f(parse_word("aa")) == 0.0
    assert CompactTestFunction.constant(2, 3.0)(parse_word("ab")) == 3.0


def test_averaged_coefficient_constant_data():
    f = CompactTestFunction.constant(2)
    for t in (3, 5):
        v = averaged_coefficient(0.75, t, ONE, ONE, f, f, D2)
        assert v.real == pytest.approx(C_S, rel=1e-12)
    assert averaged_coefficient(0.5, 4, ONE, ONE, f, f, D2).real == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("form, expected", [("intertwined", C_S * 0.25), ("plain", 0.25)])
def test_averaged_coefficient_boundary_test(form, expected):
    f1 = CompactTestFunction(ind("a"))
    f2 = CompactTestFunction.constant(2)
    limit = averaged_coefficient_limit(0.75, ONE, ONE, ind("a"), ONE, D2, form)
    assert limit.real == pytest.approx(expected, rel=1e-12)
    v = averaged_coefficient(0.75, 5, ONE, ONE, f1, f2, D2, form=form)
    assert v.real == pytest.approx(expected, rel=1e-6)


def _theta_oracle(n: int, s: float) -> float:
    # Gromov product of a uniform point with a^n is k with prob mu(C_{a^k}) - mu(C_{a^{k+1}})
    delta = math.log(3)
    total = 0.0
    for k in range(n + 1):
        p = uniform_mass("a" * k, 2) - (uniform_mass("a" * (k + 1), 2) if k < n else 0.0)
        total += p * math.exp((1 - s) * delta * (2 * k - n))
    return total


@pytest.mark.parametrize("s", [0.6, 0.75, 0.9])
def test_decay_profile(s):
    rep = decay_profile(s, ONE, ONE, 30, D2)
    assert rep["slope"] == pytest.approx(-(1 - s) * math.log(3), abs=0.02)
    assert rep["theta_slope"] == pytest.approx(rep["target"], abs=0.02)
    for n in (1, 7, 30):
        assert theta_eval(ONE, (1,) * n, s, D2).real == pytest.approx(_theta_oracle(n, s), rel=1e-12)
        # Q_s(pi_s(g) 1, 1) = I_s[1] * Theta_s[1](g.o) when I_s[1] is constant
        c = qs_pair(ONE, ONE, s, D2).real
        assert rep["values"][n - 1] == pytest.approx(c * _theta_oracle(n, s), rel=1e-10)


def test_decay_profile_trivial_and_mean_zero():
    assert abs(decay_profile(1.0, ONE, ONE, 10, D2)["slope"]) <= 1e-12
    # a mean-zero phi keeps the leading rate: the C_A mass of RN^{1/4} outweighs the C_a part,
    # leaving I_s[1] * ((1/2)/(sqrt 3 - 1) - 1/4) * 3^{-n/4} asymptotically
    mean_zero = ind("a") - ind("A")
    rep = decay_profile(0.75, mean_zero, ONE, 40, D2)
    assert rep["slope"] == pytest.approx(-math.log(3) / 4, abs=0.02)
    lead = 0.5 / (math.sqrt(3) - 1) - 0.25
    assert rep["values"][-1] * 3 ** 10 / C_S == pytest.approx(lead, rel=1e-9)
    with pytest.raises(VanishingCoefficient):
        decay_profile(0.75, ind("a") - ind("b"), ONE, 10, D2)


def test_weak_containment_probe_shape():
    rows = weak_containment_probe(0.9, range(2, 6), D2)
    assert [r["t"] for r in rows] == [2, 3, 4, 5]
    assert all(r["ratio"] == pytest.approx(r["lhs"] / r["rhs"]) for r in rows)
    assert rows[-1]["rhs"] == pytest.approx(6 * nu_t(5, d=D2).l2_norm())
    with pytest.raises(SizeCap):
        weak_containment_probe(0.9, [10], D2)


def test_fell_scan():
    rows = fell_scan("a", ONE, [0.75, 0.65, 0.55, 0.51], D2)
    assert rows[0]["limit_target"] == pytest.approx(math.sqrt(3) / 2, abs=1e-12)
    devs = [r["deviation"] for r in rows]
    assert all(b < a for a, b in zip(devs, devs[1:]))
    assert all(r["normalized"] == 1.0 for r in fell_scan("", ONE, [0.9, 0.6], D2))


def test_coefficient_separation():
    assert coefficient_separation(0.6, 0.9, 4, D2) >= 0.01
    assert coefficient_separation(0.75, 0.75, 3, D2) == 0.0


def test_cyclicity_rank():
    assert cyclicity_rank(0.75, 0, 2, D2)["rank"] == 1
    # the four RN^s functions of the generators sum to a constant, so 1 adds nothing
    assert cyclicity_rank(0.75, 1, 2, D2)["rank"] == 4
    top = cyclicity_rank(0.75, 3, 2, D2)
    assert top["rank"] == top["dimension"] == 12


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 5))
def test_vitali_counts_are_comparable_to_growth(t):
    cover = vitali_cover(t, d=D2)
    assert 0.1 <= cover.normalized_count <= 10
