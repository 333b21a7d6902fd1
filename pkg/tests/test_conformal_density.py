import math

import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from hypcomp.conformal_density import (Density, FiniteDensity, cone_mass_t, critical_exponent,
                                       cylinder_mass, divergence_certificate, poincare_partial,
                                       poincare_series, rn_derivative, shadow_lemma_ratio,
                                       verify_conformality)
from hypcomp.errors import ElementaryGroup, ParameterAtOrBelowDelta
from hypcomp.tree_geometry import Cylinder, TreeModel, all_cylinders, iter_ball, parse_word

from oracles import length_str, reduce_str, uniform_mass, words_of_length

U2 = TreeModel.create(2)
D2 = Density(U2)
W2 = TreeModel.create(2, (1.0, 2.0))
DW = Density(W2)


def cyl(w):
    return Cylinder.of(parse_word(w))


def free_product_delta(lengths):
    # W(t) diverges where sum_i 2 q_i / (1 + q_i) = 1, q_i = exp(-t l_i)
    f = lambda t: sum(2 * math.exp(-t * l) / (1 + math.exp(-t * l)) for l in lengths) - 1
    return brentq(f, 1e-6, 50, xtol=1e-15)


@pytest.mark.parametrize("rank, lengths, expected", [
    (2, None, math.log(3)), (3, None, math.log(5)), (2, (2.0, 2.0), math.log(3) / 2)])
def test_critical_exponent_examples(rank, lengths, expected):
    assert critical_exponent(TreeModel.create(rank, lengths)) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.3, 4.0), min_size=2, max_size=4))
def test_critical_exponent_matches_free_product_root(lengths):
    m = TreeModel.create(len(lengths), lengths)
    assert critical_exponent(m) == pytest.approx(free_product_delta(lengths), rel=1e-10)


def test_rank_one_is_elementary():
    with pytest.raises(ElementaryGroup):
        TreeModel.create(1)


def test_poincare_partial_against_enumeration():
    s = 1.4
    brute = sum(math.exp(-s * length_str(w, (1.0, 2.0)))
                for n in range(5) for w in words_of_length(2, n))
    assert poincare_partial(W2, s, 4) == pytest.approx(brute, rel=1e-13)
    assert poincare_partial(U2, 1.0, 0) == 1.0


def test_poincare_series_closed_form():
    assert poincare_series(U2, math.log(4)) == pytest.approx(5.0)
    assert poincare_partial(U2, math.log(4), 200) == pytest.approx(5.0, rel=1e-12)
    with pytest.raises(ParameterAtOrBelowDelta):
        poincare_series(U2, math.log(3))


def test_divergence_certificate():
    cert = divergence_certificate(W2)
    assert cert["diverges_below"] and cert["converges_above"]


def test_uniform_masses_match_even_splitting():
    for c in all_cylinders(2, 4):
        assert cylinder_mass(D2, c) == pytest.approx(uniform_mass(c.label, 2), rel=1e-13)
    assert D2.mass(cyl("ab")) == pytest.approx(1 / 12)


@pytest.mark.parametrize("d", [D2, DW, Density(TreeModel.create(3, (1.0, 1.5, 2.5)))])
def test_masses_are_additive(d):
    rank = d.model.rank
    for n in range(1, 5):
        assert math.fsum(d.mass(c) for c in all_cylinders(rank, n)) == pytest.approx(1.0, abs=1e-13)
    for c in all_cylinders(rank, 2):
        kids = math.fsum(d.mass(k) for k in c.children(rank))
        assert kids == pytest.approx(d.mass(c), rel=1e-13)


def test_cone_mass_examples():
    f = FiniteDensity(U2, math.log(4))
    assert cone_mass_t(f, cyl("a")) == pytest.approx(0.2)
    assert cone_mass_t(f, Cylinder(())) == 1.0


def test_cone_mass_brute_force_weighted():
    # orbit points up to length 14, enough for a 1e-3 relative check at this t
    t = W2.delta + 0.7
    num = den = 0.0
    frontier = [""]
    while frontier:
        nxt = []
        for w in frontier:
            weight = math.exp(-t * length_str(w, (1.0, 2.0)))
            den += weight
            num += weight if w.startswith("b") else 0.0
            nxt += [w + x for x in "aAbB" if not (w and w[-1] == x.swapcase())]
        frontier = [w for w in nxt if length_str(w, (1.0, 2.0)) <= 14]
    assert cone_mass_t(FiniteDensity(W2, t), cyl("b")) == pytest.approx(num / den, rel=1e-3)


def test_cone_mass_approaches_cylinder_mass():
    gaps = [abs(cone_mass_t(FiniteDensity(U2, U2.delta + 2.0 ** -j), cyl("a")) - 0.25)
            for j in range(1, 21)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    weighted = [abs(cone_mass_t(FiniteDensity(W2, W2.delta + 2.0 ** -j), cyl("aB")) - DW.mass(cyl("aB")))
                for j in range(1, 21)]
    assert all(b < a for a, b in zip(weighted, weighted[1:]))


def test_rn_derivative_examples():
    assert rn_derivative(D2, parse_word("a"), cyl("ab")) == pytest.approx(3.0)
    assert rn_derivative(D2, parse_word("a"), cyl("bb")) == pytest.approx(1 / 3)
    assert rn_derivative(D2, (), cyl("ab")) == 1.0


def test_conformality_examples():
    assert verify_conformality(D2, parse_word("a"), 2) <= 1e-14
    assert verify_conformality(D2, (), 1) == 0
    assert verify_conformality(DW, parse_word("b"), 3) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(st.text(alphabet="aAbB", max_size=4).map(reduce_str))
def test_pushforward_mass_matches_rn_integral(g):
    # mu(g^-1 C) = integral over C of RN_g, checked on depth-(|g|+2) cylinders
    from hypcomp.tree_geometry import inverse, map_cylinder
    gw = parse_word(g)
    for c in all_cylinders(2, len(g) + 2):
        pulled = sum(DW.mass(x) for x in map_cylinder(inverse(gw), c, 2))
        assert pulled == pytest.approx(rn_derivative(DW, gw, c) * DW.mass(c), rel=1e-12)


def test_shadow_lemma_ratio_bounds():
    lo, hi = shadow_lemma_ratio(D2, 1.0, 8)
    assert 0.2 < lo <= hi <= 4
    assert shadow_lemma_ratio(D2, 1.0, 4) == pytest.approx((lo, hi), abs=1e-12)
