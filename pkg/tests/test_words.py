"""Word products, the norm cocycle, first-passage families, samplers, and
norm-doubling words."""

import math
from fractions import Fraction

import numpy as np
import pytest

import furstlab as fl
from furstlab.errors import CapExceededError, ExactOverflowError
from furstlab.sl2 import GaussianRational, GroupElement, dist_cp1
from furstlab.words import (ScaledMatrix, System, chi_word,
                            doubling_word_sets, enumerate_first_passage,
                            is_doubling_word, product_of_word, sample_word)


def _exact_diag(top) -> GroupElement:
    t = Fraction(top)
    return GroupElement.from_exact(
        GaussianRational(t, Fraction(0)), GaussianRational.of(0),
        GaussianRational.of(0), GaussianRational(1 / t, Fraction(0)))


SINGLE = System((_exact_diag(2),), (1.0,), exact=True, name="single")
SANOV = fl.get_preset("sanov")
INV = fl.get_preset("inverse-pair")


def test_product_empty_word():
    g = product_of_word(SANOV, ())
    assert g.entries() == (1, 0, 0, 1)
    assert g.exact is not None


def test_product_sanov_hand():
    g = product_of_word(SANOV, (0, 1))
    assert g.entries() == (5, 2, 2, 1)
    xa, xb, xc, xd = g.exact_key()
    assert (xa.re, xb.re, xc.re, xd.re) == (5, 2, 2, 1)


def test_product_associativity_sampled():
    rng = np.random.default_rng(11)
    for _ in range(50):
        u = tuple(rng.integers(0, 2, size=rng.integers(0, 6)))
        v = tuple(rng.integers(0, 2, size=rng.integers(1, 6)))
        lhs = product_of_word(SANOV, u + v)
        rhs = product_of_word(SANOV, u) @ product_of_word(SANOV, v)
        assert lhs.exact_key() == rhs.exact_key()


def test_chi_word_values():
    assert chi_word(SANOV, ()) == 0.0
    assert abs(chi_word(SINGLE, (0,)) - 2.0) <= 1e-12
    expected = math.log2(17 + 12 * math.sqrt(2))
    assert abs(chi_word(SANOV, (0, 1)) - expected) <= 1e-10


def test_chi_word_long_no_overflow():
    # 400 letters of the sanov pair: far beyond float range for raw products
    word = tuple([0, 1] * 200)
    val = chi_word(SANOV, word)
    assert np.isfinite(val) and val > 400


def test_exact_overflow_cap():
    with pytest.raises(ExactOverflowError):
        product_of_word(SANOV, tuple([0, 1] * 200), bits_cap=64)


def test_first_passage_single_matrix():
    ws = enumerate_first_passage(SINGLE, 0, 1, 3, cap=100)
    assert ws.words == [(0, 0)]
    assert abs(ws.total_weight() - 1.0) <= 1e-12


def test_first_passage_sanov_level0():
    ws = enumerate_first_passage(SANOV, 0, 1, 0, cap=100)
    assert sorted(ws.words) == [(0,), (1,)]


def test_first_passage_weights_and_bounds():
    ws = enumerate_first_passage(SANOV, 1, 2, 12, cap=200_000)
    assert abs(ws.total_weight() - 1.0) <= 1e-10
    # norm bounds: 2^(n/2) < ||g_u|| <= C_l 2^(n/2)
    for u in ws.words:
        nrm = 2.0 ** (0.5 * chi_word(SANOV, u))
        assert nrm > 2.0 ** 6
        assert nrm <= ws.block_norm_const * 2.0 ** 6 * (1 + 1e-12)


def test_first_passage_block_prefix_free():
    ws = enumerate_first_passage(SANOV, 0, 2, 10, cap=200_000)
    words = set(ws.words)
    for u in ws.words:
        for cut in range(0, len(u), 2):
            if cut and tuple(u[:cut]) in words:
                pytest.fail(f"{u[:cut]} is a block prefix of {u}")


def test_first_passage_cap_error():
    with pytest.raises(CapExceededError):
        enumerate_first_passage(SANOV, 0, 1, 40, cap=50)


def test_sample_word_degenerate():
    assert sample_word(SINGLE, np.random.default_rng(0), length=5) == (0,) * 5


def test_sample_word_letter_frequencies():
    rng = np.random.default_rng(5)
    draws = 200_000
    counts = np.zeros(2)
    for _ in range(draws // 10):
        w = sample_word(SANOV, rng, length=10)
        for i in w:
            counts[i] += 1
    # 4 sigma band for Binomial(draws, 1/2)
    p_hat = counts[0] / draws
    sigma = math.sqrt(0.25 / draws)
    assert abs(p_hat - 0.5) <= 4 * sigma


def test_sample_word_first_passage_membership():
    ws = enumerate_first_passage(SANOV, 0, 1, 8, cap=100_000)
    words = set(ws.words)
    rng = np.random.default_rng(2)
    for _ in range(200):
        assert sample_word(SANOV, rng, first_passage=(0, 1, 8)) in words


def test_norm_lower_bound_outside_repelling_ball():
    # ||g_u z|| >= eta ||g_u|| ||z|| whenever z*C avoids B(L(g_u^-1), eta)
    from furstlab.sl2 import boundary_direction
    rng = np.random.default_rng(3)
    eta = 0.2
    for _ in range(200):
        u = tuple(rng.integers(0, 2, size=8))
        g = product_of_word(SANOV, u)
        rep = boundary_direction(g.inverse())
        v = rng.standard_normal(4)
        z = np.array([complex(v[0], v[1]), complex(v[2], v[3])])
        z /= np.linalg.norm(z)
        from furstlab.sl2 import ProjPoint
        p = ProjPoint.from_vector(z[0], z[1])
        if dist_cp1(p, rep) <= eta:
            continue
        img = np.array([g.a * z[0] + g.b * z[1], g.c * z[0] + g.d * z[1]])
        assert np.linalg.norm(img) >= eta * g.op_norm() - 1e-9


def test_doubling_single_matrix_all_words():
    v, m = doubling_word_sets(SINGLE, 0, 1, 4, cap=100)
    assert sorted(len(w) for w in v.words) == [1, 2, 3, 4]
    assert m >= 1


def test_doubling_excludes_cancellation():
    v, _ = doubling_word_sets(INV, 0, 1, 2, cap=100)
    assert (0, 1) not in v.words
    assert (1, 0) not in v.words
    assert (0, 0) in v.words


def test_doubling_empty_at_zero():
    v, _ = doubling_word_sets(SINGLE, 0, 1, 0, cap=100)
    assert v.words == []


def test_doubling_mass_on_twist():
    # sampled block words are norm-doubling with high probability
    tw = fl.get_preset("twist")
    rng = np.random.default_rng(12)
    j, l, n = 0, 6, 40
    hits = 0
    trials = 200
    for _ in range(trials):
        k = int(rng.integers(1, n + 1))
        w = sample_word(tw, rng, length=j + l * k)
        hits += is_doubling_word(tw, w, j, l)
    assert hits / trials >= 0.9


def test_scaled_matrix_matches_direct_product():
    rng = np.random.default_rng(4)
    for _ in range(50):
        u = tuple(rng.integers(0, 2, size=10))
        acc = ScaledMatrix.identity()
        for i in u:
            acc = acc.times(SANOV.generators[i])
        direct = product_of_word(SANOV, u)
        assert abs(acc.chi() - 2 * math.log2(direct.op_norm())) <= 1e-9
