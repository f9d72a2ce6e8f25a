import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from ewrlnc.analytic import (eta, layer_decoding_probs, reception_prob, throughput_weights,
                             uncoded_eta, uncoded_layer_success)
from ewrlnc.core import ContractViolation, GopLayout, TxPolicy
from oracles import brute_eta, brute_layer_probs, brute_uncoded_eta, compositions, layouts_up_to

L11 = GopLayout((1, 1), (0.5, 1.0))


@pytest.mark.parametrize("nt, nr, pe, expected", [
    ((2,), (2,), 0.0, 1.0),
    ((2,), (1,), 0.5, 0.5),
    ((1, 1), (1, 0), 0.3, 0.21),
])
def test_reception_prob_examples(nt, nr, pe, expected):
    assert reception_prob(TxPolicy(nt), nr, pe) == pytest.approx(expected, abs=1e-15)


def test_reception_prob_rejects_excess():
    with pytest.raises(ContractViolation):
        reception_prob(TxPolicy((1,)), (2,), 0.1)


@pytest.mark.parametrize("n", [0, 1, 3, 7])
@pytest.mark.parametrize("pe", [0.0, 0.2, 0.9])
def test_single_layer_probability(n, pe):
    p = layer_decoding_probs(GopLayout((1,)), TxPolicy((n,)), pe)
    assert p[0] == pytest.approx(1 - pe**n, abs=1e-15)


def test_layer_probs_examples():
    assert list(layer_decoding_probs(L11, TxPolicy((1, 1)), 0.5)) == pytest.approx([0.25, 0.25])
    assert list(layer_decoding_probs(L11, TxPolicy((0, 3)), 0.5)) == pytest.approx([0.0, 0.5])


def test_eta_examples():
    assert eta(L11, TxPolicy((1, 1)), 0.5) == pytest.approx(0.375, abs=1e-15)
    assert eta(L11, TxPolicy((2, 1)), 0.5) == pytest.approx(0.5625, abs=1e-15)
    lay = GopLayout((2, 1, 3))
    assert eta(lay, TxPolicy(lay.packets), 0.0) == 1.0


@pytest.mark.parametrize("k, expected", [
    ((4, 6), (0.4, 1.0)), ((10,), (1.0,)), ((4, 2, 4), (0.4, 0.6, 1.0)),
])
def test_throughput_weights(k, expected):
    assert throughput_weights(GopLayout(k)) == pytest.approx(expected)


@pytest.mark.parametrize("k, n, pe, expected", [
    (2, 5, 0.5, 0.65625), (3, 2, 0.4, 0.0), (3, 2, 0.0, 0.0), (1, 4, 0.5, 0.9375),
])
def test_uncoded_layer_success(k, n, pe, expected):
    assert uncoded_layer_success(k, n, pe) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("k, c, nt, pe, expected", [
    ((1,), (1.0,), (3,), 0.5, 0.875),
    ((1, 1), (0.5, 1.0), (1, 1), 0.0, 1.0),
    ((1, 1), (0.5, 1.0), (2, 2), 0.5, 0.65625),  # 0.75*0.25*0.5 + 0.75**2
])
def test_uncoded_eta_examples(k, c, nt, pe, expected):
    assert uncoded_eta(GopLayout(k, c), TxPolicy(nt), pe) == pytest.approx(expected, abs=1e-15)


def test_reception_probs_normalise():
    rng = random.Random(7)
    for _ in range(40):
        L = rng.randint(1, 3)
        n_t = rng.randint(0, 12)
        alloc = rng.choice(compositions(n_t, L))
        pe = rng.random() * 0.95
        total = sum(reception_prob(TxPolicy(alloc), nr, pe)
                    for nr in itertools.product(*(range(n + 1) for n in alloc)))
        assert total == pytest.approx(1.0, abs=1e-12)


def test_layer_probs_sum_at_most_one():
    for k in layouts_up_to(3, 5):
        for alloc in compositions(6, len(k)):
            p = layer_decoding_probs(GopLayout(k), TxPolicy(alloc), 0.3)
            assert p.min() >= 0 and p.sum() <= 1 + 1e-12


def test_layer_probs_match_enumeration():
    for k in layouts_up_to(3, 4):
        for alloc in compositions(5, len(k)):
            got = layer_decoding_probs(GopLayout(k), TxPolicy(alloc), 0.35)
            assert list(got) == pytest.approx(brute_layer_probs(k, alloc, 0.35), abs=1e-12)


def test_eta_matches_pattern_enumeration_sample():
    # the exhaustive sweep lives in the acceptance suite
    rng = random.Random(3)
    for _ in range(60):
        k = rng.choice(layouts_up_to(3, 6))
        alloc = rng.choice(compositions(rng.randint(0, 8), len(k)))
        pe = rng.choice([0.0, 0.1, 0.5, 0.77])
        lay = GopLayout(k)
        assert eta(lay, TxPolicy(alloc), pe) == pytest.approx(
            brute_eta(k, alloc, pe, lay.weights), abs=1e-9)


small_layout = st.lists(st.integers(1, 3), min_size=1, max_size=3)


@settings(max_examples=60, deadline=None)
@given(small_layout, st.data())
def test_eta_nonincreasing_in_pe(k, data):
    alloc = data.draw(st.lists(st.integers(0, 4), min_size=len(k), max_size=len(k)))
    a, b = sorted(data.draw(st.lists(st.floats(0, 0.99), min_size=2, max_size=2)))
    lay = GopLayout(k)
    assert eta(lay, TxPolicy(alloc), a) >= eta(lay, TxPolicy(alloc), b) - 1e-12


@settings(max_examples=60, deadline=None)
@given(small_layout, st.data())
def test_extra_transmission_never_hurts(k, data):
    alloc = data.draw(st.lists(st.integers(0, 4), min_size=len(k), max_size=len(k)))
    w = data.draw(st.integers(0, len(k) - 1))
    pe = data.draw(st.floats(0, 0.95))
    more = list(alloc)
    more[w] += 1
    lay = GopLayout(k)
    assert eta(lay, TxPolicy(more), pe) >= eta(lay, TxPolicy(alloc), pe) - 1e-12


def test_uncoded_never_beats_rlnc():
    for k in layouts_up_to(3, 5):
        lay = GopLayout(k)
        for n_t in range(0, 8):
            for alloc in compositions(n_t, len(k)):
                for pe in (0.1, 0.4):
                    p = TxPolicy(alloc)
                    assert uncoded_eta(lay, p, pe) <= eta(lay, p, pe) + 1e-12


def test_k1_uncoded_equals_rlnc():
    lay = GopLayout((1,))
    for n in range(6):
        assert uncoded_eta(lay, TxPolicy((n,)), 0.3) == pytest.approx(eta(lay, TxPolicy((n,)), 0.3))


def test_pe_out_of_range():
    with pytest.raises(ContractViolation):
        eta(L11, TxPolicy((1, 1)), 1.0)


def test_uncoded_matches_round_robin_enumeration():
    for k in layouts_up_to(3, 4):
        lay = GopLayout(k)
        for alloc in compositions(6, len(k)):
            for pe in (0.0, 0.3, 0.5):
                assert uncoded_eta(lay, TxPolicy(alloc), pe) == pytest.approx(
                    brute_uncoded_eta(k, alloc, pe, lay.weights), abs=1e-12)
