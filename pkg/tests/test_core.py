import pytest
from hypothesis import given, strategies as st

from ewrlnc.core import (ChannelSpec, ContractViolation, GopLayout, ReceptionVector, TxPolicy,
                         decoding_steps,
                         frame_weights, l_max, validate_weights)
from oracles import lmax_literal

K4 = (5, 1, 2, 3)


@pytest.mark.parametrize("nr, expected", [
    ((4, 1, 2, 3), 0),
    ((5, 0, 2, 3), 1),
    ((4, 3, 1, 3), 2),
    ((0, 4, 4, 2), 3),
    ((3, 0, 0, 8), 4),
    ((5, 1, 2, 3), 4),
])
def test_l_max_worked_examples(nr, expected):
    assert l_max(K4, nr) == expected
    assert l_max(GopLayout(K4), ReceptionVector(nr)) == expected


def test_l_max_dimension_mismatch():
    with pytest.raises(ContractViolation):
        l_max((2, 2), (1, 1, 1))


def test_l_max_rejects_negative_counts():
    with pytest.raises(ContractViolation):
        l_max((2, 2), (1, -1))


layouts = st.lists(st.integers(1, 5), min_size=1, max_size=4)


@given(layouts, st.data())
def test_l_max_matches_literal_recursion(k, data):
    nr = data.draw(st.lists(st.integers(0, 12), min_size=len(k), max_size=len(k)))
    assert l_max(k, nr) == lmax_literal(k, nr)


@given(layouts, st.data())
def test_l_max_monotone(k, data):
    nr = data.draw(st.lists(st.integers(0, 8), min_size=len(k), max_size=len(k)))
    extra = data.draw(st.lists(st.integers(0, 3), min_size=len(k), max_size=len(k)))
    more = [a + b for a, b in zip(nr, extra)]
    assert l_max(k, more) >= l_max(k, nr)


@given(layouts)
def test_l_max_full_and_empty(k):
    assert l_max(k, k) == len(k)
    assert l_max(k, [0] * len(k)) == 0


@given(layouts, st.data())
def test_adding_below_current_top_never_hurts(k, data):
    nr = data.draw(st.lists(st.integers(0, 8), min_size=len(k), max_size=len(k)))
    top = l_max(k, nr)
    if top == 0:
        return
    idx = data.draw(st.integers(0, top - 1))
    bumped = list(nr)
    bumped[idx] += 1
    assert l_max(k, bumped) >= top


@given(st.integers(1, 20), st.integers(0, 30))
def test_single_layer_is_threshold(k, n):
    assert l_max([k], [n]) == int(n >= k)


@pytest.mark.parametrize("weights, ok", [
    ((0.5, 1.0), True),
    ((1.0, 0.5), False),
    ((0.125, 0.25, 0.5, 1.0), True),
    ((0.5, 0.9), False),
    ((0.0, 1.0), False),
])
def test_validate_weights(weights, ok):
    assert validate_weights(GopLayout((1,) * len(weights), weights)) is ok


def test_default_weights_are_frame_weights():
    assert GopLayout((1, 1, 1, 1)).weights == (1 / 8, 1 / 4, 1 / 2, 1.0)
    assert frame_weights(1) == (1.0,)


def test_layout_invariants():
    with pytest.raises(ContractViolation):
        GopLayout((1, 0))
    with pytest.raises(ContractViolation):
        GopLayout((1, 1), (1.0,))
    with pytest.raises(ContractViolation):
        GopLayout(())
    assert GopLayout.with_throughput_weights((4, 6)).weights == (0.4, 1.0)


def test_policy_and_reception_contracts():
    p = TxPolicy((3, 3))
    assert p.budget == 6
    assert p.schedule() == [1, 1, 1, 2, 2, 2]
    with pytest.raises(ContractViolation):
        TxPolicy((1, -1))
    with pytest.raises(ContractViolation):
        ReceptionVector((4, 0)).check_against(p)
    with pytest.raises(ContractViolation):
        p.check_for(GopLayout((1, 1, 1)))
    with pytest.raises(ContractViolation):
        p.check_for(GopLayout((1, 1)), budget=5)


def test_channel_spec_contract():
    assert ChannelSpec((0.1, 0.2), seed=5).user_count == 2
    for bad in ((1.0,), (-0.1,), ()):
        with pytest.raises(ContractViolation):
            ChannelSpec(bad)
    with pytest.raises(ContractViolation):
        ChannelSpec((0.1,), seed=-1)


def test_decoding_steps_trace():
    steps = decoding_steps(K4, (4, 3, 1, 3))
    assert steps == [(None, 4, 5, False, 0), (0, 7, 6, True, 2), (2, 1, 2, False, 0), (2, 4, 5, False, 0)]


@given(layouts, st.data())
def test_decoding_steps_agree_with_l_max(k, data):
    nr = data.draw(st.lists(st.integers(0, 8), min_size=len(k), max_size=len(k)))
    assert max(d for *_, d in decoding_steps(k, nr)) == l_max(k, nr)
