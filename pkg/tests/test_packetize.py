import pytest
from hypothesis import given, strategies as st

from ewrlnc.core import ContractViolation, validate_weights
from ewrlnc.packetize import (GopFrameSizes, InvalidLayoutError, bundled_trace_path,
                              candidate_layouts, layout_for, parse_trace, read_trace,
                              transmission_budget)

FLAT = GopFrameSizes((1400,) * 8)


def test_flat_gop():
    assert layout_for(FLAT, 2).packets == (4, 4)
    assert layout_for(FLAT, 1).packets == (8,)
    assert layout_for(FLAT, 3).packets == (2, 2, 4)
    assert layout_for(FLAT, 4).packets == (1, 1, 2, 4)


def test_tiny_frames():
    g = GopFrameSizes((1,) * 8)
    for L in (1, 2, 3, 4):
        assert layout_for(g, L).packets == (1,) * L


def test_frame_groups():
    g = GopFrameSizes((10, 20, 30, 40, 50, 60, 70, 80), packet_len=11, header_len=1)
    assert layout_for(g, 4).packets == (8, 4, 8, 16)
    assert layout_for(g, 3).packets == (12, 8, 16)
    assert layout_for(g, 2).packets == (20, 16)
    assert layout_for(g, 1).packets == (36,)


def test_weights_conventions():
    assert layout_for(FLAT, 3).weights == (0.25, 0.5, 1.0)
    assert layout_for(FLAT, 2, "throughput").weights == (0.5, 1.0)
    with pytest.raises(ContractViolation):
        layout_for(FLAT, 2, "psnr")


def test_empty_layer_rejected():
    g = GopFrameSizes((100, 0, 100, 0, 100, 0, 100, 5000))
    with pytest.raises(InvalidLayoutError):
        layout_for(g, 4)
    assert [l.layer_count for l in candidate_layouts(g)] == [1, 2]


def test_bad_inputs():
    with pytest.raises(ContractViolation):
        layout_for(FLAT, 5)
    with pytest.raises(ContractViolation):
        GopFrameSizes((1,) * 7)
    with pytest.raises(ContractViolation):
        GopFrameSizes((1,) * 8, packet_len=100, header_len=100)


def test_budget():
    assert transmission_budget(8, 30, 4.5e6, 12000) == 100
    assert transmission_budget(8, 30, 30 * 12000 / 8, 12000) == 1
    assert transmission_budget(8, 30, 9e6, 12000) == 200
    with pytest.raises(ContractViolation):
        transmission_budget(8, 0, 1e6, 12000)


frames = st.lists(st.integers(1, 20000), min_size=8, max_size=8)


@given(frames, st.integers(200, 1500))
def test_layout_invariants(sizes, payload):
    g = GopFrameSizes(sizes, packet_len=payload + 100)
    half = GopFrameSizes(sizes, packet_len=payload // 2 + 100)
    base = layout_for(g, 1).packets[0]
    for L in (1, 2, 3, 4):
        lay = layout_for(g, L)
        assert sum(lay.packets) >= base
        assert validate_weights(lay)
        assert all(a <= b for a, b in zip(lay.packets, layout_for(half, L).packets))


def test_trace_parsing():
    text = ["# comment", "", "1 2 3 4 5 6 7 8  # tail", "8 7 6 5 4 3 2 1"]
    gops = parse_trace(text)
    assert [g.sizes for g in gops] == [(1, 2, 3, 4, 5, 6, 7, 8), (8, 7, 6, 5, 4, 3, 2, 1)]
    with pytest.raises(ContractViolation, match="line 2"):
        parse_trace(["1 2 3 4 5 6 7 8", "1 2 3"])
    with pytest.raises(ContractViolation):
        parse_trace(["1 2 3 4 5 6 7 x"])


def test_bundled_trace():
    gops = read_trace(bundled_trace_path())
    assert len(gops) == 38
    for g in gops:
        assert len(candidate_layouts(g)) == 4
