"""Turn the encoded frame sizes of an 8-frame GOP into layer/packet layouts.

Frames are numbered 1..8 in display order.  Temporal layers group them as
``{8}``, ``{4}``, ``{2, 6}`` and the odd frames; fewer layers merge groups
from the least important end.  Each layer's bytes are aggregated and cut into
packets of ``packet_len - header_len`` payload bytes.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil
from pathlib import Path
from typing import Iterator

import numpy as np

from .core import ContractViolation, GopLayout, cumulative_weights, frame_weights

FRAMES_PER_GOP = 8
DEFAULT_PACKET_LEN = 1500
DEFAULT_HEADER_LEN = 100

# 1-based frame indices per layer, most important first
LAYER_FRAMES = {
    1: ((1, 2, 3, 4, 5, 6, 7, 8),),
    2: ((2, 4, 6, 8), (1, 3, 5, 7)),
    3: ((4, 8), (2, 6), (1, 3, 5, 7)),
    4: ((8,), (4,), (2, 6), (1, 3, 5, 7)),
}


class InvalidLayoutError(ContractViolation):
    """A layer of the requested split would hold no packets."""


@dataclass(frozen=True)
class GopFrameSizes:
    sizes: tuple[int, ...]
    packet_len: int = DEFAULT_PACKET_LEN
    header_len: int = DEFAULT_HEADER_LEN

    def __post_init__(self):
        sizes = tuple(int(m) for m in self.sizes)
        if len(sizes) != FRAMES_PER_GOP:
            raise ContractViolation(f"a GOP has {FRAMES_PER_GOP} frames, got {len(sizes)}")
        if any(m < 0 for m in sizes):
            raise ContractViolation(f"negative frame size in {sizes}")
        object.__setattr__(self, "sizes", sizes)
        if self.effective < 1:
            raise ContractViolation(
                f"header {self.header_len} leaves no payload in {self.packet_len}-byte packets")

    @property
    def effective(self) -> int:
        return self.packet_len - self.header_len


def layout_for(frames: GopFrameSizes, L: int, weights: str = "frame") -> GopLayout:
    if L not in LAYER_FRAMES:
        raise ContractViolation(f"layer count must be 1..4, got {L}")
    n_eff = frames.effective
    k = tuple(ceil(sum(frames.sizes[i - 1] for i in group) / n_eff) for group in LAYER_FRAMES[L])
    if any(v == 0 for v in k):
        raise InvalidLayoutError(f"{L}-layer split of {frames.sizes} leaves an empty layer: {k}")
    if weights == "frame":
        c = frame_weights(L)
    elif weights == "throughput":
        c = cumulative_weights(k)
    else:
        raise ContractViolation(f"unknown weight convention {weights!r}")
    return GopLayout(k, c)


def candidate_layouts(frames: GopFrameSizes, weights: str = "frame",
                      layer_counts=(1, 2, 3, 4)) -> list[GopLayout]:
    """Every valid layout for the given layer counts, skipping empty-layer splits."""
    out = []
    for L in layer_counts:
        try:
            out.append(layout_for(frames, L, weights))
        except InvalidLayoutError:
            continue
    return out


def transmission_budget(frames: int, frame_rate: float, bitrate: float, packet_bits: float) -> int:
    """Packets that fit in one GOP's airtime, rounded down."""
    if min(frames, frame_rate, bitrate, packet_bits) <= 0:
        raise ContractViolation("budget inputs must all be positive")
    return int((frames * bitrate) // (packet_bits * frame_rate))


def parse_trace(lines, packet_len: int = DEFAULT_PACKET_LEN,
                header_len: int = DEFAULT_HEADER_LEN) -> list[GopFrameSizes]:
    """One GOP per line: eight whitespace-separated byte counts; ``#`` starts a comment."""
    gops = []
    for lineno, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        fields = text.split()
        try:
            sizes = tuple(int(f) for f in fields)
        except ValueError:
            raise ContractViolation(f"trace line {lineno}: non-integer frame size") from None
        if len(sizes) != FRAMES_PER_GOP:
            raise ContractViolation(
                f"trace line {lineno}: expected {FRAMES_PER_GOP} sizes, got {len(sizes)}")
        gops.append(GopFrameSizes(sizes, packet_len, header_len))
    return gops


def read_trace(path, packet_len: int = DEFAULT_PACKET_LEN,
               header_len: int = DEFAULT_HEADER_LEN) -> list[GopFrameSizes]:
    with open(path) as fh:
        return parse_trace(fh, packet_len, header_len)


def synthetic_trace(gop_count: int, seed: int = 0) -> Iterator[tuple[int, ...]]:
    """Frame sizes shaped like a CIF temporal-scalable stream.

    The anchor frame (8) is large, frame 4 medium, frames 2 and 6 smaller and
    the odd frames smallest; sizes carry lognormal jitter.
    """
    rng = np.random.default_rng(seed)
    typical = np.array([700, 1500, 700, 2600, 700, 1500, 700, 5200], dtype=float)
    for g in range(gop_count):
        scale = typical.copy()
        if g % 4 == 0:
            scale[7] *= 2.2  # periodic intra refresh
        yield tuple(int(v) for v in np.round(scale * rng.lognormal(0.0, 0.25, FRAMES_PER_GOP)))


def bundled_trace_path() -> Path:
    return Path(__file__).with_name("data") / "synthetic_cif.trace"
