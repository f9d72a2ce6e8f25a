"""Domain types and the highest-decodable-layer rule for expanding-window RLNC.

A GOP is split into ``L`` importance-ordered layers holding ``k_1..k_L``
packets.  Coding window ``W_l`` spans layers ``1..l``; a coded packet from
``W_l`` can help decode any layer up to ``l``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class ContractViolation(ValueError):
    """Raised when a caller breaks an operation's precondition."""


class ResourceLimitError(RuntimeError):
    """Raised when a computation would exceed a configured size cap."""

    def __init__(self, what: str, size: int, cap: int):
        super().__init__(f"{what}: {size} exceeds cap {cap}")
        self.what = what
        self.size = size
        self.cap = cap


def frame_weights(layer_count: int) -> tuple[float, ...]:
    """Decoded-frame weights ``c_l = 2**(l - L)`` for a temporally layered GOP."""
    return tuple(2.0 ** (l - layer_count) for l in range(1, layer_count + 1))


def cumulative_weights(packets: Sequence[int]) -> tuple[float, ...]:
    """Throughput weights: fraction of the GOP's packets held by layers ``1..l``."""
    total = sum(packets)
    acc = 0
    out = []
    for k in packets:
        acc += k
        out.append(acc / total)
    return tuple(out)


@dataclass(frozen=True)
class GopLayout:
    packets: tuple[int, ...]
    weights: tuple[float, ...] = ()

    def __post_init__(self):
        packets = tuple(int(k) for k in self.packets)
        object.__setattr__(self, "packets", packets)
        if not packets:
            raise ContractViolation("layout needs at least one layer")
        if any(k < 1 for k in packets):
            raise ContractViolation(f"every layer needs >= 1 packet, got {packets}")
        if not self.weights:
            object.__setattr__(self, "weights", frame_weights(len(packets)))
        else:
            object.__setattr__(self, "weights", tuple(float(c) for c in self.weights))
        if len(self.weights) != len(packets):
            raise ContractViolation(
                f"{len(self.weights)} weights for {len(packets)} layers")

    @classmethod
    def with_throughput_weights(cls, packets: Sequence[int]) -> "GopLayout":
        return cls(tuple(packets), cumulative_weights(packets))

    @property
    def layer_count(self) -> int:
        return len(self.packets)

    @property
    def total_packets(self) -> int:
        return sum(self.packets)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.packets, dtype=np.int64)


@dataclass(frozen=True)
class TxPolicy:
    """Feedback-free policy: number of coded packets sent from each window."""

    allocation: tuple[int, ...]

    def __post_init__(self):
        alloc = tuple(int(n) for n in self.allocation)
        if any(n < 0 for n in alloc):
            raise ContractViolation(f"negative allocation {alloc}")
        object.__setattr__(self, "allocation", alloc)

    @property
    def budget(self) -> int:
        return sum(self.allocation)

    def __len__(self):
        return len(self.allocation)

    def schedule(self) -> list[int]:
        """Open-loop transmission order (1-based windows): all of W_1 first, then W_2, ..."""
        out = []
        for window, n in enumerate(self.allocation, start=1):
            out.extend([window] * n)
        return out

    def check_for(self, layout: GopLayout, budget: int | None = None) -> None:
        if len(self.allocation) != layout.layer_count:
            raise ContractViolation(
                f"policy has {len(self.allocation)} windows, layout has {layout.layer_count} layers")
        if budget is not None and self.budget != budget:
            raise ContractViolation(f"policy spends {self.budget}, budget is {budget}")


@dataclass(frozen=True)
class ReceptionVector:
    received: tuple[int, ...]

    def __post_init__(self):
        rx = tuple(int(n) for n in self.received)
        if any(n < 0 for n in rx):
            raise ContractViolation(f"negative reception count {rx}")
        object.__setattr__(self, "received", rx)

    def check_against(self, policy: TxPolicy) -> None:
        if len(self.received) != len(policy.allocation):
            raise ContractViolation("reception and policy lengths differ")
        for r, n in zip(self.received, policy.allocation):
            if r > n:
                raise ContractViolation(
                    f"received {self.received} exceeds transmitted {policy.allocation}")


@dataclass(frozen=True)
class ChannelSpec:
    per_user_pe: tuple[float, ...]
    seed: int = 0
    rng_name: str = field(default="numpy.PCG64/SeedSequence", compare=False)

    def __post_init__(self):
        pes = tuple(float(p) for p in self.per_user_pe)
        if not pes:
            raise ContractViolation("channel needs at least one user")
        for p in pes:
            if not 0.0 <= p < 1.0:
                raise ContractViolation(f"packet error rate {p} outside [0, 1)")
        if not 0 <= int(self.seed) < 2**64:
            raise ContractViolation(f"seed {self.seed} is not a 64-bit unsigned integer")
        object.__setattr__(self, "per_user_pe", pes)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def user_count(self) -> int:
        return len(self.per_user_pe)


def _as_counts(rx) -> tuple[int, ...]:
    if isinstance(rx, ReceptionVector):
        return rx.received
    if isinstance(rx, TxPolicy):
        return rx.allocation
    return tuple(int(n) for n in rx)


def _as_packets(layout) -> tuple[int, ...]:
    if isinstance(layout, GopLayout):
        return layout.packets
    return tuple(int(k) for k in layout)


def _checked(layout, rx) -> tuple[tuple[int, ...], tuple[int, ...]]:
    k = _as_packets(layout)
    n = _as_counts(rx)
    if len(k) != len(n):
        raise ContractViolation(f"layout has {len(k)} layers, reception has {len(n)}")
    if any(v < 0 for v in n):
        raise ContractViolation(f"negative reception count {n}")
    return k, n


def decoding_steps(layout, rx) -> list[tuple[int | None, int, int, bool, int]]:
    """Per-window trace of the decodability test.

    One ``(b, received, needed, ok, D)`` tuple per window: ``b`` is the
    largest window decoded before it (None for window 1), ``received`` and
    ``needed`` are the sums over windows ``b+1..l`` and ``D`` is ``l`` or 0.
    """
    k, n = _checked(layout, rx)
    steps, b = [], 0
    for layer in range(1, len(k) + 1):
        got, need = sum(n[b:layer]), sum(k[b:layer])
        ok = got >= need
        steps.append((b if layer > 1 else None, got, need, ok, layer if ok else 0))
        if ok:
            b = layer
    return steps


def l_max(layout, rx) -> int:
    """Highest decodable layer given per-window reception counts.

    Walks the windows in order keeping ``b``, the largest window decoded so
    far; window ``l`` decodes when the packets received from windows
    ``b+1..l`` cover the packets of layers ``b+1..l``.  Excess packets from
    an already-decoded window are wasted.  Returns 0 if nothing decodes.
    """
    k, n = _checked(layout, rx)
    best = 0
    need = have = 0
    for layer in range(len(k)):
        need += k[layer]
        have += n[layer]
        if have >= need:
            best = layer + 1
            need = have = 0
    return best


def validate_weights(layout: GopLayout) -> bool:
    c = layout.weights
    if len(c) != len(layout.packets):
        return False
    if any(not (0.0 < w <= 1.0) for w in c):
        return False
    if any(b < a for a, b in zip(c, c[1:])):
        return False
    return c[-1] == 1.0
