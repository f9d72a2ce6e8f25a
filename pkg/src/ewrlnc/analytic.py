"""Closed-form performance of feedback-free policies, RLNC and uncoded."""
from __future__ import annotations

from functools import lru_cache
from math import comb

import numpy as np

from ._backend import kernels
from .core import ContractViolation, GopLayout, ReceptionVector, TxPolicy, cumulative_weights

PROB_SLACK = 1e-12


def _check_pe(pe: float) -> float:
    pe = float(pe)
    if not 0.0 <= pe < 1.0:
        raise ContractViolation(f"packet error rate {pe} outside [0, 1)")
    return pe


def _alloc(policy) -> tuple[int, ...]:
    if isinstance(policy, TxPolicy):
        return policy.allocation
    return TxPolicy(tuple(policy)).allocation


@lru_cache(maxsize=4096)
def binomial_pmf(n: int, pe: float) -> tuple[float, ...]:
    """P(r of n packets arrive) for r = 0..n; ``0**0`` is 1."""
    q = 1.0 - pe
    return tuple(comb(n, r) * q**r * pe ** (n - r) for r in range(n + 1))


def _pmf_table(alloc: tuple[int, ...], pe: float) -> np.ndarray:
    table = np.zeros((len(alloc), max(alloc) + 1))
    for row, n in enumerate(alloc):
        table[row, : n + 1] = binomial_pmf(n, pe)
    return table


def reception_prob(policy, rx, pe: float) -> float:
    alloc = _alloc(policy)
    received = rx.received if isinstance(rx, ReceptionVector) else tuple(int(r) for r in rx)
    ReceptionVector(received).check_against(TxPolicy(alloc))
    pe = _check_pe(pe)
    out = 1.0
    for n, r in zip(alloc, received):
        out *= binomial_pmf(n, pe)[r]
    return out


def layer_decoding_probs(layout: GopLayout, policy, pe: float) -> np.ndarray:
    """Probability that the highest decodable layer is exactly ``l``, l = 1..L.

    The remainder ``1 - sum`` is the probability that nothing decodes.
    """
    alloc = _alloc(policy)
    if len(alloc) != layout.layer_count:
        raise ContractViolation(
            f"policy has {len(alloc)} windows, layout has {layout.layer_count} layers")
    pe = _check_pe(pe)
    return kernels.layer_probs(layout.as_array(), np.asarray(alloc, dtype=np.int64),
                               _pmf_table(alloc, pe))


def eta(layout: GopLayout, policy, pe: float) -> float:
    """Expected weighted decoded-layer metric of a feedback-free RLNC policy."""
    probs = layer_decoding_probs(layout, policy, pe)
    return float(np.dot(layout.weights, probs))


def throughput_weights(layout) -> tuple[float, ...]:
    packets = layout.packets if isinstance(layout, GopLayout) else tuple(layout)
    return cumulative_weights(packets)


def uncoded_layer_success(k: int, n_t: int, pe: float) -> float:
    """P(all ``k`` packets of a layer arrive when ``n_t`` uncoded slots go to it
    round-robin)."""
    if k < 1 or n_t < 0:
        raise ContractViolation(f"need k >= 1 and n_t >= 0, got k={k}, n_t={n_t}")
    pe = _check_pe(pe)
    b, extra = divmod(n_t, k)
    return (1.0 - pe**b) ** (k - extra) * (1.0 - pe ** (b + 1)) ** extra


def uncoded_layer_probs(layout: GopLayout, policy, pe: float) -> np.ndarray:
    alloc = _alloc(policy)
    if len(alloc) != layout.layer_count:
        raise ContractViolation(
            f"policy has {len(alloc)} windows, layout has {layout.layer_count} layers")
    p = [uncoded_layer_success(k, n, pe) for k, n in zip(layout.packets, alloc)]
    L = layout.layer_count
    out = np.empty(L)
    prefix = 1.0
    for layer in range(L):
        prefix *= p[layer]
        out[layer] = prefix * (1.0 - p[layer + 1]) if layer < L - 1 else prefix
    return out


def uncoded_eta(layout: GopLayout, policy, pe: float) -> float:
    return float(np.dot(layout.weights, uncoded_layer_probs(layout, policy, pe)))
