"""Seeded Bernoulli erasure channels and Monte-Carlo replay of designed policies.

Patterns come from numpy's PCG64 seeded through ``SeedSequence(seed,
spawn_key=(user, stream))``; a slot is delivered with probability ``1 - pe``.
Feedback-free policies are replayed in window order (all W_1 packets, then
W_2, ...); full-feedback policies follow the solved action table.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .core import ChannelSpec, ContractViolation, GopLayout, TxPolicy
from .mdp import MdpSolution

RNG_NAME = "numpy.PCG64/SeedSequence(seed, spawn_key=(user, stream))"


@dataclass(frozen=True, eq=False)
class SimResult:
    per_gop_decoded_layers: np.ndarray  # (gop_count, trials)
    mean_metric: float
    std_error: float
    seed: int
    trials: int
    user: int = 0
    rng: str = RNG_NAME


def generate_pattern(spec: ChannelSpec, user: int, slots: int, stream: int = 0) -> np.ndarray:
    if not 0 <= user < spec.user_count:
        raise ContractViolation(f"user {user} outside 0..{spec.user_count - 1}")
    if slots < 0:
        raise ContractViolation(f"negative slot count {slots}")
    ss = np.random.SeedSequence(spec.seed, spawn_key=(int(user), int(stream)))
    rng = np.random.Generator(np.random.PCG64(ss))
    return rng.random(slots) >= spec.per_user_pe[user]


def _slice(layout: GopLayout, n_t: int, slots) -> np.ndarray:
    arr = np.asarray(slots, dtype=bool)
    if arr.shape[-1] != n_t:
        raise ContractViolation(f"slice has {arr.shape[-1]} slots, budget is {n_t}")
    return arr


def apply_policy(layout: GopLayout, policy: TxPolicy, slots) -> int:
    policy.check_for(layout)
    arr = _slice(layout, policy.budget, slots)
    return int(kernels.replay_open_loop(layout.as_array(), np.asarray(policy.allocation),
                                        arr[None, :].astype(np.uint8))[0])


def apply_mdp_policy(layout: GopLayout, solution: MdpSolution, slots, pe=None):
    """Decoded layers after following ``solution`` over one GOP's slots.

    ``slots`` is (N_t,) for a single-user solution or (n_users, N_t) for a
    joint one; the latter returns one count per user.
    """
    if solution.layout.packets != layout.packets:
        raise ContractViolation("solution was built for a different layout")
    arr = _slice(layout, solution.horizon, slots)
    single = arr.ndim == 1
    arr = arr.reshape(-1, 1, solution.horizon)
    if arr.shape[0] != solution.n_users:
        raise ContractViolation(f"need slots for {solution.n_users} users")
    out = _replay_feedback(solution, arr)[:, 0]
    return int(out[0]) if single else out


def _replay_feedback(solution: MdpSolution, delivered: np.ndarray) -> np.ndarray:
    space = solution.space
    return kernels.replay_feedback(space.succ, solution.policy, space.start, space.levels,
                                   delivered.astype(np.uint8))


def _summarise(levels: np.ndarray, weights, seed: int, user: int) -> SimResult:
    # levels: (trials, gops)
    c = np.concatenate(([0.0], np.asarray(weights, dtype=float)))
    per_trial = c[levels].mean(axis=1)
    trials = per_trial.size
    se = float(per_trial.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return SimResult(np.ascontiguousarray(levels.T), float(per_trial.mean()), se, seed, trials, user)


def replay_uncoded(layout: GopLayout, policy: TxPolicy, delivered) -> np.ndarray:
    """Decoded layers per row when each layer's slots cycle round-robin over
    its uncoded packets; a layer counts only if all lower layers did."""
    delivered = np.asarray(delivered, dtype=bool)
    n = delivered.shape[0]
    ok = np.ones(n, dtype=bool)
    levels = np.zeros(n, dtype=np.int64)
    slot = 0
    for layer, (k, n_l) in enumerate(zip(layout.packets, policy.allocation), start=1):
        block = delivered[:, slot:slot + n_l]
        slot += n_l
        got = np.ones(n, dtype=bool)
        for j in range(k):
            got &= block[:, j::k].any(axis=1)
        ok &= got
        levels[ok] = layer
    return levels


def replay_levels(layout: GopLayout, plan, delivered, scheme: str = "rlnc") -> np.ndarray:
    """Decoded layer counts for a batch of patterns.

    ``delivered`` is (n_users, n, N_t).  A joint MDP solution reacts to all
    users at once; any other plan treats each user separately.  Returns
    (n_users, n).
    """
    delivered = np.asarray(delivered, dtype=bool)
    n_users, n, n_t = delivered.shape
    if isinstance(plan, TxPolicy):
        plan.check_for(layout, n_t)
        if scheme == "uncoded":
            return np.stack([replay_uncoded(layout, plan, d) for d in delivered])
        if scheme != "rlnc":
            raise ContractViolation(f"scheme {scheme!r} cannot replay a feedback-free policy")
        flat = delivered.reshape(n_users * n, n_t).astype(np.uint8)
        lv = kernels.replay_open_loop(layout.as_array(), np.asarray(plan.allocation), flat)
        return lv.reshape(n_users, n)
    if isinstance(plan, MdpSolution):
        if plan.horizon != n_t:
            raise ContractViolation(f"solution horizon {plan.horizon} != budget {n_t}")
        if plan.layout.packets != layout.packets:
            raise ContractViolation("solution was built for a different layout")
        if plan.n_users == 1:
            return np.stack([_replay_feedback(plan, d[None])[0] for d in delivered])
        if plan.n_users != n_users:
            raise ContractViolation(
                f"joint solution covers {plan.n_users} users, got patterns for {n_users}")
        return _replay_feedback(plan, delivered)
    raise ContractViolation(f"cannot replay plan of type {type(plan).__name__}")


def monte_carlo(layout: GopLayout, plan, spec: ChannelSpec, user: int, n_t: int,
                trials: int = 100, weights=None, gop_count: int = 1, stream: int = 0,
                scheme: str = "rlnc") -> SimResult:
    """Average weighted decoded-layer metric over simulated erasure patterns.

    ``plan`` is a :class:`TxPolicy` or an :class:`MdpSolution`.  A joint
    solution for several users is replayed against every user's pattern (the
    sender reacts to all of them) and the result for ``user`` is returned.
    """
    users = [user]
    if isinstance(plan, MdpSolution) and plan.n_users > 1:
        users = None
    res = monte_carlo_all(layout, plan, spec, n_t, trials, weights, gop_count, stream,
                          users=users, scheme=scheme)
    return next(r for r in res if r.user == user)


def monte_carlo_all(layout: GopLayout, plan, spec: ChannelSpec, n_t: int, trials: int = 100,
                    weights=None, gop_count: int = 1, stream: int = 0, users=None,
                    scheme: str = "rlnc") -> list[SimResult]:
    if trials < 1:
        raise ContractViolation(f"trials must be >= 1, got {trials}")
    if gop_count < 1:
        raise ContractViolation(f"gop_count must be >= 1, got {gop_count}")
    weights = layout.weights if weights is None else tuple(weights)
    users = list(range(spec.user_count)) if users is None else list(users)
    slots = trials * gop_count * n_t
    delivered = np.stack([generate_pattern(spec, u, slots, stream).reshape(trials * gop_count, n_t)
                          for u in users])
    levels = replay_levels(layout, plan, delivered, scheme)
    return [_summarise(lv.reshape(trials, gop_count), weights, spec.seed, u)
            for u, lv in zip(users, levels)]
