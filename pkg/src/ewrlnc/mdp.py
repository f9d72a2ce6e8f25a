"""Full-feedback benchmark as a finite-horizon MDP solved by backward induction.

A single-user state is the deficit vector ``(d_1..d_L)``: how many more
independent packets each layer still needs.  States are numbered in mixed
radix with ``d_1`` as the most significant digit (radix ``k_l + 1``).  For
several users the joint index is again mixed radix, user 0 most significant,
so a value table reshapes to ``(S,) * n_users`` in C order.

Stage ``t`` means ``t`` transmissions to go; ``values[0]`` is the terminal
reward and ``policy[t]`` holds 1-based window indices (row 0 unused).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._backend import kernels
from .core import ContractViolation, GopLayout, ResourceLimitError

DEFAULT_CAP = 5_000_000
TIE_EPS = 1e-12

DeficitState = tuple
MultiUserState = tuple


def transition(layout: GopLayout, s: Sequence[int], action: int) -> tuple[int, ...]:
    """Deficits after a packet from window ``action`` (1-based) is received."""
    L = layout.layer_count
    if not 1 <= action <= L:
        raise ContractViolation(f"window index {action} outside 1..{L}")
    d = list(s)
    if len(d) != L:
        raise ContractViolation(f"state {tuple(s)} does not match {L} layers")
    for i in range(action - 1, -1, -1):
        if d[i] != 0:
            d[i] -= 1
            break
    return tuple(d)


def transition_prob_single(layout: GopLayout, s, s_next, action: int, pe: float) -> float:
    target = transition(layout, s, action)
    s, s_next = tuple(s), tuple(s_next)
    return (1.0 - pe) * (s_next == target) + pe * (s_next == s)


def decoded_layers(s: Sequence[int]) -> int:
    """Largest ``l`` whose layers ``1..l`` all have zero deficit."""
    top = 0
    for d in s:
        if d != 0:
            break
        top += 1
    return top


def terminal_reward_single(layout: GopLayout, s, rewards: Sequence[float] | None = None) -> float:
    rewards = layout.weights if rewards is None else rewards
    top = decoded_layers(s)
    return float(rewards[top - 1]) if top else 0.0


class StateSpace:
    """Enumerated single-user deficit states for one layout."""

    def __init__(self, layout: GopLayout):
        self.layout = layout
        self.radices = tuple(k + 1 for k in layout.packets)
        self.size = int(np.prod(self.radices))
        self.states = np.indices(self.radices).reshape(layout.layer_count, -1).T
        strides = np.ones(layout.layer_count, dtype=np.int64)
        for i in range(layout.layer_count - 2, -1, -1):
            strides[i] = strides[i + 1] * self.radices[i + 1]
        self.strides = strides
        L = layout.layer_count
        succ = np.empty((self.size, L), dtype=np.int64)
        for a in range(L):
            nxt = self.states.copy()
            # decrement the largest nonzero deficit among windows 1..a+1
            active = nxt[:, : a + 1] != 0
            has = active.any(axis=1)
            last = a - np.argmax(active[:, ::-1], axis=1)
            rows = np.nonzero(has)[0]
            nxt[rows, last[rows]] -= 1
            succ[:, a] = nxt @ strides
        self.succ = succ
        zero_prefix = np.cumprod(self.states == 0, axis=1)
        self.levels = zero_prefix.sum(axis=1).astype(np.int64)
        self.start = self.index(layout.packets)

    def index(self, s: Sequence[int]) -> int:
        s = tuple(int(v) for v in s)
        if len(s) != self.layout.layer_count or any(
                not 0 <= d <= k for d, k in zip(s, self.layout.packets)):
            raise ContractViolation(f"state {s} outside the layout's deficit box")
        return int(np.dot(s, self.strides))

    def state(self, idx: int) -> tuple[int, ...]:
        return tuple(int(v) for v in self.states[idx])

    def terminal(self, rewards: Sequence[float]) -> np.ndarray:
        r = np.concatenate(([0.0], np.asarray(rewards, dtype=float)))
        return r[self.levels]


@dataclass(frozen=True, eq=False)
class MdpSolution:
    layout: GopLayout
    pes: tuple[float, ...]
    user_weights: tuple[float, ...]
    rewards: tuple[float, ...]
    horizon: int
    values: np.ndarray
    policy: np.ndarray
    space: StateSpace

    @property
    def n_users(self) -> int:
        return len(self.pes)

    @property
    def start_index(self) -> int:
        idx = 0
        for _ in range(self.n_users):
            idx = idx * self.space.size + self.space.start
        return idx

    @property
    def eta(self) -> float:
        return float(self.values[self.horizon, self.start_index])

    def joint_index(self, states) -> int:
        if self.n_users == 1 and states and not isinstance(states[0], (tuple, list)):
            states = (states,)
        if len(states) != self.n_users:
            raise ContractViolation(f"expected {self.n_users} user states")
        idx = 0
        for s in states:
            idx = idx * self.space.size + self.space.index(s)
        return idx

    def action(self, t: int, states) -> int:
        if not 1 <= t <= self.horizon:
            raise ContractViolation(f"stage {t} outside 1..{self.horizon}")
        return int(self.policy[t, self.joint_index(states)])

    def value(self, t: int, states) -> float:
        return float(self.values[t, self.joint_index(states)])

    def per_user_eta(self) -> np.ndarray:
        """Each user's expected terminal reward under the solved joint policy."""
        return evaluate_policy(self)


def _check_rewards(layout: GopLayout, rewards) -> tuple[float, ...]:
    rewards = tuple(float(r) for r in (layout.weights if rewards is None else rewards))
    if len(rewards) != layout.layer_count:
        raise ContractViolation(f"{len(rewards)} rewards for {layout.layer_count} layers")
    if any(b < a for a, b in zip(rewards, rewards[1:])) or any(r < 0 for r in rewards):
        warnings.warn(f"rewards {rewards} are not nonnegative and nondecreasing", stacklevel=3)
    return rewards


def _check_cap(what: str, states: int, horizon: int, cap: int) -> None:
    entries = states * max(horizon, 1)
    if entries > cap:
        raise ResourceLimitError(what, entries, cap)


def solve_single(layout: GopLayout, pe: float, horizon: int, rewards=None,
                 cap: int = DEFAULT_CAP) -> MdpSolution:
    if not 0.0 <= pe < 1.0:
        raise ContractViolation(f"packet error rate {pe} outside [0, 1)")
    if horizon < 0:
        raise ContractViolation(f"negative horizon {horizon}")
    rewards = _check_rewards(layout, rewards)
    size = int(np.prod([k + 1 for k in layout.packets]))
    _check_cap("single-user state-stage entries", size, horizon, cap)
    space = StateSpace(layout)
    values, policy = kernels.backward_single(space.succ, float(pe), space.terminal(rewards), horizon)
    return MdpSolution(layout, (float(pe),), (1.0,), rewards, horizon, values, policy, space)


def _expect(table: np.ndarray, succ_a: np.ndarray, pes: Sequence[float]) -> np.ndarray:
    """Expected next-stage value under one action, users independent."""
    out = table
    for axis, pe in enumerate(pes):
        out = (1.0 - pe) * np.take(out, succ_a, axis=axis) + pe * out
    return out


def solve_multi(layout: GopLayout, pes: Sequence[float], horizon: int,
                weights: Sequence[float] | None = None, rewards=None,
                cap: int = DEFAULT_CAP) -> MdpSolution:
    pes = tuple(float(p) for p in pes)
    n_u = len(pes)
    if n_u < 1:
        raise ContractViolation("need at least one user")
    if any(not 0.0 <= p < 1.0 for p in pes):
        raise ContractViolation(f"packet error rates {pes} outside [0, 1)")
    weights = tuple(1.0 / n_u for _ in pes) if weights is None else tuple(float(w) for w in weights)
    if len(weights) != n_u or any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-9:
        raise ContractViolation(f"user weights {weights} must be nonnegative and sum to 1")
    if horizon < 0:
        raise ContractViolation(f"negative horizon {horizon}")
    rewards = _check_rewards(layout, rewards)
    single = int(np.prod([k + 1 for k in layout.packets]))
    _check_cap(f"{n_u}-user state-stage entries", single**n_u, horizon, cap)

    space = StateSpace(layout)
    S = space.size
    shape = (S,) * n_u
    g = space.terminal(rewards)
    terminal = np.zeros(shape)
    for u, w in enumerate(weights):
        view = [1] * n_u
        view[u] = S
        terminal = terminal + w * g.reshape(view)

    L = layout.layer_count
    values = np.empty((horizon + 1, S**n_u))
    policy = np.zeros((horizon + 1, S**n_u), dtype=np.int8)
    values[0] = terminal.ravel()
    prev = terminal
    for t in range(1, horizon + 1):
        q = np.stack([_expect(prev, space.succ[:, a], pes) for a in range(L)])
        best = q.max(axis=0)
        choice = np.argmax(q >= best - TIE_EPS, axis=0)
        values[t] = best.ravel()
        policy[t] = (choice + 1).ravel()
        prev = best
    return MdpSolution(layout, pes, weights, rewards, horizon, values, policy, space)


def evaluate_policy(solution: MdpSolution) -> np.ndarray:
    """Per-user expected terminal reward when the joint policy is followed."""
    space = solution.space
    S, n_u, L = space.size, solution.n_users, solution.layout.layer_count
    shape = (S,) * n_u
    g = space.terminal(solution.rewards)
    out = np.empty(n_u)
    for u in range(n_u):
        view = [1] * n_u
        view[u] = S
        table = np.broadcast_to(g.reshape(view), shape).astype(float)
        for t in range(1, solution.horizon + 1):
            act = solution.policy[t].reshape(shape)
            nxt = np.empty(shape)
            for a in range(L):
                q = _expect(table, space.succ[:, a], solution.pes)
                mask = act == a + 1
                nxt[mask] = q[mask]
            table = nxt
        out[u] = table.ravel()[solution.start_index]
    return out


def evaluate_schedule(layout: GopLayout, pe: float, schedule: Sequence[int], rewards=None) -> float:
    """Value from the start state of a fixed, state-blind action sequence.

    ``schedule`` lists 1-based windows in transmission order.
    """
    rewards = _check_rewards(layout, rewards)
    space = StateSpace(layout)
    v = space.terminal(rewards)
    q = 1.0 - pe
    for a in reversed(list(schedule)):
        if not 1 <= a <= layout.layer_count:
            raise ContractViolation(f"window index {a} outside 1..{layout.layer_count}")
        v = q * v[space.succ[:, a - 1]] + pe * v
    return float(v[space.start])
