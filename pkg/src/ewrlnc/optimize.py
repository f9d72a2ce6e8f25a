"""Exhaustive feedback-free policy search, aggregation across users, layer-count
selection and mean/fairness trade-off sweeps."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from . import analytic, mdp
from .core import ContractViolation, GopLayout, TxPolicy

TIE_EPS = 1e-12
SCHEMES = ("rlnc", "uncoded", "mdp")
DEFAULT_LAMBDAS = tuple(round(0.02 * i, 2) for i in range(51))


def jain_index(values) -> float:
    """Jain's fairness index; an all-zero input counts as perfectly fair (1)."""
    z = np.asarray(values, dtype=float)
    if z.size == 0:
        raise ContractViolation("fairness of an empty vector")
    if np.any(z < 0):
        raise ContractViolation("fairness inputs must be nonnegative")
    sq = float(np.dot(z, z))
    if sq == 0.0:
        return 1.0
    return float(z.sum() ** 2 / (z.size * sq))


def _jain_rows(m: np.ndarray) -> np.ndarray:
    sq = np.einsum("ij,ij->i", m, m)
    s = m.sum(axis=1)
    out = np.ones(m.shape[0])
    nz = sq > 0
    out[nz] = s[nz] ** 2 / (m.shape[1] * sq[nz])
    return out


@dataclass(frozen=True)
class AggregateSpec:
    """How per-user metrics combine into one objective.

    kind is one of ``linear`` (needs ``weights``), ``mean``, ``jain`` or
    ``weighted_sum`` (``lam * mean + (1 - lam) * jain``).
    """

    kind: str = "mean"
    weights: tuple[float, ...] = ()
    lam: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "mean", "jain", "weighted_sum"):
            raise ContractViolation(f"unknown aggregate {self.kind!r}")
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.kind == "linear":
            if not self.weights or any(w < 0 for w in self.weights) \
                    or abs(sum(self.weights) - 1.0) > 1e-9:
                raise ContractViolation(f"linear weights {self.weights} must be >= 0 and sum to 1")
        if self.kind == "weighted_sum" and not 0.0 <= self.lam <= 1.0:
            raise ContractViolation(f"lambda {self.lam} outside [0, 1]")

    @classmethod
    def linear(cls, weights) -> "AggregateSpec":
        return cls("linear", tuple(weights))

    @classmethod
    def weighted_sum(cls, lam: float) -> "AggregateSpec":
        return cls("weighted_sum", lam=float(lam))

    def user_weights(self, n_users: int) -> tuple[float, ...]:
        """Linear weights equivalent to this aggregate (mean or linear only)."""
        if self.kind == "mean":
            return tuple(1.0 / n_users for _ in range(n_users))
        if self.kind == "linear":
            if len(self.weights) != n_users:
                raise ContractViolation(f"{len(self.weights)} weights for {n_users} users")
            return self.weights
        raise ContractViolation(f"aggregate {self.kind!r} is not linear in the users")

    def apply(self, m: np.ndarray) -> np.ndarray:
        """Aggregate every row of a (candidates, users) matrix."""
        m = np.atleast_2d(np.asarray(m, dtype=float))
        if self.kind == "linear":
            return m @ np.asarray(self.user_weights(m.shape[1]))
        if self.kind == "mean":
            return m.mean(axis=1)
        if self.kind == "jain":
            return _jain_rows(m)
        return self.lam * m.mean(axis=1) + (1.0 - self.lam) * _jain_rows(m)

    def __call__(self, values) -> float:
        return float(self.apply(np.asarray(values, dtype=float)[None, :])[0])


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=64)
def _policies(L: int, n_t: int) -> tuple[TxPolicy, ...]:
    return tuple(TxPolicy(c) for c in _compositions(n_t, L))


def enumerate_policies(L: int, n_t: int) -> list[TxPolicy]:
    """Every split of ``n_t`` transmissions over ``L`` windows, largest ``n_1`` first."""
    if L < 1 or n_t < 0:
        raise ContractViolation(f"need L >= 1 and N_t >= 0, got L={L}, N_t={n_t}")
    return list(_policies(int(L), int(n_t)))


def _metric(scheme: str):
    if scheme == "rlnc":
        return analytic.eta
    if scheme == "uncoded":
        return analytic.uncoded_eta
    raise ContractViolation(f"scheme {scheme!r} has no closed-form metric")


@lru_cache(maxsize=256)
def _eta_column(layout: GopLayout, pe: float, n_t: int, scheme: str) -> np.ndarray:
    f = _metric(scheme)
    return np.array([f(layout, p, pe) for p in enumerate_policies(layout.layer_count, n_t)])


def eta_table(layout: GopLayout, pes: Sequence[float], n_t: int, scheme: str = "rlnc") -> np.ndarray:
    """(policies, users) matrix of per-user metrics, rows in enumeration order."""
    cols = [_eta_column(layout, float(pe), int(n_t), scheme) for pe in pes]
    return np.stack(cols, axis=1)


def _first_best(scores: np.ndarray) -> int:
    return int(np.argmax(scores >= scores.max() - TIE_EPS))


def optimize_single(layout: GopLayout, pe: float, n_t: int, scheme: str = "rlnc") -> tuple[TxPolicy, float]:
    scores = eta_table(layout, [pe], n_t, scheme)[:, 0]
    i = _first_best(scores)
    return enumerate_policies(layout.layer_count, n_t)[i], float(scores[i])


class Design(NamedTuple):
    policy: TxPolicy
    eta: float
    per_user: np.ndarray


def optimize_multi(layout: GopLayout, pes: Sequence[float], n_t: int,
                   agg: AggregateSpec | None = None, scheme: str = "rlnc") -> Design:
    agg = agg or AggregateSpec()
    table = eta_table(layout, pes, n_t, scheme)
    scores = agg.apply(table)
    i = _first_best(scores)
    return Design(enumerate_policies(layout.layer_count, n_t)[i], float(scores[i]), table[i].copy())


@dataclass(frozen=True, eq=False)
class ParetoPoint:
    lam: float
    policy: TxPolicy
    mean_eta: float
    fairness: float
    per_user_eta: np.ndarray
    layer_count: int
    degenerate_fairness: bool = field(default=False)


def nondominated(points: Sequence[ParetoPoint]) -> list[ParetoPoint]:
    """Points no other point beats in (mean, fairness); sorted by mean ascending.

    Duplicates of the same (layer count, policy) are kept once, first wins.
    """
    seen = {}
    for p in points:
        seen.setdefault((p.layer_count, p.policy.allocation), p)
    uniq = list(seen.values())
    keep = []
    for p in uniq:
        dominated = any(
            (q.mean_eta >= p.mean_eta and q.fairness >= p.fairness)
            and (q.mean_eta > p.mean_eta or q.fairness > p.fairness)
            for q in uniq)
        if not dominated:
            keep.append(p)
    keep.sort(key=lambda p: (p.mean_eta, -p.fairness))
    return keep


def _candidates(layouts) -> list[GopLayout]:
    if isinstance(layouts, GopLayout):
        return [layouts]
    out = list(layouts)
    if not out:
        raise ContractViolation("no candidate layouts")
    return out


def _pick_layout(scores: Sequence[float], cands: Sequence[GopLayout]) -> int:
    best = max(scores)
    ok = [i for i, s in enumerate(scores) if s >= best - TIE_EPS]
    return min(ok, key=lambda i: (cands[i].layer_count, i))


def pareto_sweep(layouts, pes: Sequence[float], n_t: int, lambda_grid=None,
                 scheme: str = "rlnc") -> tuple[list[ParetoPoint], list[ParetoPoint]]:
    """Weighted-sum sweep of mean vs Jain fairness.

    ``layouts`` may be one layout or several candidates; with several, each
    lambda picks the best candidate (opt-layer).  Returns every sweep point
    and the nondominated subset.
    """
    cands = _candidates(layouts)
    grid = DEFAULT_LAMBDAS if lambda_grid is None else tuple(float(x) for x in lambda_grid)
    if any(not 0.0 <= x <= 1.0 for x in grid):
        raise ContractViolation("lambda grid must lie in [0, 1]")
    tables = [eta_table(c, pes, n_t, scheme) for c in cands]
    points = []
    for lam in grid:
        agg = AggregateSpec.weighted_sum(lam)
        best_i = [_first_best(agg.apply(t)) for t in tables]
        scores = [float(agg.apply(t[i])[0]) for t, i in zip(tables, best_i)]
        c = _pick_layout(scores, cands)
        row = tables[c][best_i[c]]
        points.append(ParetoPoint(
            lam=lam,
            policy=enumerate_policies(cands[c].layer_count, n_t)[best_i[c]],
            mean_eta=float(row.mean()),
            fairness=jain_index(row),
            per_user_eta=row.copy(),
            layer_count=cands[c].layer_count,
            degenerate_fairness=not np.any(row),
        ))
    return points, nondominated(points)


class LayerChoice(NamedTuple):
    layout: GopLayout
    policy: object
    eta: float
    per_user: np.ndarray


def design(layout: GopLayout, pes: Sequence[float], n_t: int,
           agg: AggregateSpec | None = None, scheme: str = "rlnc",
           cap: int = mdp.DEFAULT_CAP) -> LayerChoice:
    """Optimal design for one layout under any scheme.

    For ``mdp`` the policy is the solved :class:`~ewrlnc.mdp.MdpSolution`;
    the aggregate must then be linear in the users.
    """
    if scheme not in SCHEMES:
        raise ContractViolation(f"unknown scheme {scheme!r}")
    agg = agg or AggregateSpec()
    if scheme == "mdp":
        w = agg.user_weights(len(pes))
        sol = mdp.solve_multi(layout, pes, n_t, w, cap=cap)
        return LayerChoice(layout, sol, sol.eta, sol.per_user_eta())
    d = optimize_multi(layout, pes, n_t, agg, scheme)
    return LayerChoice(layout, d.policy, d.eta, d.per_user)


def select_opt_layer(candidates, pes, n_t: int, agg: AggregateSpec | None = None,
                     scheme: str = "rlnc", cap: int = mdp.DEFAULT_CAP) -> LayerChoice:
    """Best candidate layout for this budget; ties go to fewer layers."""
    cands = _candidates(candidates)
    if np.ndim(pes) == 0:
        pes = [float(pes)]
    results = [design(c, pes, n_t, agg, scheme, cap) for c in cands]
    return results[_pick_layout([r.eta for r in results], cands)]
