"""State-space compression: excessive-task counting, reduced and lean forms.

A task is *excessive* when it is guaranteed to expire unless offloaded: the
local processor serves at most one task per slot and deadline-1 tasks are
already beyond help, so a state whose first m deadlines hold more than m - 1
tasks carries doomed ones. Removing the minimal number of most-imminent tasks
that restores every prefix bound

    sum(s[:m]) <= m - 1   for m = 1..N

yields the *reduced* form. The *lean* form puts back a capped count per
deadline (just enough to dominate any single-arrival future) so that the
value of an arbitrary state equals the value of its lean form plus a closed
cost term (`g2m_cost`); the solver stores values for lean keys only.

Horizons shorter than the state dimension truncate: tasks with deadline
beyond the remaining horizon can never expire in time and are ignored.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import List, Tuple

from .model import ModelParams, State, offload_vector

ENUMERATION_MAX_N = 12


@dataclass(frozen=True)
class ReducedForm:
    reduced: State
    excessive_count: int


@dataclass(frozen=True)
class LeanForm:
    lean: State
    gammas: Tuple[int, ...]


@dataclass(frozen=True)
class FirstAmaDistribution:
    """Distribution of the first slot (0-based) with the relay agent present.

    per_slot[j] = p_u * (1 - p_u)**j for j = 0..N-1; tail is the probability
    the agent stays away for the first N slots.
    """

    per_slot: Tuple[float, ...]
    tail: float


def truncate(s: State, horizon: int) -> State:
    """Zero out components whose deadline exceeds min(N, horizon)."""
    cut = min(len(s), horizon)
    return s[:cut] + (0,) * (len(s) - cut)


def is_reduced(s: State) -> bool:
    acc = 0
    for m, c in enumerate(s, start=1):
        acc += c
        if acc > m - 1:
            return False
    return True


def excessive_count(s: State, horizon: int) -> int:
    """Minimal number of most-imminent offloads making the truncated state reduced.

    Offloading the L most imminent tasks turns each prefix sum p into
    max(p - L, 0), so the minimal L is the largest prefix excess p - (m - 1).
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    worst = 0
    acc = 0
    for m in range(1, min(len(s), horizon) + 1):
        acc += s[m - 1]
        worst = max(worst, acc - (m - 1))
    return worst


def reduce(s: State, horizon: int) -> ReducedForm:
    """Truncate to the horizon, then offload the excessive tasks."""
    t = truncate(s, horizon)
    lg = excessive_count(s, horizon)
    o = offload_vector(t, lg)
    return ReducedForm(tuple(a - b for a, b in zip(t, o)), lg)


def lean(s: State, horizon: int) -> LeanForm:
    """Lean form: component-wise max of the reduced form and the capped counts.

    gamma[j] keeps up to j - 1 - sum(gamma[:j]) tasks at deadline j + 1
    (nothing at deadline 1, nothing beyond the horizon); it is computed from
    the original counts, not the reduced ones.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    n = len(s)
    cut = min(n, horizon)
    gammas = [0] * n
    used = 0
    for j in range(2, cut + 1):
        g = min(s[j - 1], j - 1 - used)
        gammas[j - 1] = g
        used += g
    reduced = reduce(s, horizon).reduced
    out = tuple(max(g, r) for g, r in zip(gammas, reduced))
    return LeanForm(out, tuple(gammas))


def catalan(n: int) -> int:
    return comb(2 * n, n) // (n + 1)


def enumerate_reduced(N: int) -> List[State]:
    """All reduced states of dimension N in lexicographic order.

    The count equals the N-th Catalan number; N is capped to keep the
    enumeration practical.
    """
    if not 1 <= N <= ENUMERATION_MAX_N:
        raise ValueError(f"N must lie in 1..{ENUMERATION_MAX_N}, got {N}")
    out: List[State] = []

    def walk(prefix, acc):
        m = len(prefix)
        if m == N:
            out.append(tuple(prefix))
            return
        for c in range(m - acc + 1):  # keep acc + c <= (m + 1) - 1
            prefix.append(c)
            walk(prefix, acc + c)
            prefix.pop()

    walk([], 0)
    return out


def first_ama_distribution(params: ModelParams) -> FirstAmaDistribution:
    per_slot = tuple(params.p_u * (1.0 - params.p_u) ** j for j in range(params.N))
    return FirstAmaDistribution(per_slot, (1.0 - params.p_u) ** params.N)


def g2m_cost(s: State, leanform: LeanForm, params: ModelParams) -> float:
    """Exact cost gap between a state and its lean form (horizon >= N only).

    Every surplus task (present in s, absent from the lean form) is doomed:
    it is offloaded at C_o the first slot the relay agent shows up, or expires
    at C_p if the agent stays away past its deadline. Summing over the
    first-agent-arrival distribution gives the gap in closed form.
    """
    diff = [a - b for a, b in zip(s, leanform.lean)]
    if any(d < 0 for d in diff):
        raise ValueError(f"lean form {leanform.lean} exceeds state {s}")
    dist = first_ama_distribution(params)
    N = params.N
    offload_part = 0.0
    for i in range(1, N + 1):
        if diff[i - 1]:
            offload_part += diff[i - 1] * sum(dist.per_slot[:i])
    expire_part = 0.0
    for i in range(1, N):
        expire_part += dist.per_slot[i] * sum(diff[:i])
    expire_part += dist.tail * sum(diff)
    return params.C_o * offload_part + params.C_p * expire_part
