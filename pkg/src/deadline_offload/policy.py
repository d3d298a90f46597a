"""Optimal offload decisions, adjacency inference and the decision cache.

The optimal decision for any state splits in two: the excessive tasks that
the reduction identifies (offloaded unconditionally when the agent shows up)
plus the minimizer of the forced-offload curve of the reduced state. Only
reduced states ever need that minimizer, so a (state, horizon) -> decision
cache over the Catalan-sized reduced family answers every query.

Adjacency (one extra task no later than the most imminent deadline) links
neighbouring decisions: they differ by exactly one, or are both zero, which
lets whole chains be inferred from a single solved state and gives the cheap
offloading/non-offloading test via value gaps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from . import dp, statespace
from .model import ModelParams, State, offload_vector, total_tasks


@dataclass(frozen=True)
class PolicyEntry:
    reduced_state: State
    horizon: int
    decision: int


@dataclass(frozen=True)
class DecisionOutcome:
    total: int
    from_reduction: int
    from_dp: int
    classified_offloading: bool


@dataclass(frozen=True)
class ChainDecisions:
    """Decisions inferred along an adjacency chain from one known decision."""

    down: Tuple[int, ...]   # u steps toward smaller states
    up: Tuple[int, ...]     # v steps toward larger states


def _reduced_argmin(s_r: State, T: int, table: dp.ValueTable) -> int:
    # stored minimizers are keyed by the memo key; only trust them when the
    # key IS the queried state (true for reduced states at full horizons)
    stored = table.stored_argmin(s_r, T)
    if stored is not None:
        key = table.lean_key(s_r) if T >= table.params.N else statespace.truncate(s_r, T)
        if key == s_r:
            return stored
    return dp.forced_values(s_r, T, table).argmin


def optimal_decision(s: State, T: int, table: dp.ValueTable) -> DecisionOutcome:
    """Two-step optimal offload count: clear excessive tasks, then minimize."""
    if T < 1:
        raise ValueError(f"horizon must be >= 1, got {T}")
    rf = statespace.reduce(s, T)
    l_r = _reduced_argmin(rf.reduced, T, table)
    total = rf.excessive_count + l_r
    return DecisionOutcome(total, rf.excessive_count, l_r, total >= 1)


def parent_state(s_a: State) -> State:
    """Remove the most imminent task, the canonical adjacency witness."""
    return tuple(a - b for a, b in zip(s_a, offload_vector(s_a, min(1, total_tasks(s_a)))))


def is_offloading_state(s_a: State, T: int, table: dp.ValueTable) -> bool:
    """True iff the optimal decision of s_a is positive.

    Uses the value-gap test: removing the most imminent task must be worth at
    least the offload price C_o. The all-zero state is non-offloading.
    """
    if total_tasks(s_a) == 0:
        return False
    parent = parent_state(s_a)
    table.ensure((s_a, parent), T)
    gap = dp.value(s_a, T, table) - dp.value(parent, T, table)
    return gap >= table.params.C_o


def smallest_nonoffloading(s: State, T: int, table: dp.ValueTable) -> int:
    """Offload distance to the first non-offloading state along the chain
    s, s minus one most-imminent task, ... (the all-zero end always is)."""
    chain = [s]
    for _ in range(total_tasks(s)):
        chain.append(parent_state(chain[-1]))
    table.ensure(chain, T)
    values = [dp.value(c, T, table) for c in chain]
    c_o = table.params.C_o
    for L in range(len(chain) - 1):
        if values[L] - values[L + 1] < c_o:
            return L
    return len(chain) - 1


def adjacency(s: State, s_a: State) -> bool:
    """True iff s_a is s plus one task at a deadline no later than s's most
    imminent one. Any single-task state is adjacent to the all-zero state."""
    if len(s) != len(s_a):
        return False
    if total_tasks(s) == 0:
        return total_tasks(s_a) == 1
    diff = [a - b for a, b in zip(s_a, s)]
    if any(x < 0 for x in diff) or sum(diff) != 1:
        return False
    j = diff.index(1)
    d = next(i for i, c in enumerate(s) if c > 0)
    return j <= d


def infer_adjacent_chain(known_L: int, steps_down: int, steps_up: int) -> ChainDecisions:
    """Decisions along an adjacency chain around a state with known decision.

    Downward (removing one most-imminent task per step) decrements toward 0;
    upward increments, but only a positive known decision licenses upward
    inference, so that case is refused rather than guessed.
    """
    if known_L < 0:
        raise ValueError(f"known decision must be >= 0, got {known_L}")
    if steps_up > 0 and known_L == 0:
        raise ValueError("upward inference from a non-offloading state is undefined")
    down = tuple(max(known_L - u, 0) for u in range(1, steps_down + 1))
    up = tuple(known_L + v for v in range(1, steps_up + 1))
    return ChainDecisions(down, up)


class PolicyCache:
    """Decision triplets (reduced state, horizon, decision) for fast lookup."""

    def __init__(self, params: ModelParams, horizon: int,
                 decisions: Dict[Tuple[State, int], int], table: dp.ValueTable):
        self.params = params
        self.horizon = horizon
        self._decisions = decisions
        self.table = table

    @property
    def entries(self) -> List[PolicyEntry]:
        return [PolicyEntry(s, t, d)
                for (s, t), d in sorted(self._decisions.items())]

    def reduced_decision(self, s_r: State, t: int) -> int:
        return self._decisions[(s_r, t)]

    def decision(self, s: State, t: int) -> DecisionOutcome:
        """Full decision for an arbitrary state at remaining horizon t."""
        rf = statespace.reduce(s, t)
        l_r = self._decisions.get((rf.reduced, t))
        if l_r is None:
            l_r = _reduced_argmin(rf.reduced, t, self.table)
            self._decisions[(rf.reduced, t)] = l_r
        total = rf.excessive_count + l_r
        return DecisionOutcome(total, rf.excessive_count, l_r, total >= 1)


def build_policy_cache(params: ModelParams, T: int, seeds: Sequence[State] = (),
                       backend: Optional[str] = None) -> PolicyCache:
    """Cache decisions for every reduced state at every horizon 1..T."""
    if T < 1:
        raise ValueError(f"horizon must be >= 1, got {T}")
    reduced = list(statespace.enumerate_reduced(params.N))
    for s in seeds:
        r = statespace.reduce(s, T).reduced
        if r not in reduced:
            reduced.append(r)
    table = dp.build_table(params, T, seeds=list(seeds), pin=reduced,
                           backend=backend, count_naive=False)
    decisions: Dict[Tuple[State, int], int] = {}
    for t in range(1, T + 1):
        for s_r in reduced:
            decisions[(s_r, t)] = _reduced_argmin(s_r, t, table)
    return PolicyCache(params, T, decisions, table)
