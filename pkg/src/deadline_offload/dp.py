"""Exact finite-horizon values via compressed-state memoization.

The recursion: with t slots left, the value of a state mixes the agent-absent
branch (deadline-1 tasks expire, no offload) and the agent-present branch
(minimum over offload counts), each branch averaging over arrival and local
processing outcomes of the successor values at t - 1.

Memo keys:
  * horizon >= N: the state's lean form. The stored value plus the closed
    cost gap (`statespace.g2m_cost`) reconstructs the exact value of any
    state, so only the small lean family is ever stored per level.
  * horizon < N: the state truncated to the horizon (tasks that cannot
    expire in time are ignored). The gap formula needs a full agent-arrival
    window, so the lean shortcut is gated to horizons >= N.

Evaluation is bottom-up in the horizon, so T = 1000 builds run as a flat
sweep (no recursion): horizons below N are evaluated per state in Python,
the rest as vectorized level sweeps over the lean family (`kernels`).
Storage is demand-driven: a level holds exactly the keys a lazy memoizer
serving the same queries would hold, which is what the memory report counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from . import kernels, statespace
from .model import (
    ModelParams,
    State,
    as_state,
    offload_from_deadline,
    successor,
    total_tasks,
    valid_decisions,
)


@dataclass(frozen=True)
class ForcedValue:
    """Agent-present costs of offloading exactly L tasks, for every legal L."""

    by_L: Dict[int, float]

    @property
    def min_value(self) -> float:
        return min(self.by_L.values())

    @property
    def argmin(self) -> int:
        """Smallest minimizing offload count."""
        best_L, best = 0, None
        for L in sorted(self.by_L):
            v = self.by_L[L]
            if best is None or v < best:
                best_L, best = L, v
        return best_L


@dataclass
class TableStats:
    """Entry counts for the memory report.

    lean_entries counts what this table stores; naive_entries what a raw-state
    memoizer serving the same build would store (filled by `build_table`).
    """

    lean_entries: int = 0
    naive_entries: int = 0
    kernel_states: int = 0


class ValueTable:
    """Demand-driven value store for one parameter set.

    Thread-safety follows the build/read split: construction and `ensure`
    mutate, a table that is no longer extended is safe for concurrent reads.
    """

    def __init__(self, params: ModelParams, backend: Optional[str] = None):
        self.params = params
        self.backend = kernels.resolve_backend(backend)
        self.stats = TableStats()
        # t >= N levels keyed by lean state; t < N levels keyed by truncated state
        self._lean_levels: Dict[int, Dict[State, float]] = {}
        self._raw_levels: Dict[int, Dict[State, float]] = {}
        self._argmin_levels: Dict[int, Dict[State, int]] = {}
        self._pinned: Set[State] = set()
        self._lean_key_cache: Dict[State, State] = {}
        self._bridge_cache: Dict[State, float] = {}
        self._succ_keys_cache: Dict[Tuple[State, int], Tuple[State, ...]] = {}
        self._kernel_states: List[State] = []
        self._kernel_arrays: Optional[kernels.SweepArrays] = None

    # -- keying ------------------------------------------------------------

    def lean_key(self, s: State) -> State:
        key = self._lean_key_cache.get(s)
        if key is None:
            key = statespace.lean(s, self.params.N).lean
            self._lean_key_cache[s] = key
        return key

    def bridge(self, s: State) -> float:
        gap = self._bridge_cache.get(s)
        if gap is None:
            gap = statespace.g2m_cost(s, statespace.lean(s, self.params.N), self.params)
            self._bridge_cache[s] = gap
        return gap

    def lookup(self, s: State, t: int) -> Optional[float]:
        """Stored value of s at horizon t, or None when not yet computed."""
        if t <= 0:
            return 0.0
        if t >= self.params.N:
            level = self._lean_levels.get(t)
            if level is None:
                return None
            base = level.get(self.lean_key(s))
            return None if base is None else base + self.bridge(s)
        level = self._raw_levels.get(t)
        if level is None:
            return None
        return level.get(statespace.truncate(s, t))

    def stored_argmin(self, s: State, t: int) -> Optional[int]:
        """Recorded smallest minimizer for a stored key (t >= N levels)."""
        level = self._argmin_levels.get(t)
        if level is None:
            return None
        return level.get(self.lean_key(s) if t >= self.params.N else
                         statespace.truncate(s, t))

    def entry_count(self) -> int:
        return (sum(len(v) for v in self._lean_levels.values())
                + sum(len(v) for v in self._raw_levels.values()))

    # -- demand propagation --------------------------------------------------

    def _succ_keys(self, s: State, cut: int) -> Tuple[State, ...]:
        """Distinct memo keys of s's one-slot successors (cut 0 = lean regime)."""
        entry = self._succ_keys_cache.get((s, cut))
        if entry is not None:
            return entry
        p = self.params
        out: Set[State] = set()
        for L in valid_decisions(s):
            for k, p_k in enumerate(p.arrival):
                if p_k == 0.0:
                    continue
                if p.mu > 0.0:
                    nxt = successor(s, L, k, True)
                    out.add(self.lean_key(nxt) if cut == 0 else statespace.truncate(nxt, cut))
                if p.mu < 1.0:
                    nxt = successor(s, L, k, False)
                    out.add(self.lean_key(nxt) if cut == 0 else statespace.truncate(nxt, cut))
        entry = tuple(sorted(out))
        self._succ_keys_cache[(s, cut)] = entry
        return entry

    def _band_demands(self, top: Set[State], T: int) -> Dict[int, Set[State]]:
        """Per-level lean-key demand sets for horizons N..T (T >= N)."""
        N = self.params.N
        pinned = {self.lean_key(s) for s in self._pinned}
        levels: Dict[int, Set[State]] = {T: set(top) | pinned}
        t = T
        while t > N:
            nxt: Set[State] = set(pinned)
            for s in levels[t]:
                nxt.update(self._succ_keys(s, 0))
            if nxt == levels[t] and t - 1 > N:
                for tt in range(t - 1, N - 1, -1):
                    levels[tt] = nxt
                break
            levels[t - 1] = nxt
            t -= 1
        return levels

    def _raw_demands(self, roots_by_level: Dict[int, Set[State]]) -> Dict[int, Set[State]]:
        """Propagate truncated-state demands down from the given roots."""
        if not roots_by_level:
            return {}
        N = self.params.N
        top = max(roots_by_level)
        levels: Dict[int, Set[State]] = {}
        carry: Set[State] = set()
        for t in range(top, 0, -1):
            carry = set(carry) | roots_by_level.get(t, set())
            levels[t] = carry
            if t > 1:
                cut = min(N, t - 1)
                carry = set()
                for s in levels[t]:
                    carry.update(self._succ_keys(s, cut))
        return levels

    # -- evaluation ----------------------------------------------------------

    def _eval_state(self, s: State, lookup) -> Tuple[float, int]:
        """One Bellman step for one state; lookup maps successors to t-1 values."""
        p = self.params
        best = None
        best_l = 0
        v0 = 0.0
        for L in valid_decisions(s):
            acc = p.C_o * L + p.C_p * max(s[0] - L, 0)
            for k, p_k in enumerate(p.arrival):
                if p_k == 0.0:
                    continue
                if p.mu > 0.0:
                    acc += p_k * p.mu * lookup(successor(s, L, k, True))
                if p.mu < 1.0:
                    acc += p_k * (1.0 - p.mu) * lookup(successor(s, L, k, False))
            if L == 0:
                v0 = acc
            if best is None or acc < best:
                best = acc
                best_l = L
        return p.p_u * best + (1.0 - p.p_u) * v0, best_l

    def _raw_lookup_at(self, t: int):
        if t <= 0:
            return lambda s: 0.0
        level = self._raw_levels[t]
        return lambda s: level[statespace.truncate(s, t)]

    def _fill_raw_levels(self, demands: Dict[int, Set[State]]) -> None:
        for t in sorted(demands):
            level = self._raw_levels.setdefault(t, {})
            arg_level = self._argmin_levels.setdefault(t, {})
            missing = [s for s in demands[t] if s not in level]
            if not missing:
                continue
            lookup = self._raw_lookup_at(t - 1)
            for s in sorted(missing):
                level[s], arg_level[s] = self._eval_state(s, lookup)

    def _ensure_kernel(self, states: Set[State]) -> None:
        """(Re)build sweep arrays when the lean family grows.

        The family is closed under one-slot successor lean keys so every
        gather index of every pair row resolves.
        """
        if self._kernel_arrays is not None and states.issubset(self._kernel_states):
            return
        family = set(self._kernel_states) | states
        frontier = list(family)
        while frontier:
            added = []
            for s in frontier:
                for key in self._succ_keys(s, 0):
                    if key not in family:
                        family.add(key)
                        added.append(key)
            frontier = added
        all_states = sorted(family)
        index = {s: i for i, s in enumerate(all_states)}
        p = self.params
        terms = []  # per arrival/processing branch: (k, processed, weight)
        for k, p_k in enumerate(p.arrival):
            if p_k == 0.0:
                continue
            if p.mu > 0.0:
                terms.append((k, True, p_k * p.mu))
            if p.mu < 1.0:
                terms.append((k, False, p_k * (1.0 - p.mu)))
        pair_start = [0]
        base_cost: List[float] = []
        weight_rows: List[List[float]] = []
        succ_rows: List[List[int]] = []
        for s in all_states:
            for L in valid_decisions(s):
                base = p.C_o * L + p.C_p * max(s[0] - L, 0)
                w_row = []
                i_row = []
                for k, processed, w in terms:
                    nxt = successor(s, L, k, processed)
                    key = self.lean_key(nxt)
                    if key not in index:
                        raise AssertionError(f"lean family not closed at {nxt}")
                    base += w * self.bridge(nxt)
                    w_row.append(w)
                    i_row.append(index[key])
                base_cost.append(base)
                weight_rows.append(w_row)
                succ_rows.append(i_row)
            pair_start.append(len(base_cost))
        self._kernel_states = all_states
        self._kernel_arrays = kernels.SweepArrays(
            pair_start=np.asarray(pair_start, dtype=np.int64),
            base_cost=np.asarray(base_cost, dtype=np.float64),
            weight=np.asarray(weight_rows, dtype=np.float64),
            succ_idx=np.asarray(succ_rows, dtype=np.int64),
        )
        self.stats.kernel_states = len(all_states)

    # -- the extend driver -----------------------------------------------------

    def ensure(self, states: Iterable[State], T: int) -> None:
        """Make `lookup` succeed at horizon T for every given state."""
        if T <= 0:
            return
        missing = sorted({s for s in states if self.lookup(s, T) is None})
        if not missing:
            return
        N = self.params.N
        if T < N:
            roots = {T: {statespace.truncate(s, T) for s in missing}}
            self._fill_raw_levels(self._raw_demands(roots))
            self.stats.lean_entries = self.entry_count()
            return

        band = self._band_demands({self.lean_key(s) for s in missing}, T)
        family: Set[State] = set()
        for level_states in band.values():
            family.update(level_states)
        self._ensure_kernel(family)
        kernel_states = self._kernel_states
        index = {s: i for i, s in enumerate(kernel_states)}

        # Only level-N demands need real values below the compression band:
        # a demanded row at any level gathers exclusively from the demanded
        # set one level down, so undemanded rolling-vector entries are inert.
        bottom = set(band.get(N, set()))
        if N > 1 and (bottom or self._pinned):
            raw_roots = {N - 1: set()}
            for s in bottom:
                raw_roots[N - 1].update(self._succ_keys(s, N - 1))
            for t in range(1, N):
                raw_roots.setdefault(t, set()).update(
                    statespace.truncate(s, t) for s in self._pinned)
            self._fill_raw_levels(self._raw_demands(raw_roots))

        # level N per state in Python, then vectorized sweeps up to T
        lookup = self._raw_lookup_at(N - 1)
        j_prev = np.zeros(len(kernel_states))
        argmin_n = np.zeros(len(kernel_states), dtype=np.int64)
        for s in sorted(bottom):
            i = index[s]
            j_prev[i], argmin_n[i] = self._eval_state(s, lookup)
        self._persist_band_level(N, bottom, j_prev, argmin_n, index)

        j_out = np.empty_like(j_prev)
        ama = np.empty_like(j_prev)
        no_ama = np.empty_like(j_prev)
        argmin = np.empty(len(kernel_states), dtype=np.int64)
        for t in range(N + 1, T + 1):
            kernels.sweep_level(self._kernel_arrays, self.params.p_u, j_prev,
                                j_out, ama, no_ama, argmin, backend=self.backend)
            self._persist_band_level(t, band.get(t, set()), j_out, argmin, index)
            j_prev, j_out = j_out, j_prev
        self.stats.lean_entries = self.entry_count()

    def _persist_band_level(self, t: int, demanded: Set[State], values: np.ndarray,
                            argmins: np.ndarray, index: Dict[State, int]) -> None:
        if not demanded:
            return
        level = self._lean_levels.setdefault(t, {})
        arg_level = self._argmin_levels.setdefault(t, {})
        for s in demanded:
            i = index[s]
            level[s] = float(values[i])
            arg_level[s] = int(argmins[i])

    def pin(self, states: Iterable[State]) -> None:
        """Keep these states demanded at every level of subsequent builds."""
        self._pinned.update(states)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def value(s: State, T: int, table: ValueTable) -> float:
    """Minimum expected total cost over T slots from state s.

    The per-slot average is this divided by T; normalization is applied only
    at reporting boundaries, never inside the recursion.
    """
    if T < 0:
        raise ValueError(f"horizon must be >= 0, got {T}")
    s = as_state(s, table.params.N)
    table.ensure((s,), T)
    out = table.lookup(s, T)
    assert out is not None
    return out


def _forced_terms(s: State, L: int, params: ModelParams):
    terms = []
    for k, p_k in enumerate(params.arrival):
        if p_k == 0.0:
            continue
        if params.mu > 0.0:
            terms.append((successor(s, L, k, True), p_k * params.mu))
        if params.mu < 1.0:
            terms.append((successor(s, L, k, False), p_k * (1.0 - params.mu)))
    return terms


def value_forced(s: State, L: int, T: int, table: ValueTable) -> float:
    """Cost of offloading exactly L most-imminent tasks now (agent present)."""
    if T < 1:
        raise ValueError(f"horizon must be >= 1, got {T}")
    if L not in valid_decisions(s):
        raise ValueError(f"decision L={L} outside 0..{total_tasks(s)} for state {s}")
    p = table.params
    terms = _forced_terms(s, L, p)
    table.ensure([st for st, _ in terms], T - 1)
    acc = p.C_o * L + p.C_p * max(s[0] - L, 0)
    for st, w in terms:
        acc += w * table.lookup(st, T - 1)
    return acc


def forced_values(s: State, T: int, table: ValueTable) -> ForcedValue:
    """The whole forced-offload cost curve over valid decisions of s."""
    if T < 1:
        raise ValueError(f"horizon must be >= 1, got {T}")
    p = table.params
    all_terms = {L: _forced_terms(s, L, p) for L in valid_decisions(s)}
    table.ensure([st for terms in all_terms.values() for st, _ in terms], T - 1)
    by_L = {}
    for L, terms in all_terms.items():
        acc = p.C_o * L + p.C_p * max(s[0] - L, 0)
        for st, w in terms:
            acc += w * table.lookup(st, T - 1)
        by_L[L] = acc
    return ForcedValue(by_L)


def value_with_ama(s: State, T: int, table: ValueTable) -> float:
    """Optimal agent-present branch value: min over forced offload counts."""
    return forced_values(s, T, table).min_value


def value_without_ama(s: State, T: int, table: ValueTable) -> float:
    """Agent-absent branch value: expirations plus the L = 0 future."""
    return value_forced(s, 0, T, table)


def f_bar(T: int, s: State, d: int, L: int, table: ValueTable) -> float:
    """Convexity surrogate: agent-absent value after offloading L tasks from
    deadline d onward, plus the offload bill L * C_o."""
    trimmed = offload_from_deadline(s, d, L)
    return value_without_ama(trimmed, T, table) + L * table.params.C_o


def build_table(params: ModelParams, T_max: int, seeds: Sequence[State], *,
                pin: Sequence[State] = (), backend: Optional[str] = None,
                count_naive: bool = True) -> ValueTable:
    """Bottom-up table for all horizons 1..T_max reachable from the seeds.

    `pin` keeps extra states demanded (hence stored, with their minimizers) at
    every level; the policy cache uses it for the reduced family. The naive
    counter replays the same demand propagation without lean compression and
    is what a plain raw-state memoizer would store for these seeds.
    """
    if T_max < 1:
        raise ValueError(f"T_max must be >= 1, got {T_max}")
    table = ValueTable(params, backend=backend)
    seeds = [as_state(s, params.N) for s in seeds]
    pin = [as_state(s, params.N) for s in pin]
    table.pin(pin)
    if seeds or pin:
        table.ensure(seeds + pin, T_max)
    table.stats.lean_entries = table.entry_count()
    if count_naive:
        table.stats.naive_entries = naive_entry_count(params, T_max, seeds, table)
    return table


def naive_entry_count(params: ModelParams, T: int, seeds: Sequence[State],
                      table: Optional[ValueTable] = None) -> int:
    """Entries a raw-state memoizer (truncation only, no lean keys) would store."""
    if T < 1 or not seeds:
        return 0
    scratch = table or ValueTable(params)
    N = params.N
    level = {statespace.truncate(s, T) for s in seeds}
    total = len(level)
    t = T
    while t > 1:
        cut = min(N, t - 1)
        nxt: Set[State] = set()
        for s in level:
            nxt.update(scratch._succ_keys(s, cut))
        if cut == N and nxt == level:
            # stationary band: levels t-1 .. N are all identical
            total += len(nxt) * (t - N)
            level = nxt
            t = N
            continue
        total += len(nxt)
        level = nxt
        t -= 1
    return total
