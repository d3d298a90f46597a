"""Discrete-time Monte Carlo replay of the slot event order.

Each slot draws agent presence, an arrival deadline and processing
availability, in that fixed order and unconditionally, so the random stream
never depends on the policy and common-random-number comparisons are valid.
Episode streams come from a counter-based generator keyed by (seed, episode
index): adding episodes never perturbs earlier ones, and replays are
bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .model import (
    ModelParams,
    SlotOutcome,
    State,
    arrival_vector,
    as_state,
    deadline_shift,
    local_processing_vector,
    offload_vector,
    total_tasks,
    valid_decisions,
)
from .policy import PolicyCache


@dataclass(frozen=True)
class SlotRecord:
    state: State          # state at the start of the slot
    outcome: SlotOutcome
    decision: int
    cost: float


@dataclass(frozen=True)
class EpisodeResult:
    total_cost: float
    offloaded: int
    expired: int
    processed: int
    trace: Optional[Tuple[SlotRecord, ...]] = None


@dataclass(frozen=True)
class CostEstimate:
    mean: float
    stderr: float
    ci_low: float
    ci_high: float
    episodes: int


@dataclass(frozen=True)
class PolicyHandle:
    """A per-slot decision rule; decisions always lie in the valid range."""

    kind: str
    cache: Optional[PolicyCache] = None
    threshold: int = 0

    @staticmethod
    def optimal(cache: PolicyCache) -> "PolicyHandle":
        return PolicyHandle("optimal", cache=cache)

    @staticmethod
    def never_offload() -> "PolicyHandle":
        return PolicyHandle("never_offload")

    @staticmethod
    def offload_all_on_ama() -> "PolicyHandle":
        return PolicyHandle("offload_all_on_ama")

    @staticmethod
    def fixed_threshold(threshold: int) -> "PolicyHandle":
        return PolicyHandle("fixed_threshold", threshold=threshold)

    def decide(self, s: State, horizon: int) -> int:
        if self.kind == "optimal":
            return self.cache.decision(s, horizon).total
        if self.kind == "never_offload":
            return 0
        if self.kind == "offload_all_on_ama":
            return total_tasks(s)
        if self.kind == "fixed_threshold":
            return max(total_tasks(s) - self.threshold, 0)
        raise ValueError(f"unknown policy kind {self.kind!r}")


def _episode_rng(seed: int, episode: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, episode],
                                                             dtype=np.uint64)))


def _draw_arrival(u: float, arrival: Tuple[float, ...]) -> int:
    acc = 0.0
    for k, p in enumerate(arrival):
        acc += p
        if u < acc:
            return k
    return len(arrival) - 1


def run_episode(params: ModelParams, s0: State, T: int, policy: PolicyHandle,
                seed: int, episode: int = 0, record_trace: bool = False) -> EpisodeResult:
    """Simulate T slots from s0; deterministic in (seed, episode, inputs)."""
    if T < 1:
        raise ValueError(f"horizon must be >= 1, got {T}")
    rng = _episode_rng(seed, episode)
    s = as_state(s0, params.N)
    total_cost = 0.0
    offloaded = expired = processed = 0
    trace = [] if record_trace else None
    for t in range(T):
        start = s
        # fixed draw order: agent, arrival, processing
        ama = bool(rng.random() < params.p_u)
        L = policy.decide(s, T - t) if ama else 0
        if L not in valid_decisions(s):
            raise ValueError(f"policy returned L={L} outside valid range for {s}")
        slot_cost = 0.0
        if ama and L:
            s = tuple(a - b for a, b in zip(s, offload_vector(s, L)))
            offloaded += L
            slot_cost += params.C_o * L
        slot_cost += params.C_p * s[0]
        expired += s[0]
        s = deadline_shift(s)
        k = _draw_arrival(float(rng.random()), params.arrival)
        if k:
            s = tuple(a + b for a, b in zip(s, arrival_vector(k, params.N)))
        has_processing = bool(rng.random() < params.mu)
        if has_processing and total_tasks(s):
            s = tuple(a - b for a, b in zip(s, local_processing_vector(s)))
            processed += 1
        total_cost += slot_cost
        if record_trace:
            trace.append(SlotRecord(start, SlotOutcome(ama, k, has_processing),
                                    L if ama else 0, slot_cost))
    return EpisodeResult(total_cost, offloaded, expired, processed,
                         tuple(trace) if record_trace else None)


def estimate_cost(params: ModelParams, s0: State, T: int, policy: PolicyHandle,
                  episodes: int, seed: int) -> CostEstimate:
    """Mean episode cost with standard error and a 95% normal interval."""
    if episodes < 1:
        raise ValueError(f"episodes must be >= 1, got {episodes}")
    totals = np.empty(episodes)
    for i in range(episodes):
        totals[i] = run_episode(params, s0, T, policy, seed, episode=i).total_cost
    mean = float(totals.mean())
    stderr = float(totals.std(ddof=1) / math.sqrt(episodes)) if episodes > 1 else 0.0
    half = 1.959963984540054 * stderr
    return CostEstimate(mean, stderr, mean - half, mean + half, episodes)
