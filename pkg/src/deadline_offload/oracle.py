"""Independent ground truth: exhaustive expectation trees and claim checkers.

Everything here re-derives values by direct expectation over the slot event
tree (minimizing over offload counts at the agent-present branch), keyed on
raw states with no truncation, no reduction and no lean shortcuts. Agreement
between this module and the solver is therefore evidence, not tautology; the
only shared code is the transition mechanics in `model`.

`brute_force_value` is deliberately guarded to tiny instances. `raw_value`
is the mid-scale variant (same recursion, shared memo) used by the claim
checkers whose stated ranges exceed the brute-force guard.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from . import statespace
from .model import (
    ModelParams,
    State,
    offload_vector,
    successor,
    total_tasks,
    valid_decisions,
)

BRUTE_MAX_N = 4
BRUTE_MAX_T = 5
BRUTE_MAX_SUM = 5

RAW_MAX_T = 40

Memo = Dict[Tuple[State, int], float]


@dataclass(frozen=True)
class VerificationReport:
    property_name: str
    instances: int
    violations: Tuple[tuple, ...]

    @property
    def passed(self) -> bool:
        return not self.violations


def _expected_future(s: State, L: int, t: int, params: ModelParams, memo: Memo) -> float:
    acc = 0.0
    for k, p_k in enumerate(params.arrival):
        if p_k == 0.0:
            continue
        acc += p_k * (
            params.mu * raw_value(successor(s, L, k, True), t, params, memo)
            + (1.0 - params.mu) * raw_value(successor(s, L, k, False), t, params, memo)
        )
    return acc


def forced_ama_value(s: State, L: int, T: int, params: ModelParams, memo: Memo) -> float:
    """Cost of offloading exactly L now (agent present), then acting optimally."""
    immediate = params.C_o * L + params.C_p * max(s[0] - L, 0)
    return immediate + _expected_future(s, L, T - 1, params, memo)


def no_ama_value(s: State, T: int, params: ModelParams, memo: Memo) -> float:
    """Cost when the agent is absent this slot: expirations plus the L=0 future."""
    return params.C_p * s[0] + _expected_future(s, 0, T - 1, params, memo)


def raw_value(s: State, T: int, params: ModelParams, memo: Optional[Memo] = None) -> float:
    """Exact minimum expected total cost by direct recursion on raw states."""
    if T <= 0:
        return 0.0
    if T > RAW_MAX_T:
        raise ValueError(f"oracle horizon guard exceeded: T={T} > {RAW_MAX_T}")
    if memo is None:
        memo = {}
    key = (s, T)
    hit = memo.get(key)
    if hit is not None:
        return hit
    best = min(forced_ama_value(s, L, T, params, memo) for L in valid_decisions(s))
    out = params.p_u * best + (1.0 - params.p_u) * no_ama_value(s, T, params, memo)
    memo[key] = out
    return out


def optimal_decision(s: State, T: int, params: ModelParams, memo: Memo) -> int:
    """Smallest offload count minimizing the agent-present branch."""
    best_L = 0
    best = forced_ama_value(s, 0, T, params, memo)
    for L in range(1, total_tasks(s) + 1):
        v = forced_ama_value(s, L, T, params, memo)
        if v < best:
            best, best_L = v, L
    return best_L


def brute_force_value(s: State, T: int, params: ModelParams) -> float:
    """Guarded tiny-instance value, re-derived per call with a private memo."""
    if params.N > BRUTE_MAX_N or T > BRUTE_MAX_T or total_tasks(s) > BRUTE_MAX_SUM:
        raise ValueError(
            "brute-force guard exceeded: need N <= %d, T <= %d, sum(s) <= %d; "
            "got N=%d, T=%d, sum=%d"
            % (BRUTE_MAX_N, BRUTE_MAX_T, BRUTE_MAX_SUM, params.N, T, total_tasks(s))
        )
    return raw_value(s, T, params, {})


def brute_force_min_excess(s: State, horizon: int) -> int:
    """First L whose most-imminent removal leaves the truncated state reduced."""
    t = statespace.truncate(s, horizon)
    for L in range(total_tasks(t) + 1):
        o = offload_vector(t, L)
        if statespace.is_reduced(tuple(a - b for a, b in zip(t, o))):
            return L
    raise AssertionError("unreachable: offloading everything is always reduced")


# ---------------------------------------------------------------------------
# Claim checkers. Each enumerates a bounded instance family, evaluates the
# claim with oracle-side values only, and reports violations.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VerifyBounds:
    """Instance-family bounds for `verify`. Fields unused by a property are ignored."""

    max_sum: int = 4
    max_n: int = 4
    max_t: int = 6
    max_component: int = 4
    t_values: Optional[Tuple[int, ...]] = None
    samples: int = 200
    seed: int = 7


def _states_up_to_sum(n: int, max_sum: int) -> List[State]:
    out: List[State] = []

    def walk(prefix, left):
        if len(prefix) == n:
            out.append(tuple(prefix))
            return
        for c in range(left + 1):
            prefix.append(c)
            walk(prefix, left - c)
            prefix.pop()

    walk([], max_sum)
    return out


def _postponed_variants(s: State) -> List[State]:
    """One task moved from the most imminent occupied deadline to any later one."""
    d = next((i for i, c in enumerate(s) if c > 0), None)
    if d is None:
        return []
    out = []
    for j in range(d + 1, len(s)):
        moved = list(s)
        moved[d] -= 1
        moved[j] += 1
        out.append(tuple(moved))
    return out


def _verify_lemma_1(bounds: VerifyBounds, params: ModelParams) -> VerificationReport:
    violations = []
    checked = 0
    for n in range(1, bounds.max_n + 1):
        states = statespace.enumerate_reduced(n)
        checked += 1
        expected = statespace.catalan(n)
        if len(states) != expected:
            violations.append((n, expected, len(states)))
        if any(not statespace.is_reduced(s) for s in states):
            violations.append((n, "all reduced", "non-reduced state emitted"))
    return VerificationReport("lemma_1", checked, tuple(violations))


def _verify_lemma_2(bounds: VerifyBounds, params: ModelParams) -> VerificationReport:
    """Most-imminent offloading beats every same-size removal multiset."""
    memo: Memo = {}
    violations = []
    checked = 0
    T = min(bounds.max_t, 3)
    states = _states_up_to_sum(params.N, min(bounds.max_sum, 4))

    def removals(s, L):
        # all vectors r <= s with sum(r) == L
        def walk(i, left, prefix):
            if i == len(s):
                if left == 0:
                    yield tuple(prefix)
                return
            for c in range(min(s[i], left) + 1):
                prefix.append(c)
                yield from walk(i + 1, left - c, prefix)
                prefix.pop()

        yield from walk(0, L, [])

    def deviation_cost(s, r, L, t):
        # offload the multiset r instead of the L most imminent, then act optimally
        immediate = params.C_o * L + params.C_p * (s[0] - r[0])
        after = tuple(a - b for a, b in zip(s, r))
        return immediate + _expected_future(after, 0, t - 1, params, memo)

    for s in states:
        for t in range(1, T + 1):
            for L in valid_decisions(s):
                reference = deviation_cost(s, offload_vector(s, L), L, t)
                for r in removals(s, L):
                    checked += 1
                    cost = deviation_cost(s, r, L, t)
                    if reference > cost + 1e-9:
                        violations.append((s, t, L, r, reference, cost))
    return VerificationReport("lemma_2", checked, tuple(violations))


def _verify_lemma_3(bounds: VerifyBounds, params: ModelParams) -> VerificationReport:
    """Forced-offload cost plus C_o*L is discrete convex in L for every start deadline."""
    from .model import decision_range_from, offload_from_deadline

    memo: Memo = {}
    violations = []
    checked = 0
    for s in _states_up_to_sum(params.N, bounds.max_sum):
        for d in range(1, params.N + 1):
            dom = decision_range_from(s, d)
            if len(dom) < 3:
                continue
            for t in range(1, bounds.max_t + 1):
                vals = [
                    no_ama_value(offload_from_deadline(s, d, L), t, params, memo)
                    + L * params.C_o
                    for L in dom
                ]
                for a, b, c in zip(vals, vals[1:], vals[2:]):
                    checked += 1
                    if a + c - 2 * b < -1e-9:
                        violations.append((s, d, t, a + c - 2 * b))
    return VerificationReport("lemma_3", checked, tuple(violations))


def _verify_lemma_4(bounds: VerifyBounds, params: ModelParams) -> VerificationReport:
    """Minimizing the d=1 convexity surrogate recovers the optimal offload count."""
    from .model import decision_range_from, offload_from_deadline

    memo: Memo = {}
    violations = []
    checked = 0
    for s in _states_up_to_sum(params.N, bounds.max_sum):
        for t in range(1, bounds.max_t + 1):
            best_L, best = None, None
            for L in decision_range_from(s, 1):
                v = (
                    no_ama_value(offload_from_deadline(s, 1, L), t, params, memo)
                    + L * params.C_o
                )
                if best is None or v < best - 1e-12:
                    best, best_L = v, L
            direct = optimal_decision(s, t, params, memo)
            checked += 1
            if best_L != direct:
                violations.append((s, t, best_L, direct))
    return VerificationReport("lemma_4", checked, tuple(violations))


def _verify_proposition_1(bounds: VerifyBounds, params: ModelParams) -> VerificationReport:
    """Value of any state equals value of its lean form plus the closed gap."""
    memo: Memo = {}
    violations = []
    checked = 0
    rng = random.Random(bounds.seed)
    t_values = bounds.t_values or tuple(
        range(params.N, max(params.N, bounds.max_t) + 1)
    )
    for _ in range(bounds.samples):
        s = tuple(rng.randint(0, bounds.max_component) for _ in range(params.N))
        for T in t_values:
            lf = statespace.lean(s, T)
            gap = statespace.g2m_cost(s, lf, params)
            lhs = raw_value(s, T, params, memo)
            rhs = raw_value(lf.lean, T, params, memo) + gap
            checked += 1
            if abs(lhs - rhs) > 1e-9:
                violations.append((s, T, lhs, rhs))
    return VerificationReport("proposition_1", checked, tuple(violations))


def _verify_proposition_2(bounds: VerifyBounds, params: ModelParams) -> VerificationReport:
    """Postponing one most-imminent task never increases the value."""
    memo: Memo = {}
    violations = []
    checked = 0
    for s in _states_up_to_sum(params.N, bounds.max_sum):
        for variant in _postponed_variants(s):
            for t in range(1, bounds.max_t + 1):
                checked += 1
                a = raw_value(s, t, params, memo)
                b = raw_value(variant, t, params, memo)
                if a < b - 1e-9:
                    violations.append((s, variant, t, a, b))
    return VerificationReport("proposition_2", checked, tuple(violations))


def _verify_proposition_3(bounds: VerifyBounds, params: ModelParams) -> VerificationReport:
    """Zero optimal offload iff the one-task value gap stays below C_o."""
    memo: Memo = {}
    violations = []
    checked = 0
    for s_a in _states_up_to_sum(params.N, bounds.max_sum):
        if total_tasks(s_a) == 0:
            continue
        parent = tuple(a - b for a, b in zip(s_a, offload_vector(s_a, 1)))
        for t in range(1, bounds.max_t + 1):
            checked += 1
            gap = raw_value(s_a, t, params, memo) - raw_value(parent, t, params, memo)
            offloading = optimal_decision(s_a, t, params, memo) >= 1
            if offloading != (gap >= params.C_o - 1e-12):
                violations.append((s_a, t, gap, offloading))
    return VerificationReport("proposition_3", checked, tuple(violations))


def _adjacent_pairs(states: List[State]) -> List[Tuple[State, State]]:
    pairs = []
    for s in states:
        d = next((i for i, c in enumerate(s) if c > 0), len(s))
        for j in range(min(d + 1, len(s))):
            s_a = list(s)
            s_a[j] += 1
            pairs.append((s, tuple(s_a)))
    return pairs


def _verify_theorem_1(bounds: VerifyBounds, params: ModelParams) -> VerificationReport:
    """Adjacent states' optimal offload counts differ by one (or both are zero)."""
    memo: Memo = {}
    violations = []
    checked = 0
    states = _states_up_to_sum(params.N, bounds.max_sum)
    for s, s_a in _adjacent_pairs(states):
        for t in range(1, bounds.max_t + 1):
            L = optimal_decision(s, t, params, memo)
            L_a = optimal_decision(s_a, t, params, memo)
            checked += 1
            if L_a >= 1 and L != L_a - 1:
                violations.append(("down", s, s_a, t, L, L_a))
            if L_a == 0 and L != 0:
                violations.append(("zero", s, s_a, t, L, L_a))
            if L >= 1 and L_a != L + 1:
                violations.append(("up", s, s_a, t, L, L_a))
    return VerificationReport("theorem_1", checked, tuple(violations))


def _verify_theorem_2(bounds: VerifyBounds, params: ModelParams) -> VerificationReport:
    """The optimal count is the offload distance to the first non-offloading state."""
    memo: Memo = {}
    violations = []
    checked = 0
    for s in _states_up_to_sum(params.N, bounds.max_sum):
        for t in range(1, bounds.max_t + 1):
            L_star = optimal_decision(s, t, params, memo)
            distance = None
            for L in valid_decisions(s):
                trimmed = tuple(a - b for a, b in zip(s, offload_vector(s, L)))
                if optimal_decision(trimmed, t, params, memo) == 0:
                    distance = L
                    break
            checked += 1
            if L_star != distance:
                violations.append((s, t, L_star, distance))
    return VerificationReport("theorem_2", checked, tuple(violations))


_PROPERTIES = {
    "lemma_1": _verify_lemma_1,
    "lemma_2": _verify_lemma_2,
    "lemma_3": _verify_lemma_3,
    "lemma_4": _verify_lemma_4,
    "proposition_1": _verify_proposition_1,
    "proposition_2": _verify_proposition_2,
    "proposition_3": _verify_proposition_3,
    "theorem_1": _verify_theorem_1,
    "theorem_2": _verify_theorem_2,
}

PROPERTY_NAMES = tuple(sorted(_PROPERTIES))


def verify(property_name: str, bounds: Optional[VerifyBounds] = None,
           params: Optional[ModelParams] = None) -> VerificationReport:
    """Exhaustively check one structural claim on a bounded instance family."""
    if property_name not in _PROPERTIES:
        raise ValueError(
            f"unknown property {property_name!r}; known: {', '.join(PROPERTY_NAMES)}"
        )
    bounds = bounds or VerifyBounds()
    if params is None:
        params = ModelParams.uniform_arrivals(
            N=bounds.max_n, p_u=0.5, mu=0.5, C_o=1.0, C_p=3.0, p0=0.5
        )
    if bounds.max_t > RAW_MAX_T:
        raise ValueError(f"bounds exceed oracle horizon guard T <= {RAW_MAX_T}")
    return _PROPERTIES[property_name](bounds, params)
