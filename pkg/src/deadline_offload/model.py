"""Domain types and per-slot event mechanics for the firm-deadline offloading queue.

A queue state is a plain tuple of non-negative ints: ``s[i]`` is the number of
buffered tasks whose deadline is ``i + 1`` slots away (deadlines are 1-based in
every external format). Tasks with deadline 1 expire at the next deadline
shift unless offloaded first.

Each slot runs the fixed event order: offloading (if the relay agent is
present), deadline shifting with expirations, at most one task arrival, and
at most one local processing completion. All functions here are pure; the
solver and simulator share them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

State = Tuple[int, ...]

# k = 0 encodes "no arrival"; arrival deadlines are 1..N.
NO_ARRIVAL = 0


@dataclass(frozen=True)
class ModelParams:
    """All model constants.

    arrival[k] is the probability that a task with deadline k arrives in a
    slot (arrival[0] = no arrival), so len(arrival) == N + 1.
    """

    N: int
    p_u: float          # relay-agent availability probability per slot
    mu: float           # local processing availability probability per slot
    C_o: float          # offload cost per task
    C_p: float          # expiration penalty per task
    arrival: Tuple[float, ...]

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if not 0.0 <= self.p_u <= 1.0:
            raise ValueError(f"p_u must lie in [0, 1], got {self.p_u}")
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError(f"mu must lie in [0, 1], got {self.mu}")
        if not self.C_p > self.C_o > 0.0:
            raise ValueError(
                f"costs must satisfy C_p > C_o > 0, got C_o={self.C_o}, C_p={self.C_p}"
            )
        object.__setattr__(self, "arrival", tuple(float(p) for p in self.arrival))
        if len(self.arrival) != self.N + 1:
            raise ValueError(
                f"arrival must have N+1={self.N + 1} entries, got {len(self.arrival)}"
            )
        if any(p < 0.0 or p > 1.0 for p in self.arrival):
            raise ValueError("arrival probabilities must lie in [0, 1]")
        total = sum(self.arrival)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"arrival probabilities must sum to 1, got {total!r}")

    @staticmethod
    def uniform_arrivals(N, p_u, mu, C_o, C_p, p0):
        """Params with arrival mass (1 - p0) spread uniformly over deadlines 1..N."""
        pi = (1.0 - p0) / N
        return ModelParams(N=N, p_u=p_u, mu=mu, C_o=C_o, C_p=C_p,
                           arrival=(p0,) + (pi,) * N)


@dataclass(frozen=True)
class SlotOutcome:
    """The three random draws of one slot, in event order."""

    ama_present: bool
    arrival_deadline: int   # 0 = no arrival
    processing_available: bool


def as_state(counts, N: int) -> State:
    """Validate and normalize a task-count vector of length N."""
    s = tuple(int(c) for c in counts)
    if len(s) != N:
        raise ValueError(f"state must have {N} components, got {len(s)}")
    if any(c < 0 for c in s):
        raise ValueError(f"state components must be non-negative, got {s}")
    return s


def total_tasks(s: State) -> int:
    return sum(s)


def valid_decisions(s: State) -> range:
    """Admissible offload counts for state s: 0 .. total task count."""
    return range(total_tasks(s) + 1)


def decision_range_from(s: State, d: int) -> range:
    """Admissible offload counts when offloading starts at deadline d.

    For d = 1 every deadline-1 task is forced out (they expire otherwise), so
    the range starts at s[0]; for d >= 2 it starts at 0. The upper end is the
    number of tasks with deadline >= d.
    """
    if not 1 <= d <= len(s):
        raise ValueError(f"deadline d must lie in 1..{len(s)}, got {d}")
    upper = sum(s[d - 1:])
    if d == 1:
        return range(s[0], upper + 1)
    return range(0, upper + 1)


def instantaneous_cost(s: State, L: int, params: ModelParams, branch: str = "expected") -> float:
    """Per-slot cost of offloading L tasks from s.

    branch "ama": C_o*L plus penalties for deadline-1 tasks left behind.
    branch "no_ama": every deadline-1 task expires; L is irrelevant.
    branch "expected": p_u-weighted mix of the two.
    """
    if L not in valid_decisions(s):
        raise ValueError(f"decision L={L} outside 0..{total_tasks(s)} for state {s}")
    with_ama = params.C_o * L + params.C_p * max(s[0] - L, 0)
    without_ama = params.C_p * s[0]
    if branch == "ama":
        return with_ama
    if branch == "no_ama":
        return without_ama
    if branch == "expected":
        return params.p_u * with_ama + (1.0 - params.p_u) * without_ama
    raise ValueError(f"unknown branch {branch!r}")


def offload_vector(s: State, L: int) -> State:
    """Counts removed when the L most imminent tasks are offloaded from s."""
    if L not in valid_decisions(s):
        raise ValueError(f"decision L={L} outside 0..{total_tasks(s)} for state {s}")
    o = []
    remaining = L
    for c in s:
        take = min(c, remaining)
        o.append(take)
        remaining -= take
    return tuple(o)


def deadline_shift(v: State) -> State:
    """Advance one slot: deadline-1 tasks drop off (expire), the rest move up."""
    return v[1:] + (0,)


def arrival_vector(k: int, N: int) -> State:
    """Unit vector at deadline k; all-zero for k = 0 (no arrival)."""
    if not 0 <= k <= N:
        raise ValueError(f"arrival deadline k must lie in 0..{N}, got {k}")
    return tuple(1 if i == k - 1 else 0 for i in range(N)) if k else (0,) * N


def local_processing_vector(v: State) -> State:
    """Unit vector at the most imminent occupied deadline; zero if v is empty."""
    for i, c in enumerate(v):
        if c > 0:
            return tuple(1 if j == i else 0 for j in range(len(v)))
    return (0,) * len(v)


def successor(s: State, L: int, k: int, processed: bool) -> State:
    """Next state after one full slot: offload L, shift, arrive with deadline k,
    then (optionally) complete one local task.

    The branch on `processed` is explicit so the solver can weight both
    outcomes and the simulator can replay a sampled one through the same code.
    """
    o = offload_vector(s, L)
    inte = tuple(a + b for a, b in zip(deadline_shift(tuple(a - b for a, b in zip(s, o))),
                                       arrival_vector(k, len(s))))
    if not processed:
        return inte
    return tuple(a - b for a, b in zip(inte, local_processing_vector(inte)))


def offload_from_deadline(s: State, d: int, L: int) -> State:
    """Remove the L most imminent tasks among those with deadline >= d."""
    if L not in decision_range_from(s, d):
        lo = decision_range_from(s, d)
        raise ValueError(
            f"decision L={L} outside {lo.start}..{lo.stop - 1} for state {s}, d={d}"
        )
    out = list(s)
    remaining = L
    for i in range(d - 1, len(s)):
        take = min(out[i], remaining)
        out[i] -= take
        remaining -= take
        if remaining == 0:
            break
    return tuple(out)
