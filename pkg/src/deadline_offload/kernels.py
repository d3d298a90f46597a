"""Horizon-level sweep kernels for the solver's compressed-state recursion.

One sweep step takes the value vector of horizon t-1 over the compressed
state set and produces horizon t: per (state, offload count) pair an expected
cost is accumulated over the 2*(N+1) weighted successor terms, then each
state takes the agent-present minimum (smallest minimizer wins ties) and the
agent-absent L=0 row, mixed by the agent availability probability.

Two interchangeable implementations: a numba-jitted loop and a pure-numpy
one. Selection: the DEADLINE_OFFLOAD_BACKEND environment variable ("numba",
"numpy", or "auto"), overridable per call. "auto" means numba when it
imports, numpy otherwise.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

BACKEND_ENV = "DEADLINE_OFFLOAD_BACKEND"

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False


@dataclass(frozen=True)
class SweepArrays:
    """CSR-style pair layout for one compressed state set.

    pair_start[i]..pair_start[i+1] are the rows of state i, one per offload
    count L = 0, 1, ...; base_cost folds the immediate cost and every
    successor's constant cost-gap term; weight/succ_idx hold the probability
    mass and compressed index of each successor term.
    """

    pair_start: np.ndarray  # int64, len n_states + 1
    base_cost: np.ndarray   # float64, len n_pairs
    weight: np.ndarray      # float64, (n_pairs, 2 * (N + 1))
    succ_idx: np.ndarray    # int64, same shape as weight

    @property
    def n_states(self) -> int:
        return len(self.pair_start) - 1

    @property
    def n_pairs(self) -> int:
        return len(self.base_cost)


def _sweep_py(pair_start, base_cost, weight, succ_idx, p_u, j_prev,
              j_out, ama_out, no_ama_out, argmin_out):
    n_pairs = base_cost.shape[0]
    n_terms = weight.shape[1]
    pv = np.empty(n_pairs)
    for p in range(n_pairs):
        acc = base_cost[p]
        for j in range(n_terms):
            acc += weight[p, j] * j_prev[succ_idx[p, j]]
        pv[p] = acc
    for i in range(pair_start.shape[0] - 1):
        a = pair_start[i]
        b = pair_start[i + 1]
        best = pv[a]
        best_l = 0
        for q in range(a + 1, b):
            if pv[q] < best:
                best = pv[q]
                best_l = q - a
        ama_out[i] = best
        no_ama_out[i] = pv[a]
        argmin_out[i] = best_l
        j_out[i] = p_u * best + (1.0 - p_u) * pv[a]


if _HAVE_NUMBA:
    _sweep_numba = njit(cache=True)(_sweep_py)


def _sweep_numpy(pair_start, base_cost, weight, succ_idx, p_u, j_prev,
                 j_out, ama_out, no_ama_out, argmin_out):
    pv = base_cost + (weight * j_prev[succ_idx]).sum(axis=1)
    starts = pair_start[:-1]
    np.minimum.reduceat(pv, starts, out=ama_out)
    no_ama_out[:] = pv[starts]
    # smallest minimizing L: first pair position whose value equals the min
    hit = pv == np.repeat(ama_out, np.diff(pair_start))
    pos = np.where(hit, np.arange(len(pv)), len(pv))
    argmin_out[:] = np.minimum.reduceat(pos, starts) - starts
    j_out[:] = p_u * ama_out + (1.0 - p_u) * no_ama_out


def resolve_backend(backend: str | None = None) -> str:
    choice = (backend or os.environ.get(BACKEND_ENV, "auto")).lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"unknown backend {choice!r}; use numba, numpy or auto")
    if choice == "numba" and not _HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    if choice == "auto":
        return "numba" if _HAVE_NUMBA else "numpy"
    return choice


def sweep_level(arrays: SweepArrays, p_u: float, j_prev: np.ndarray,
                j_out: np.ndarray, ama_out: np.ndarray, no_ama_out: np.ndarray,
                argmin_out: np.ndarray, backend: str | None = None) -> None:
    """Advance the value vector by one horizon level, writing into the outputs."""
    impl = _sweep_numba if resolve_backend(backend) == "numba" else _sweep_numpy
    impl(arrays.pair_start, arrays.base_cost, arrays.weight, arrays.succ_idx,
         p_u, j_prev, j_out, ama_out, no_ama_out, argmin_out)
