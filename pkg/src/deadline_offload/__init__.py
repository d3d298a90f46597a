"""Firm-deadline task offloading: exact solver, optimal policy, simulator.

A base station buffers tasks with per-slot deadlines; each slot an
intermittently available relay agent may carry tasks to a remote server at a
per-task cost, otherwise deadline-1 tasks expire at a penalty, and a flaky
local processor may finish one task. This package computes exact expected
costs and optimal offload counts over a finite horizon on a compressed state
space, extracts and caches the policy, replays it in a Monte Carlo
simulator, and cross-checks every structural claim against brute force.
"""

from .model import ModelParams, SlotOutcome, State
from .statespace import FirstAmaDistribution, LeanForm, ReducedForm
from .dp import ForcedValue, ValueTable, build_table, value
from .policy import DecisionOutcome, PolicyCache, PolicyEntry, build_policy_cache
from .sim import CostEstimate, EpisodeResult, PolicyHandle, estimate_cost, run_episode
from .oracle import VerificationReport, brute_force_value, verify

__all__ = [
    "CostEstimate",
    "DecisionOutcome",
    "EpisodeResult",
    "FirstAmaDistribution",
    "ForcedValue",
    "LeanForm",
    "ModelParams",
    "PolicyCache",
    "PolicyEntry",
    "PolicyHandle",
    "ReducedForm",
    "SlotOutcome",
    "State",
    "ValueTable",
    "VerificationReport",
    "brute_force_value",
    "build_policy_cache",
    "build_table",
    "estimate_cost",
    "run_episode",
    "value",
    "verify",
]

__version__ = "0.1.0"
