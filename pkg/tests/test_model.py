import itertools

import pytest
from hypothesis import given, strategies as st

from deadline_offload.model import (
    ModelParams,
    arrival_vector,
    deadline_shift,
    decision_range_from,
    instantaneous_cost,
    local_processing_vector,
    offload_from_deadline,
    offload_vector,
    successor,
    total_tasks,
    valid_decisions,
)
from conftest import states_up_to

small_states = st.lists(st.integers(0, 4), min_size=1, max_size=5).map(tuple)


def test_valid_decisions():
    assert list(valid_decisions((2, 0, 1))) == [0, 1, 2, 3]
    assert list(valid_decisions((0, 0, 0))) == [0]
    assert valid_decisions((0, 5, 6, 7, 8)) == range(27)


def test_instantaneous_cost_branches(params_n2):
    assert instantaneous_cost((2, 0), 1, params_n2, "ama") == 1 * 1 + 3 * 1
    for L in range(3):
        assert instantaneous_cost((2, 0), L, params_n2, "no_ama") == 6.0
    assert instantaneous_cost((0, 0), 0, params_n2, "expected") == 0.0
    # offloading more than n_1 with the agent: no penalty remains
    assert instantaneous_cost((1, 1), 2, params_n2, "ama") == 2.0

    with pytest.raises(ValueError):
        instantaneous_cost((1, 0), 2, params_n2, "ama")
    with pytest.raises(ValueError):
        instantaneous_cost((1, 0), 0, params_n2, "bogus")


def test_offload_vector_examples():
    assert offload_vector((0, 1, 2, 0, 1), 2) == (0, 1, 1, 0, 0)
    assert offload_vector((3, 0), 2) == (2, 0)
    assert offload_vector((1, 2, 3), 6) == (1, 2, 3)


def test_deadline_shift_examples():
    assert deadline_shift((0, 0, 1, 0, 1)) == (0, 1, 0, 1, 0)
    assert deadline_shift((5, 0, 0)) == (0, 0, 0)
    assert deadline_shift((0, 0)) == (0, 0)


def test_arrival_vector_examples():
    assert arrival_vector(3, 5) == (0, 0, 1, 0, 0)
    assert arrival_vector(0, 5) == (0, 0, 0, 0, 0)
    assert arrival_vector(1, 1) == (1,)
    with pytest.raises(ValueError):
        arrival_vector(6, 5)


def test_local_processing_vector_examples():
    assert local_processing_vector((0, 1, 1, 1, 0)) == (0, 1, 0, 0, 0)
    assert local_processing_vector((0, 0, 0)) == (0, 0, 0)
    assert local_processing_vector((0, 0, 4)) == (0, 0, 1)


def test_successor_worked_example():
    # offload two most imminent, shift, arrival at deadline 3, then process
    assert successor((0, 1, 2, 0, 1), 2, 3, True) == (0, 0, 1, 1, 0)
    assert successor((0, 1, 2, 0, 1), 2, 3, False) == (0, 1, 1, 1, 0)
    assert successor((0, 0), 0, 0, True) == (0, 0)


def test_offload_from_deadline_examples():
    s = (0, 5, 6, 7, 8)
    assert offload_from_deadline(s, 3, 7) == (0, 5, 0, 6, 8)
    assert offload_from_deadline(s, 5, 7) == (0, 5, 6, 7, 1)
    assert offload_from_deadline((2, 3, 4), 2, 0) == (2, 3, 4)


def test_offload_from_deadline_domain():
    assert decision_range_from((2, 3, 4), 1) == range(2, 10)
    assert decision_range_from((2, 3, 4), 2) == range(0, 8)
    assert decision_range_from((2, 3, 4), 3) == range(0, 5)
    with pytest.raises(ValueError):
        offload_from_deadline((2, 3, 4), 1, 1)   # below the forced n_1 floor
    with pytest.raises(ValueError):
        offload_from_deadline((2, 3, 4), 3, 5)


def test_conservation_exhaustive():
    # task count after one slot: total - offloaded - expired + arrived - processed
    for n in (2, 3, 4):
        for s in states_up_to(n, 4):
            for L in valid_decisions(s):
                left_behind = max(s[0] - L, 0)
                for k in range(n + 1):
                    for processed in (True, False):
                        inte = successor(s, L, k, False)
                        nxt = successor(s, L, k, processed)
                        expected = (total_tasks(s) - L - left_behind
                                    + (1 if k else 0)
                                    - (1 if processed and total_tasks(inte) else 0))
                        assert total_tasks(nxt) == expected
                        assert all(c >= 0 for c in nxt)


def test_offload_selects_most_imminent_deadlines():
    # the removed multiset of deadlines is lexicographically minimal
    for s in states_up_to(3, 5):
        for L in valid_decisions(s):
            chosen = offload_vector(s, L)
            chosen_deadlines = [d for d, c in enumerate(chosen, 1) for _ in range(c)]
            best = None
            for removal in itertools.product(*(range(c + 1) for c in s)):
                if sum(removal) != L:
                    continue
                deadlines = [d for d, c in enumerate(removal, 1) for _ in range(c)]
                if best is None or deadlines < best:
                    best = deadlines
            assert chosen_deadlines == best


def test_shift_n_times_clears_everything():
    for s in states_up_to(4, 6):
        v = s
        for _ in range(len(s)):
            v = deadline_shift(v)
        assert v == (0,) * len(s)


@given(small_states, st.integers(0, 30))
def test_offload_vector_properties(s, raw_L):
    L = raw_L % (total_tasks(s) + 1)
    o = offload_vector(s, L)
    assert sum(o) == L
    assert all(0 <= x <= c for x, c in zip(o, s))


@given(small_states, st.integers(0, 30), st.integers(0, 5), st.booleans())
def test_successor_never_negative(s, raw_L, raw_k, processed):
    L = raw_L % (total_tasks(s) + 1)
    k = raw_k % (len(s) + 1)
    assert all(c >= 0 for c in successor(s, L, k, processed))


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(N=2, p_u=0.5, mu=0.5, C_o=1.0, C_p=3.0, arrival=(0.5, 0.3, 0.3))
    with pytest.raises(ValueError):
        ModelParams(N=2, p_u=0.5, mu=0.5, C_o=2.0, C_p=1.0, arrival=(0.5, 0.25, 0.25))
    with pytest.raises(ValueError):
        ModelParams(N=2, p_u=1.5, mu=0.5, C_o=1.0, C_p=3.0, arrival=(0.5, 0.25, 0.25))
    with pytest.raises(ValueError):
        ModelParams(N=3, p_u=0.5, mu=0.5, C_o=1.0, C_p=3.0, arrival=(0.5, 0.25, 0.25))
