import pytest

from deadline_offload import dp, oracle
from deadline_offload.model import (
    ModelParams,
    decision_range_from,
    offload_from_deadline,
    total_tasks,
    valid_decisions,
)
from conftest import states_up_to


def test_hand_anchors(params_n2):
    table = dp.ValueTable(params_n2)
    assert dp.value((0, 1), 2, table) == pytest.approx(1.375, abs=1e-12)
    assert dp.value((0, 0), 2, table) == pytest.approx(0.25, abs=1e-12)
    assert dp.value((1, 0), 1, table) == pytest.approx(2.0, abs=1e-12)
    assert dp.value((5, 3), 0, table) == 0.0


def test_branch_values(params_n2):
    table = dp.ValueTable(params_n2)
    assert dp.value_with_ama((0, 1), 2, table) == pytest.approx(1.25, abs=1e-12)
    assert dp.value_without_ama((0, 1), 2, table) == pytest.approx(1.5, abs=1e-12)
    assert dp.value_without_ama((3, 0), 1, table) == pytest.approx(9.0, abs=1e-12)
    assert dp.value_without_ama((0, 0), 1, table) == 0.0
    curve = dp.forced_values((0, 1), 2, table)
    assert curve.by_L[1] == pytest.approx(1.25, abs=1e-12)
    assert curve.by_L[0] == pytest.approx(1.5, abs=1e-12)
    assert curve.argmin == 1
    assert dp.value_forced((1, 0), 0, 1, table) == pytest.approx(3.0, abs=1e-12)


def test_single_slot_closed_form(params_n3):
    # one slot left: offload the doomed deadline-1 tasks or eat the penalty
    table = dp.ValueTable(params_n3)
    unit = (params_n3.p_u * params_n3.C_o + (1 - params_n3.p_u) * params_n3.C_p)
    for s in states_up_to(3, 4):
        assert dp.value(s, 1, table) == pytest.approx(unit * s[0], abs=1e-12)


def test_matches_brute_force_small(params_n3):
    table = dp.ValueTable(params_n3)
    for s in states_up_to(3, 3):
        for T in range(5):
            expected = oracle.brute_force_value(s, T, params_n3) if T else 0.0
            assert dp.value(s, T, table) == pytest.approx(expected, abs=1e-9)


def test_decomposition_exact(params_n3):
    table = dp.ValueTable(params_n3)
    for s in states_up_to(3, 4):
        for T in (1, 2, 3, 5, 8):
            combined = (params_n3.p_u * dp.value_with_ama(s, T, table)
                        + (1 - params_n3.p_u) * dp.value_without_ama(s, T, table))
            assert dp.value(s, T, table) == pytest.approx(combined, abs=1e-12)


def test_forced_offload_shift_identity(params_n3):
    # offloading L up front equals paying L*C_o and starting L tasks lighter
    from deadline_offload.model import offload_vector

    table = dp.ValueTable(params_n3)
    for s in states_up_to(3, 4):
        for T in (1, 2, 4, 6):
            for L in valid_decisions(s):
                lhs = dp.value_forced(s, L, T, table)
                trimmed = tuple(a - b for a, b in zip(s, offload_vector(s, L)))
                rhs = dp.value_without_ama(trimmed, T, table) + L * params_n3.C_o
                assert lhs == pytest.approx(rhs, abs=1e-12)


def test_f_bar_examples(params_n2):
    table = dp.ValueTable(params_n2)
    assert dp.f_bar(1, (1, 0), 1, 1, table) == pytest.approx(1.0, abs=1e-12)
    for s in ((0, 2), (1, 1)):
        assert dp.f_bar(3, s, 2, 0, table) == pytest.approx(
            dp.value_without_ama(s, 3, table), abs=1e-12)
    with pytest.raises(ValueError):
        dp.f_bar(2, (2, 1), 1, 1, table)   # below the d=1 floor


def test_f_bar_discrete_convexity(params_n3):
    table = dp.ValueTable(params_n3)
    for s in states_up_to(3, 5):
        for d in (1, 2, 3):
            dom = decision_range_from(s, d)
            if len(dom) < 3:
                continue
            for T in (1, 2, 4, 6):
                vals = [dp.f_bar(T, s, d, L, table) for L in dom]
                for a, b, c in zip(vals, vals[1:], vals[2:]):
                    assert a + c - 2 * b >= -1e-9


def test_f_bar_argmin_matches_forced_argmin(params_n3):
    table = dp.ValueTable(params_n3)
    for s in states_up_to(3, 4):
        for T in (1, 2, 3, 5):
            best_L, best = None, None
            for L in decision_range_from(s, 1):
                v = dp.f_bar(T, s, 1, L, table)
                if best is None or v < best:
                    best_L, best = L, v
            assert best_L == dp.forced_values(s, T, table).argmin


def test_postponement_monotonicity(params_n3):
    table = dp.ValueTable(params_n3)
    for s in states_up_to(3, 5):
        d = next((i for i, c in enumerate(s) if c), None)
        if d is None:
            continue
        for j in range(d + 1, 3):
            moved = list(s)
            moved[d] -= 1
            moved[j] += 1
            for T in (1, 3, 6):
                assert dp.value(s, T, table) >= dp.value(tuple(moved), T, table) - 1e-9


def test_build_table_counters(params_n3):
    table = dp.build_table(params_n3, 30, [(0, 1, 0)])
    assert table.stats.lean_entries <= table.stats.naive_entries
    assert table.stats.lean_entries == table.entry_count()
    assert dp.value((0, 1, 0), 30, table) == pytest.approx(
        dp.value((0, 1, 0), 30, dp.ValueTable(params_n3)), abs=1e-12)

    empty = dp.build_table(params_n3, 5, [])
    assert empty.entry_count() == 0


def test_build_table_deterministic(params_table2):
    seeds = [(0, 1, 1, 0, 2)]
    a = dp.build_table(params_table2, 60, seeds)
    b = dp.build_table(params_table2, 60, seeds)
    assert a._lean_levels == b._lean_levels
    assert a._raw_levels == b._raw_levels
    assert a.stats.naive_entries == b.stats.naive_entries


def test_backends_agree(params_table2):
    seeds = [(0, 1, 1, 0, 2), (2, 0, 4, 1, 0)]
    tn = dp.build_table(params_table2, 200, seeds, backend="numba", count_naive=False)
    tp = dp.build_table(params_table2, 200, seeds, backend="numpy", count_naive=False)
    for s in seeds:
        for T in (1, 3, 5, 37, 200):
            assert dp.value(s, T, tn) == pytest.approx(dp.value(s, T, tp), abs=1e-9)


def test_deep_horizon_against_raw_oracle():
    params = ModelParams.uniform_arrivals(N=4, p_u=0.45, mu=0.65, C_o=1.0, C_p=4.0, p0=0.3)
    table = dp.ValueTable(params)
    memo = {}
    for s in ((0, 0, 0, 0), (2, 1, 0, 3), (0, 2, 2, 1)):
        for T in (1, 2, 3, 4, 6, 9, 14, 20):
            assert dp.value(s, T, table) == pytest.approx(
                oracle.raw_value(s, T, params, memo), abs=1e-9)


def test_value_errors(params_n2):
    table = dp.ValueTable(params_n2)
    with pytest.raises(ValueError):
        dp.value((0, 1), -1, table)
    with pytest.raises(ValueError):
        dp.value_forced((0, 1), 2, 3, table)
    with pytest.raises(ValueError):
        dp.value_forced((0, 1), 0, 0, table)
