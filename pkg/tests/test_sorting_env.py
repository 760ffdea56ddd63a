import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from probemind.grid import Mode
from probemind.sorting import (
    ARRAY_LENGTH,
    LEARNER_PERIOD,
    TRAIN_ARRAY,
    VALUE_MAX,
    SortDemoAction,
    SortLearnerAction,
    decode_sort_observation,
    encode_sort_observation,
    export_arrays,
    import_arrays,
    is_ascending,
    reset_sort,
    step_sort,
)

arrays = st.lists(st.integers(0, VALUE_MAX), min_size=10, max_size=10)


def make_state(values, **kw):
    s = reset_sort(Mode.TEST, 0)
    s.values = np.array(values, dtype=np.int64)
    for k, v in kw.items():
        setattr(s, k, v)
    return s


def test_train_reset_is_fixed_array():
    for seed in (0, 1, 99):
        s = reset_sort(Mode.TRAIN, seed)
        assert tuple(s.values) == TRAIN_ARRAY
        assert s.cursor == 0 and s.step_count == 0 and s.demo_steps_since_learner == 0


def test_test_reset_seeded_and_in_range():
    a = reset_sort(Mode.TEST, 42)
    b = reset_sort(Mode.TEST, 42)
    c = reset_sort(Mode.TEST, 43)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert a.values.min() >= 0 and a.values.max() <= VALUE_MAX


def test_swap_semantics_on_training_array():
    s = reset_sort(Mode.TRAIN, 0)
    s2, _ = step_sort(s, SortDemoAction(0, 1), None)
    assert tuple(s2.values[:3]) == (0, 2, 5)
    assert tuple(s2.values[3:]) == TRAIN_ARRAY[3:]


def test_flip_bit_least_significant():
    s = make_state([5] + [0] * 9, demo_steps_since_learner=LEARNER_PERIOD - 1)
    s2, _ = step_sort(s, SortDemoAction.noop(), SortLearnerAction(0, 0))
    assert s2.values[0] == 4  # 5 xor 1


def test_flip_changes_exactly_one_power_of_two():
    rng = np.random.default_rng(0)
    for _ in range(50):
        vals = rng.integers(0, 16, 10)
        s = make_state(vals, demo_steps_since_learner=LEARNER_PERIOD - 1)
        idx, bit = int(rng.integers(10)), int(rng.integers(4))
        s2, _ = step_sort(s, SortDemoAction.noop(), SortLearnerAction(idx, bit))
        diff = s2.values - vals
        assert np.count_nonzero(diff) == 1
        assert abs(diff[idx]) == 1 << bit


def test_learner_schedule_enforced():
    s = reset_sort(Mode.TRAIN, 0)
    with pytest.raises(ValueError):
        step_sort(s, SortDemoAction(0, 1), SortLearnerAction(0, 0))
    s.demo_steps_since_learner = LEARNER_PERIOD - 1
    with pytest.raises(ValueError):
        step_sort(s, SortDemoAction(0, 1), None)


def test_learner_acts_every_fifth_tick():
    s = reset_sort(Mode.TRAIN, 0, t_max=100)
    scheduled = []
    for tick in range(1, 26):
        la = SortLearnerAction.noop() if s.learner_scheduled else None
        if la is not None:
            scheduled.append(tick)
        s, terminal = step_sort(s, SortDemoAction.noop(), la)
        if terminal:
            break
    assert scheduled == [5, 10, 15, 20, 25]


def test_out_of_range_actions_are_noops():
    s = make_state(list(TRAIN_ARRAY), demo_steps_since_learner=LEARNER_PERIOD - 1)
    s2, _ = step_sort(s, SortDemoAction(3, 17), SortLearnerAction(12, 1))
    assert np.array_equal(s2.values, s.values)


def test_terminal_on_ascending_and_time_limit():
    s = make_state(list(range(10)))
    s.values[0] = 9  # unsorted
    s2, terminal = step_sort(s, SortDemoAction.noop(), None)
    assert not terminal
    s = make_state(sorted(TRAIN_ARRAY))
    _, terminal = step_sort(s, SortDemoAction.noop(), None)
    assert terminal
    s = make_state([9] + list(range(9)), step_count=29)
    s2, terminal = step_sort(s, SortDemoAction.noop(), None)
    assert terminal and s2.step_count == 30 and not is_ascending(s2.values)


def test_sorted_at_limit_counts_as_success():
    s = make_state([1, 0] + list(range(2, 10)), step_count=29)
    s2, terminal = step_sort(s, SortDemoAction(0, 1), None)
    assert terminal and is_ascending(s2.values)


@given(arrays)
@settings(max_examples=60, deadline=None)
def test_swap_preserves_multiset(vals):
    s = make_state(vals)
    s2, _ = step_sort(s, SortDemoAction(2, 7), None)
    assert sorted(s2.values) == sorted(vals)


def test_encode_shape_and_examples():
    s = make_state([15, 0] + [0] * 8)
    obs = encode_sort_observation(s)
    assert obs.shape == (10, 1, 4)
    assert tuple(obs[0, 0]) == (1, 1, 1, 1)
    assert tuple(obs[1, 0]) == (0, 0, 0, 0)


def test_encode_training_array_position_three():
    s = reset_sort(Mode.TRAIN, 0)
    obs = encode_sort_observation(s)
    value = int(s.values[3])  # 12
    expect = [(value >> b) & 1 for b in range(4)]
    assert expect == [0, 0, 1, 1]  # LSB first
    assert list(obs[3, 0]) == expect


@given(arrays)
@settings(max_examples=60, deadline=None)
def test_encode_decode_identity(vals):
    s = make_state(vals)
    assert np.array_equal(decode_sort_observation(encode_sort_observation(s)), s.values)


def test_array_io_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    suites = [rng.integers(0, 16, 10) for _ in range(5)]
    text = export_arrays(suites)
    back = import_arrays(text)
    assert all(np.array_equal(a, b) for a, b in zip(suites, back))
    with pytest.raises(ValueError):
        import_arrays("1,2,3\n")
