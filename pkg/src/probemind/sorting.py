"""Sorting environment: a 10-element array of 4-bit values.

The demonstrator swaps a pair of positions each tick; on every fifth tick
the learner may additionally flip one bit of one value.  The episode ends
when the array is ascending or the step limit is hit (a tick that does
both counts as success).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

ARRAY_LENGTH = 10
VALUE_BITS = 4
VALUE_MAX = (1 << VALUE_BITS) - 1
LEARNER_PERIOD = 5
SORT_T_MAX = 30

TRAIN_ARRAY = (2, 0, 5, 12, 14, 10, 3, 11, 9, 7)


@dataclass(frozen=True)
class SortDemoAction:
    """Swap of two positions; any index >= ARRAY_LENGTH decodes to a no-op."""

    i: int
    j: int

    @classmethod
    def noop(cls) -> "SortDemoAction":
        return cls(ARRAY_LENGTH, ARRAY_LENGTH)

    @property
    def is_noop(self) -> bool:
        return not (0 <= self.i < ARRAY_LENGTH and 0 <= self.j < ARRAY_LENGTH)


@dataclass(frozen=True)
class SortLearnerAction:
    """Flip bit ``bit`` of the value at ``idx``; idx >= ARRAY_LENGTH is a no-op."""

    idx: int
    bit: int

    @classmethod
    def noop(cls) -> "SortLearnerAction":
        return cls(ARRAY_LENGTH, 0)

    @property
    def is_noop(self) -> bool:
        return not (0 <= self.idx < ARRAY_LENGTH and 0 <= self.bit < VALUE_BITS)


@dataclass
class SortState:
    values: np.ndarray  # (10,) int64 in [0, 15]
    step_count: int = 0
    demo_steps_since_learner: int = 0  # in [0, LEARNER_PERIOD)
    cursor: int = 0  # persistent scan position of the modified bubble sort
    t_max: int = SORT_T_MAX

    def copy(self) -> "SortState":
        return SortState(
            values=self.values.copy(),
            step_count=self.step_count,
            demo_steps_since_learner=self.demo_steps_since_learner,
            cursor=self.cursor,
            t_max=self.t_max,
        )

    def digest(self) -> bytes:
        return self.values.astype(np.int8).tobytes()

    @property
    def learner_scheduled(self) -> bool:
        return self.demo_steps_since_learner == LEARNER_PERIOD - 1


def is_ascending(values: np.ndarray) -> bool:
    return bool(np.all(values[:-1] <= values[1:]))


def reset_sort(mode, seed: int, t_max: int = SORT_T_MAX) -> SortState:
    """Train mode always yields the fixed training array; test mode a seeded
    uniform random array."""
    from .grid import Mode  # shared mode enum

    if seed < 0:
        raise ValueError("seed must be non-negative")
    if Mode(mode) == Mode.TRAIN:
        values = np.array(TRAIN_ARRAY, dtype=np.int64)
    else:
        rng = np.random.default_rng(seed)
        values = rng.integers(0, VALUE_MAX + 1, size=ARRAY_LENGTH, dtype=np.int64)
    return SortState(values=values, t_max=t_max)


def step_sort(
    state: SortState,
    demo_action: SortDemoAction,
    learner_action: Optional[SortLearnerAction],
    cursor_after: Optional[int] = None,
) -> tuple[SortState, bool]:
    """Apply the demonstrator's swap, then the learner's flip if scheduled.

    ``learner_action`` must be present exactly on scheduled ticks (every
    fifth demonstrator step).  ``cursor_after`` lets the rule-based
    demonstrator persist its scan position alongside the transition.
    Out-of-range indices are absorbed as no-ops.
    """
    if (learner_action is not None) != state.learner_scheduled:
        raise ValueError(
            "learner action must be supplied exactly on scheduled ticks "
            f"(counter={state.demo_steps_since_learner})"
        )
    new = state.copy()
    if not demo_action.is_noop:
        i, j = demo_action.i, demo_action.j
        new.values[[i, j]] = new.values[[j, i]]
    if learner_action is not None and not learner_action.is_noop:
        new.values[learner_action.idx] ^= 1 << learner_action.bit
    new.step_count = state.step_count + 1
    new.demo_steps_since_learner = (state.demo_steps_since_learner + 1) % LEARNER_PERIOD
    if cursor_after is not None:
        new.cursor = cursor_after
    terminal = is_ascending(new.values) or new.step_count >= new.t_max
    return new, terminal


def encode_sort_observation(state: SortState) -> np.ndarray:
    """Shape (10, 1, 4): channel b of position p is bit b (LSB first) of values[p]."""
    obs = np.zeros((ARRAY_LENGTH, 1, VALUE_BITS), dtype=np.float64)
    for b in range(VALUE_BITS):
        obs[:, 0, b] = (state.values >> b) & 1
    return obs


def decode_sort_observation(obs: np.ndarray) -> np.ndarray:
    """Inverse of encode_sort_observation."""
    bits = obs[:, 0, :].astype(np.int64)
    return (bits * (1 << np.arange(VALUE_BITS))).sum(axis=1)


def export_arrays(arrays: list[np.ndarray]) -> str:
    """One comma-separated array per line (fixed evaluation suites)."""
    return "\n".join(",".join(str(int(v)) for v in arr) for arr in arrays) + "\n"


def import_arrays(text: str) -> list[np.ndarray]:
    out = []
    for line in text.strip().splitlines():
        values = np.array([int(v) for v in line.split(",")], dtype=np.int64)
        if len(values) != ARRAY_LENGTH or values.min() < 0 or values.max() > VALUE_MAX:
            raise ValueError(f"bad array line: {line!r}")
        out.append(values)
    return out
