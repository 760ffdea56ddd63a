"""Rule-based demonstrator policies.

Grid tasks use a replanning shortest-path search (see ``planner``); the
Sorting task uses a bubble sort whose scan position persists between calls
and wraps around, so it recovers from external edits to the array.  A
noise wrapper randomizes a configurable fraction of emitted actions.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from . import planner
from .grid import GridAction, GridWorldState, TaskId, goal_reached, step_grid
from .sorting import ARRAY_LENGTH, SortDemoAction, SortState, is_ascending


def plan_grid_action(state: GridWorldState, node_budget: int = planner.DEFAULT_NODE_BUDGET) -> GridAction:
    """First action of the minimum-cost plan, or Stop when no plan exists.

    Replans from scratch on every call; the learner may have changed the
    world since the last one.
    """
    plan = planner.plan_grid(state, node_budget)
    if not plan:
        return GridAction.STOP
    return plan[0]


def plan_exists(state: GridWorldState) -> bool:
    return planner.plan_grid(state) is not None


def plan_length(state: GridWorldState) -> Optional[int]:
    plan = planner.plan_grid(state)
    return None if plan is None else len(plan)


def bubble_sort_action(state: SortState) -> tuple[SortDemoAction, int]:
    """Next swap of the modified bubble sort plus the updated scan cursor.

    Scans adjacent pairs starting from the persistent cursor, wrapping via
    i <- (i + 1) mod (n - 1); the first inversion is swapped and the cursor
    stays on it.  An ascending array yields a no-op.
    """
    values = state.values
    n = len(values)
    if is_ascending(values):
        return SortDemoAction.noop(), state.cursor
    i = state.cursor
    for _ in range(n - 1):
        if values[i] > values[i + 1]:
            return SortDemoAction(i, i + 1), i
        i = (i + 1) % (n - 1)
    raise AssertionError("non-ascending array has an adjacent inversion")


SORT_DEMO_NOISE_ACTIONS: tuple[SortDemoAction, ...] = tuple(
    SortDemoAction(i, i + 1) for i in range(ARRAY_LENGTH - 1)
) + (SortDemoAction.noop(),)


def with_action_noise(action, noise_rate: float, rng: np.random.Generator, action_set: Sequence):
    """With probability ``noise_rate`` replace ``action`` by a uniform draw
    from ``action_set``; otherwise pass it through."""
    if not 0.0 <= noise_rate <= 1.0:
        raise ValueError(f"noise_rate must be a probability, got {noise_rate}")
    if noise_rate > 0.0 and rng.random() < noise_rate:
        return action_set[int(rng.integers(len(action_set)))]
    return action


def trace_plan_rollout(
    state: GridWorldState, max_steps: Optional[int] = None
) -> list[tuple[str, GridAction]]:
    """Roll the planner forward in a learner-free copy of the world.

    Returns one (state digest hex, planned action) pair per step, for
    golden-file comparisons of demonstrator behavior.
    """
    if state.task == TaskId.SORTING:
        raise ValueError("grid tasks only")
    current = state.copy()
    current.learner_pos = None
    current.learner_inv = None
    limit = max_steps if max_steps is not None else current.rules.t_max
    trace = []
    for _ in range(limit):
        action = plan_grid_action(current)
        trace.append((current.digest().hex(), action))
        current, terminal = step_grid(current, action, None)
        if terminal or goal_reached(current):
            break
    return trace
