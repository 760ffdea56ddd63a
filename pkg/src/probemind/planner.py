"""Optimal replanning search over the grid-world composite state space.

The demonstrator's plan is the lexicographically smallest minimum-length
action sequence that reaches its task goal, where actions compare by their
``GridAction`` integer order.  Search states are (position, inventory,
occupancy): tool pickups, drops and door exchanges are ordinary unit-cost
search actions resolved by the same rules the environment uses.

The search is A* with consistent, admissible heuristics and a heap keyed
by (f, action-prefix).  Children push strictly larger keys than their
parent, so nodes pop in globally increasing (f, prefix) order and the
first goal popped carries the lexicographically smallest optimal plan.
The learner is treated as a static obstacle.
"""

from __future__ import annotations

import heapq
from typing import Callable, Optional

import numpy as np

from .grid import (
    EMPTY,
    GRID_SIZE,
    PASSING_WALL_ROW,
    MAZE_GOAL_COLS,
    MAZE_GOAL_ROWS,
    BlockKind,
    DOOR_TOOL,
    GridAction,
    GridWorldState,
    MOVE_DELTAS,
    TaskId,
    pickup_target,
    putdown_target,
)

INF = 10**9
DEFAULT_NODE_BUDGET = 400_000


def _distance_field(blocked: np.ndarray, goals: list[tuple[int, int]]) -> np.ndarray:
    """Multi-source BFS distances on the 11x11 grid; INF where unreachable."""
    dist = np.full((GRID_SIZE, GRID_SIZE), INF, dtype=np.int64)
    frontier = []
    for g in goals:
        if not blocked[g]:
            dist[g] = 0
            frontier.append(g)
    while frontier:
        nxt = []
        for (r, c) in frontier:
            d = dist[r, c] + 1
            for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                t = (r + dr, c + dc)
                if not blocked[t] and dist[t] > d:
                    dist[t] = d
                    nxt.append(t)
        frontier = nxt
    return dist


def _goal_cells(task: TaskId) -> list[tuple[int, int]]:
    if task == TaskId.PASSING:
        return [(r, c) for r in range(1, PASSING_WALL_ROW) for c in range(1, GRID_SIZE - 1)]
    if task == TaskId.MAZE:
        return [(r, c) for r in MAZE_GOAL_ROWS for c in MAZE_GOAL_COLS]
    raise ValueError(task)


def _maze_tool_reachable(state: GridWorldState, walk: np.ndarray) -> bool:
    """Whether any door on the grid has its matching tool held or reachable.

    ``walk`` is the relaxed distance field (walls and the learner block,
    doors and items are passable), so this is a sound necessary condition
    used only to cut hopeless searches short.
    """
    doors = [BlockKind(k) for k in np.unique(state.occupancy) if k in (
        BlockKind.YELLOW_DOOR, BlockKind.BLUE_DOOR)]
    for door in doors:
        tool = DOOR_TOOL[door]
        if state.demo_inv == tool:
            return True
        for (r, c) in np.argwhere(state.occupancy == tool):
            if walk[int(r), int(c)] < INF:
                return True
    return False


def plan_grid(
    state: GridWorldState, node_budget: int = DEFAULT_NODE_BUDGET
) -> Optional[list[GridAction]]:
    """Full optimal plan for the demonstrator, or None when no plan exists
    (or the search exceeds the node budget)."""
    task = state.task
    if task == TaskId.CONSTRUCTION:
        return _plan_construction(state, node_budget)
    if task not in (TaskId.PASSING, TaskId.MAZE):
        raise ValueError(f"not a grid task: {task}")

    occ = state.occupancy
    blocked_walls = occ == BlockKind.WALL
    if state.learner_pos is not None:
        blocked_walls = blocked_walls.copy()
        blocked_walls[state.learner_pos] = True
    goals = _goal_cells(task)
    hfield = _distance_field(blocked_walls, goals)
    if hfield[state.demo_pos] >= INF:
        return None  # unreachable even with every door and item removed
    goal_set = set(goals)
    if state.demo_pos in goal_set:
        return []

    if task == TaskId.MAZE:
        # If pure walking cannot reach the goal, some door must be opened,
        # which requires a held or reachable matching tool.
        blocked_now = occ != EMPTY
        if state.learner_pos is not None:
            blocked_now = blocked_now.copy()
            blocked_now[state.learner_pos] = True
        if _distance_field(blocked_now, goals)[state.demo_pos] >= INF:
            if not _maze_tool_reachable(state, hfield):
                return None

    def heuristic(pos, inv, occ_arr, occ_b):
        return int(hfield[pos])

    def is_goal(pos, inv, occ_arr, occ_b):
        return pos in goal_set

    return _astar(state, heuristic, is_goal, node_budget)


def _plan_construction(state: GridWorldState, node_budget: int) -> Optional[list[GridAction]]:
    goal = state.goal
    if goal is None:
        return None
    ka, kb = goal.kinds
    # A goal block held by the learner is beyond the demonstrator's reach.
    if state.learner_inv in (ka, kb):
        return None

    positions: dict[bytes, tuple] = {}

    def block_cells(occ_arr, occ_b):
        hit = positions.get(occ_b)
        if hit is None:
            cells = []
            for kind in (ka, kb):
                where = np.argwhere(occ_arr == kind)
                cells.append((int(where[0][0]), int(where[0][1])) if len(where) else None)
            hit = tuple(cells)
            positions[occ_b] = hit
        return hit

    def is_goal(pos, inv, occ_arr, occ_b):
        a, b = block_cells(occ_arr, occ_b)
        return a is not None and b is not None and abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1

    def heuristic(pos, inv, occ_arr, occ_b):
        a, b = block_cells(occ_arr, occ_b)
        if a is not None and b is not None:
            if abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1:
                return 0
            best = INF
            for x, y in ((a, b), (b, a)):
                d_reach = max(0, abs(pos[0] - x[0]) + abs(pos[1] - x[1]) - 1)
                d_carry = max(0, abs(x[0] - y[0]) + abs(x[1] - y[1]) - 3)
                best = min(best, d_reach + 2 + d_carry)
            return best
        # carrying one goal block: walk to within two cells of the other one
        other = b if inv == ka else a
        if other is None:
            return INF  # a goal block is on neither the grid nor in hand
        return max(0, abs(pos[0] - other[0]) + abs(pos[1] - other[1]) - 2) + 1

    start_b = state.occupancy.tobytes()
    if heuristic(state.demo_pos, state.demo_inv, state.occupancy, start_b) >= INF:
        return None
    return _astar(state, heuristic, is_goal, node_budget)


def _astar(
    state: GridWorldState,
    heuristic: Callable,
    is_goal: Callable,
    node_budget: int,
) -> Optional[list[GridAction]]:
    task = state.task
    other = state.learner_pos
    actions = [a for a in state.rules.demo_actions if a != GridAction.STOP]
    occ0 = state.occupancy.copy()
    occ0_b = occ0.tobytes()
    inv0 = -1 if state.demo_inv is None else int(state.demo_inv)

    h0 = heuristic(state.demo_pos, state.demo_inv, occ0, occ0_b)
    # Heap entries: (f, action prefix, pos, inventory code, occ array, occ bytes).
    # Prefixes are unique across pushes, so comparisons never reach the arrays.
    heap = [(h0, (), state.demo_pos, inv0, occ0, occ0_b)]
    seen: set = set()
    pops = 0
    while heap and pops < node_budget:
        f, path, pos, inv_code, occ, occ_b = heapq.heappop(heap)
        key = (pos, inv_code, occ_b)
        if key in seen:
            continue
        seen.add(key)
        pops += 1
        inv = None if inv_code < 0 else BlockKind(inv_code)
        if is_goal(pos, inv, occ, occ_b):
            return [GridAction(a) for a in path]
        g = len(path)
        for action in actions:
            if action in MOVE_DELTAS:
                dr, dc = MOVE_DELTAS[action]
                t = (pos[0] + dr, pos[1] + dc)
                if occ[t] != EMPTY or t == other:
                    continue
                h = heuristic(t, inv, occ, occ_b)
                if h >= INF:
                    continue
                heapq.heappush(heap, (g + 1 + h, path + (int(action),), t, inv_code, occ, occ_b))
            elif action == GridAction.PICK_UP:
                hit = pickup_target(occ, pos, inv, task, "demo", other)
                if hit is None:
                    continue
                cell, kind, drop = hit
                occ2 = occ.copy()
                occ2[cell] = EMPTY
                if drop is not None:
                    occ2[drop] = inv
                occ2_b = occ2.tobytes()
                h = heuristic(pos, kind, occ2, occ2_b)
                if h >= INF:
                    continue
                heapq.heappush(
                    heap, (g + 1 + h, path + (int(action),), pos, int(kind), occ2, occ2_b)
                )
            elif action == GridAction.PUT_DOWN:
                if inv is None:
                    continue
                t = putdown_target(occ, pos, other)
                if t is None:
                    continue
                occ2 = occ.copy()
                occ2[t] = inv
                occ2_b = occ2.tobytes()
                h = heuristic(pos, None, occ2, occ2_b)
                if h >= INF:
                    continue
                heapq.heappush(heap, (g + 1 + h, path + (int(action),), pos, -1, occ2, occ2_b))
    return None
