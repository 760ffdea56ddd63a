"""Deterministic 11x11 grid-world engine: Passing, Maze Navigation, Construction.

World rules shared by all three tasks:

* The outer border of the 11x11 grid is solid wall.  Every cell holds at
  most one block; any block makes a cell impassable for both agents, and
  so does the other agent's body.
* Within one tick the demonstrator's action resolves first, then the
  learner's.  Illegal actions (moving into a block, the other agent, or
  out of bounds; picking or putting with no applicable target) resolve as
  no-ops.
* PickUp and PutDown target the four 4-adjacent cells scanned in the
  fixed order N, S, W, E; the first applicable cell is used.  An agent
  carries at most one item; carried items leave the grid.
* Doors (Maze) can only be picked up while carrying the matching tool
  (key for the yellow door, hammer for the blue one).  The exchange is
  atomic: the door enters the inventory and the tool is dropped on the
  first empty adjacent cell, so block counts are conserved.

Task specifics (goal, action sets, fixed training layout, randomized test
layouts) live in the ``TASK_RULES`` table and the ``reset_grid`` branches.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum
from importlib import resources
from typing import Optional

import numpy as np

GRID_SIZE = 11
EMPTY = -1

# Passing: horizontal wall with a single gap; rows strictly above it are the goal.
PASSING_WALL_ROW = 5
PASSING_TRAIN_GAP = (5, 1)
PASSING_TRAIN_DEMO = (9, 9)
PASSING_LEARNER_START = (1, 5)

# Maze: four rooms split by a wall cross, one gap per wall segment.
MAZE_WALL_ROW = 5
MAZE_WALL_COL = 5
MAZE_GAP_TOP = (2, 5)      # top-left <-> top-right
MAZE_GAP_LEFT = (5, 2)     # top-left <-> bottom-left
MAZE_GAP_BOTTOM = (8, 5)   # bottom-left <-> bottom-right
MAZE_GAP_RIGHT = (5, 8)    # top-right <-> bottom-right
MAZE_GAPS = (MAZE_GAP_TOP, MAZE_GAP_LEFT, MAZE_GAP_BOTTOM, MAZE_GAP_RIGHT)
MAZE_DEMO_START = (1, 9)
MAZE_LEARNER_START = (4, 9)
# Tool region of the top-right room: tools (and, in test mode, the
# demonstrator) are placed on these cells.
MAZE_TOOL_REGION = tuple((r, c) for r in (2, 3) for c in (6, 7, 8))
MAZE_GOAL_ROWS = range(1, 5)
MAZE_GOAL_COLS = range(1, 5)

CONSTRUCTION_BLOCK_CELLS = ((3, 3), (3, 7), (7, 5))
CONSTRUCTION_DEMO_START = (9, 5)
CONSTRUCTION_LEARNER_START = (1, 5)
CONSTRUCTION_TEST_OBSTACLES = 6

RESAMPLE_LIMIT = 1000


class TaskId(str, Enum):
    PASSING = "passing"
    MAZE = "maze"
    CONSTRUCTION = "construction"
    SORTING = "sorting"  # handled by probemind.sorting; rejected by grid ops


class Mode(str, Enum):
    TRAIN = "train"
    TEST = "test"


class BlockKind(IntEnum):
    WALL = 0
    YELLOW_DOOR = 1
    BLUE_DOOR = 2
    KEY = 3
    HAMMER = 4
    COLOR_0 = 5
    COLOR_1 = 6
    COLOR_2 = 7
    COLOR_3 = 8


PALETTE_SIZE = 4


def color_block(color_id: int) -> BlockKind:
    if not 0 <= color_id < PALETTE_SIZE:
        raise ValueError(f"color_id out of range: {color_id}")
    return BlockKind(BlockKind.COLOR_0 + color_id)


def is_color_block(kind: int) -> bool:
    return BlockKind.COLOR_0 <= kind <= BlockKind.COLOR_3


class GridAction(IntEnum):
    # Integer order doubles as the planner's tie-break order.
    MOVE_N = 0
    MOVE_S = 1
    MOVE_W = 2
    MOVE_E = 3
    PICK_UP = 4
    PUT_DOWN = 5
    STOP = 6


MOVE_DELTAS = {
    GridAction.MOVE_N: (-1, 0),
    GridAction.MOVE_S: (1, 0),
    GridAction.MOVE_W: (0, -1),
    GridAction.MOVE_E: (0, 1),
}

# PickUp/PutDown scan their four neighbours in this fixed order.
ADJACENT_SCAN = ((-1, 0), (1, 0), (0, -1), (0, 1))

ALL_ACTIONS = (
    GridAction.MOVE_N,
    GridAction.MOVE_S,
    GridAction.MOVE_W,
    GridAction.MOVE_E,
    GridAction.PICK_UP,
    GridAction.PUT_DOWN,
    GridAction.STOP,
)
MOVE_AND_STOP = (
    GridAction.MOVE_N,
    GridAction.MOVE_S,
    GridAction.MOVE_W,
    GridAction.MOVE_E,
    GridAction.STOP,
)


@dataclass(frozen=True)
class TaskRules:
    task: TaskId
    t_max: int
    block_kinds: tuple[BlockKind, ...]
    demo_actions: tuple[GridAction, ...]
    learner_actions: tuple[GridAction, ...]
    palette: int = 0

    @property
    def n_blocks(self) -> int:
        return len(self.block_kinds)

    @property
    def obs_channels(self) -> int:
        # one channel per block kind plus the observer's own position
        return self.n_blocks + 1


TASK_RULES = {
    TaskId.PASSING: TaskRules(
        task=TaskId.PASSING,
        t_max=15,
        block_kinds=(BlockKind.WALL,),
        demo_actions=MOVE_AND_STOP,
        learner_actions=ALL_ACTIONS,
    ),
    TaskId.MAZE: TaskRules(
        task=TaskId.MAZE,
        t_max=60,
        block_kinds=(
            BlockKind.WALL,
            BlockKind.YELLOW_DOOR,
            BlockKind.BLUE_DOOR,
            BlockKind.KEY,
            BlockKind.HAMMER,
        ),
        demo_actions=ALL_ACTIONS,
        learner_actions=ALL_ACTIONS,
    ),
    TaskId.CONSTRUCTION: TaskRules(
        task=TaskId.CONSTRUCTION,
        t_max=30,
        block_kinds=(
            BlockKind.WALL,
            BlockKind.COLOR_0,
            BlockKind.COLOR_1,
            BlockKind.COLOR_2,
            BlockKind.COLOR_3,
        ),
        demo_actions=ALL_ACTIONS,
        learner_actions=ALL_ACTIONS,
        palette=PALETTE_SIZE,
    ),
}

# Matching tool for each door kind.
DOOR_TOOL = {BlockKind.YELLOW_DOOR: BlockKind.KEY, BlockKind.BLUE_DOOR: BlockKind.HAMMER}


class LayoutGenerationError(RuntimeError):
    """Raised when a test layout cannot be made solvable within the resample bound."""


@dataclass(frozen=True)
class ConstructionGoal:
    """Unordered pair of distinct color ids the demonstrator must join."""

    color_a: int
    color_b: int

    def __post_init__(self):
        if self.color_a == self.color_b:
            raise ValueError("goal colors must be distinct")
        if not (0 <= self.color_a < PALETTE_SIZE and 0 <= self.color_b < PALETTE_SIZE):
            raise ValueError("goal colors out of palette range")

    @property
    def kinds(self) -> tuple[BlockKind, BlockKind]:
        return color_block(self.color_a), color_block(self.color_b)


@dataclass
class GridWorldState:
    task: TaskId
    occupancy: np.ndarray  # (11, 11) int8, EMPTY or a BlockKind value
    demo_pos: tuple[int, int]
    learner_pos: Optional[tuple[int, int]]
    demo_inv: Optional[BlockKind] = None
    learner_inv: Optional[BlockKind] = None
    step_count: int = 0
    goal: Optional[ConstructionGoal] = None

    def copy(self) -> "GridWorldState":
        return GridWorldState(
            task=self.task,
            occupancy=self.occupancy.copy(),
            demo_pos=self.demo_pos,
            learner_pos=self.learner_pos,
            demo_inv=self.demo_inv,
            learner_inv=self.learner_inv,
            step_count=self.step_count,
            goal=self.goal,
        )

    def digest(self) -> bytes:
        """Serialize occupancy, agent positions and inventories (not the step counter)."""
        inv = bytes(
            [
                255 if self.demo_inv is None else int(self.demo_inv),
                255 if self.learner_inv is None else int(self.learner_inv),
            ]
        )
        lpos = (255, 255) if self.learner_pos is None else self.learner_pos
        return (
            self.occupancy.tobytes()
            + bytes(self.demo_pos)
            + bytes(lpos)
            + inv
        )

    @property
    def rules(self) -> TaskRules:
        return TASK_RULES[self.task]


def _empty_room() -> np.ndarray:
    occ = np.full((GRID_SIZE, GRID_SIZE), EMPTY, dtype=np.int8)
    occ[0, :] = BlockKind.WALL
    occ[-1, :] = BlockKind.WALL
    occ[:, 0] = BlockKind.WALL
    occ[:, -1] = BlockKind.WALL
    return occ


def _passing_room(gap_col: int) -> np.ndarray:
    occ = _empty_room()
    occ[PASSING_WALL_ROW, 1:-1] = BlockKind.WALL
    occ[PASSING_WALL_ROW, gap_col] = EMPTY
    return occ


def _maze_room() -> np.ndarray:
    occ = _empty_room()
    occ[MAZE_WALL_ROW, 1:-1] = BlockKind.WALL
    occ[1:-1, MAZE_WALL_COL] = BlockKind.WALL
    for gap in MAZE_GAPS:
        occ[gap] = EMPTY
    return occ


def reset_grid(task: TaskId, mode: Mode, seed: int) -> GridWorldState:
    """Build the initial world for a task.

    Train mode reproduces the fixed training layout (tool placement,
    block coloring and the construction goal still draw from the seed).
    Test mode randomizes layout elements; unsolvable draws are resampled
    up to ``RESAMPLE_LIMIT`` times before raising LayoutGenerationError.
    """
    if seed < 0:
        raise ValueError("seed must be non-negative")
    task = TaskId(task)
    mode = Mode(mode)
    if task == TaskId.PASSING:
        return _reset_passing(mode, seed)
    if task == TaskId.MAZE:
        return _reset_maze(mode, seed)
    if task == TaskId.CONSTRUCTION:
        return _reset_construction(mode, seed)
    raise ValueError(f"not a grid task: {task}")


def _reset_passing(mode: Mode, seed: int) -> GridWorldState:
    rng = np.random.default_rng(seed)
    if mode == Mode.TRAIN:
        gap_col = PASSING_TRAIN_GAP[1]
        demo_pos = PASSING_TRAIN_DEMO
    else:
        gap_col = int(rng.integers(1, GRID_SIZE - 1))
        demo_pos = (int(rng.integers(6, GRID_SIZE - 1)), int(rng.integers(1, GRID_SIZE - 1)))
    return GridWorldState(
        task=TaskId.PASSING,
        occupancy=_passing_room(gap_col),
        demo_pos=demo_pos,
        learner_pos=PASSING_LEARNER_START,
    )


def _reset_maze(mode: Mode, seed: int) -> GridWorldState:
    from . import demonstrators  # deferred: solvability check needs the planner

    rng = np.random.default_rng(seed)
    for _ in range(RESAMPLE_LIMIT):
        occ = _maze_room()
        if mode == Mode.TRAIN:
            occ[MAZE_GAP_TOP] = BlockKind.YELLOW_DOOR
            occ[MAZE_GAP_LEFT] = BlockKind.BLUE_DOOR
            demo_pos = MAZE_DEMO_START
            free = list(MAZE_TOOL_REGION)
        else:
            n_doors = 1 + int(rng.integers(2))
            if n_doors == 1:
                doors = [
                    (BlockKind.YELLOW_DOOR, BlockKind.BLUE_DOOR)[int(rng.integers(2))]
                ]
            else:
                doors = [BlockKind.YELLOW_DOOR, BlockKind.BLUE_DOOR]
            gap_idx = rng.choice(len(MAZE_GAPS), size=n_doors, replace=False)
            for kind, g in zip(doors, gap_idx):
                occ[MAZE_GAPS[int(g)]] = kind
            free = list(MAZE_TOOL_REGION)
            demo_pos = free.pop(int(rng.integers(len(free))))
        tool_idx = rng.choice(len(free), size=2, replace=False)
        occ[free[int(tool_idx[0])]] = BlockKind.KEY
        occ[free[int(tool_idx[1])]] = BlockKind.HAMMER
        state = GridWorldState(
            task=TaskId.MAZE,
            occupancy=occ,
            demo_pos=demo_pos,
            learner_pos=MAZE_LEARNER_START,
        )
        if mode == Mode.TRAIN or demonstrators.plan_exists(state):
            return state
    raise LayoutGenerationError("maze test layout unsolvable after resampling")


def _reset_construction(mode: Mode, seed: int) -> GridWorldState:
    from . import demonstrators

    rng = np.random.default_rng(seed)
    for _ in range(RESAMPLE_LIMIT):
        occ = _empty_room()
        colors = rng.choice(PALETTE_SIZE, size=3, replace=False)
        for cell, cid in zip(CONSTRUCTION_BLOCK_CELLS, colors):
            occ[cell] = color_block(int(cid))
        pair = rng.choice(3, size=2, replace=False)
        goal = ConstructionGoal(
            color_a=int(colors[int(pair[0])]), color_b=int(colors[int(pair[1])])
        )
        if mode == Mode.TEST:
            candidates = _construction_obstacle_candidates(occ)
            picks = rng.choice(len(candidates), size=CONSTRUCTION_TEST_OBSTACLES, replace=False)
            for i in picks:
                occ[candidates[int(i)]] = BlockKind.WALL
        state = GridWorldState(
            task=TaskId.CONSTRUCTION,
            occupancy=occ,
            demo_pos=CONSTRUCTION_DEMO_START,
            learner_pos=CONSTRUCTION_LEARNER_START,
            goal=goal,
        )
        if mode == Mode.TRAIN or demonstrators.plan_exists(state):
            return state
    raise LayoutGenerationError("construction test layout unsolvable after resampling")


def _construction_obstacle_candidates(occ: np.ndarray) -> list[tuple[int, int]]:
    cells = set()
    for (br, bc) in CONSTRUCTION_BLOCK_CELLS:
        for dr in (-1, 0, 1):
            for dc in (0, -1, 1):
                r, c = br + dr, bc + dc
                if (dr, dc) == (0, 0):
                    continue
                if occ[r, c] == EMPTY and (r, c) not in (
                    CONSTRUCTION_DEMO_START,
                    CONSTRUCTION_LEARNER_START,
                ):
                    cells.add((r, c))
    return sorted(cells)


# ---------------------------------------------------------------------------
# Action resolution


def pickup_target(
    occ: np.ndarray,
    pos: tuple[int, int],
    inv: Optional[BlockKind],
    task: TaskId,
    agent: str,
    other_pos: Optional[tuple[int, int]] = None,
) -> Optional[tuple[tuple[int, int], BlockKind, Optional[tuple[int, int]]]]:
    """First applicable pickup under the N,S,W,E scan, or None.

    Returns (cell, kind, tool_drop_cell).  tool_drop_cell is set for the
    door-with-tool exchange and None for plain pickups.
    """
    r, c = pos
    for dr, dc in ADJACENT_SCAN:
        tr, tc = r + dr, c + dc
        kind = occ[tr, tc]
        if kind == EMPTY:
            continue
        kind = BlockKind(kind)
        if task == TaskId.PASSING:
            on_border = tr in (0, GRID_SIZE - 1) or tc in (0, GRID_SIZE - 1)
            if agent == "learner" and inv is None and kind == BlockKind.WALL and not on_border:
                return (tr, tc), kind, None
        elif task == TaskId.MAZE:
            if inv is None and kind in (BlockKind.KEY, BlockKind.HAMMER):
                return (tr, tc), kind, None
            if kind in DOOR_TOOL and inv == DOOR_TOOL[kind]:
                drop = _first_empty_adjacent(occ, pos, exclude=(tr, tc), other_pos=other_pos)
                if drop is not None:
                    return (tr, tc), kind, drop
        elif task == TaskId.CONSTRUCTION:
            if inv is None and is_color_block(kind):
                return (tr, tc), kind, None
    return None


def _first_empty_adjacent(
    occ: np.ndarray,
    pos: tuple[int, int],
    exclude: Optional[tuple[int, int]] = None,
    other_pos: Optional[tuple[int, int]] = None,
) -> Optional[tuple[int, int]]:
    r, c = pos
    for dr, dc in ADJACENT_SCAN:
        t = (r + dr, c + dc)
        if t == exclude or t == other_pos:
            continue
        if occ[t] == EMPTY:
            return t
    return None


def putdown_target(
    occ: np.ndarray,
    pos: tuple[int, int],
    other_pos: Optional[tuple[int, int]],
) -> Optional[tuple[int, int]]:
    """First empty adjacent cell not occupied by the other agent, or None."""
    r, c = pos
    for dr, dc in ADJACENT_SCAN:
        t = (r + dr, c + dc)
        if occ[t] == EMPTY and t != other_pos:
            return t
    return None


def apply_agent_action(
    occ: np.ndarray,
    pos: tuple[int, int],
    inv: Optional[BlockKind],
    action: GridAction,
    task: TaskId,
    agent: str,
    other_pos: Optional[tuple[int, int]],
) -> tuple[tuple[int, int], Optional[BlockKind]]:
    """Resolve one agent's action, mutating ``occ`` in place.

    Returns the new (pos, inv).  Illegal actions leave everything unchanged.
    The caller is responsible for restricting ``action`` to the agent's set.
    """
    if action in MOVE_DELTAS:
        dr, dc = MOVE_DELTAS[action]
        t = (pos[0] + dr, pos[1] + dc)
        if occ[t] == EMPTY and t != other_pos:
            return t, inv
        return pos, inv
    if action == GridAction.PICK_UP:
        hit = pickup_target(occ, pos, inv, task, agent, other_pos)
        if hit is None:
            return pos, inv
        cell, kind, drop = hit
        occ[cell] = EMPTY
        if drop is not None:
            occ[drop] = inv  # tool swapped out of the inventory
        return pos, kind
    if action == GridAction.PUT_DOWN:
        if inv is None:
            return pos, inv
        t = putdown_target(occ, pos, other_pos)
        if t is None:
            return pos, inv
        occ[t] = inv
        return pos, None
    return pos, inv  # STOP


def _check_action(action: GridAction, allowed: tuple[GridAction, ...], agent: str):
    if action not in allowed:
        raise ValueError(f"action {action!r} not in the {agent} action set")


def peek_after_demo(state: GridWorldState, demo_action: GridAction) -> GridWorldState:
    """State after only the demonstrator's action has resolved."""
    _check_action(demo_action, state.rules.demo_actions, "demonstrator")
    new = state.copy()
    new.demo_pos, new.demo_inv = apply_agent_action(
        new.occupancy, new.demo_pos, new.demo_inv, demo_action,
        state.task, "demo", new.learner_pos,
    )
    return new


def step_grid(
    state: GridWorldState,
    demo_action: GridAction,
    learner_action: Optional[GridAction],
) -> tuple[GridWorldState, bool]:
    """Advance one tick: demonstrator first, then the learner (if present).

    Returns the new state and whether the episode terminated (goal reached
    or the step limit hit).
    """
    new = peek_after_demo(state, demo_action)
    if new.learner_pos is not None:
        if learner_action is None:
            learner_action = GridAction.STOP
        _check_action(learner_action, state.rules.learner_actions, "learner")
        new.learner_pos, new.learner_inv = apply_agent_action(
            new.occupancy, new.learner_pos, new.learner_inv, learner_action,
            state.task, "learner", new.demo_pos,
        )
    elif learner_action is not None:
        raise ValueError("learner action supplied but the learner is absent")
    new.step_count = state.step_count + 1
    terminal = goal_reached(new) or new.step_count >= state.rules.t_max
    return new, terminal


def goal_reached(state: GridWorldState) -> bool:
    """Task goal predicate; a pure function of the state."""
    if state.task == TaskId.PASSING:
        return state.demo_pos[0] < PASSING_WALL_ROW
    if state.task == TaskId.MAZE:
        r, c = state.demo_pos
        return r in MAZE_GOAL_ROWS and c in MAZE_GOAL_COLS
    if state.task == TaskId.CONSTRUCTION:
        return construction_goal_met(state.occupancy, state.goal)
    raise ValueError(f"not a grid task: {state.task}")


def construction_goal_met(occ: np.ndarray, goal: Optional[ConstructionGoal]) -> bool:
    if goal is None:
        return False
    ka, kb = goal.kinds
    a = np.argwhere(occ == ka)
    b = np.argwhere(occ == kb)
    if len(a) == 0 or len(b) == 0:
        return False
    ar, ac = a[0]
    br, bc = b[0]
    return abs(int(ar) - int(br)) + abs(int(ac) - int(bc)) == 1


# ---------------------------------------------------------------------------
# Observation encoding


class Viewpoint(str, Enum):
    DEMONSTRATOR = "demonstrator"
    LEARNER = "learner"


def encode_grid_observation(state: GridWorldState, viewpoint: Viewpoint) -> np.ndarray:
    """One-hot observation tensor of shape (11, 11, n_blocks + 1).

    Channel k is the occupancy map of the task's k-th block kind; the other
    agent shows up in the wall channel; the final channel marks the
    observing agent's own position.  Carried items are not encoded.
    """
    rules = state.rules
    viewpoint = Viewpoint(viewpoint)
    obs = np.zeros((GRID_SIZE, GRID_SIZE, rules.obs_channels), dtype=np.float64)
    for ch, kind in enumerate(rules.block_kinds):
        obs[:, :, ch] = state.occupancy == kind
    wall_ch = rules.block_kinds.index(BlockKind.WALL)
    if viewpoint == Viewpoint.DEMONSTRATOR:
        self_pos, other_pos = state.demo_pos, state.learner_pos
    else:
        if state.learner_pos is None:
            raise ValueError("learner viewpoint requested but the learner is absent")
        self_pos, other_pos = state.learner_pos, state.demo_pos
    if other_pos is not None:
        obs[other_pos[0], other_pos[1], wall_ch] = 1.0
    obs[self_pos[0], self_pos[1], rules.n_blocks] = 1.0
    return obs


# ---------------------------------------------------------------------------
# ASCII layout maps (External interface: golden layouts and replay frames)

_KIND_CHARS = {
    BlockKind.WALL: "#",
    BlockKind.YELLOW_DOOR: "Y",
    BlockKind.BLUE_DOOR: "B",
    BlockKind.KEY: "k",
    BlockKind.HAMMER: "h",
    BlockKind.COLOR_0: "0",
    BlockKind.COLOR_1: "1",
    BlockKind.COLOR_2: "2",
    BlockKind.COLOR_3: "3",
}
_CHAR_KINDS = {v: k for k, v in _KIND_CHARS.items()}


def render_ascii(state: GridWorldState) -> str:
    """One character per cell: blocks per legend, D/L for the agents."""
    rows = []
    for r in range(GRID_SIZE):
        row = []
        for c in range(GRID_SIZE):
            if (r, c) == state.demo_pos:
                row.append("D")
            elif state.learner_pos is not None and (r, c) == state.learner_pos:
                row.append("L")
            elif state.occupancy[r, c] == EMPTY:
                row.append(".")
            else:
                row.append(_KIND_CHARS[BlockKind(state.occupancy[r, c])])
        rows.append("".join(row))
    return "\n".join(rows)


def parse_ascii(text: str) -> tuple[np.ndarray, Optional[tuple[int, int]], Optional[tuple[int, int]]]:
    """Inverse of render_ascii; returns (occupancy, demo_pos, learner_pos)."""
    lines = [ln for ln in text.strip().splitlines() if ln and not ln.startswith(";")]
    if len(lines) != GRID_SIZE or any(len(ln) != GRID_SIZE for ln in lines):
        raise ValueError("layout map must be 11 lines of 11 characters")
    occ = np.full((GRID_SIZE, GRID_SIZE), EMPTY, dtype=np.int8)
    demo = learner = None
    for r, line in enumerate(lines):
        for c, ch in enumerate(line):
            if ch == ".":
                continue
            if ch == "D":
                demo = (r, c)
            elif ch == "L":
                learner = (r, c)
            elif ch in _CHAR_KINDS:
                occ[r, c] = _CHAR_KINDS[ch]
            else:
                raise ValueError(f"unknown map character {ch!r}")
    return occ, demo, learner


def load_golden_layout(name: str) -> str:
    return resources.files("probemind.data").joinpath(f"{name}.map").read_text()


def load_task_config(task: TaskId) -> dict[str, str]:
    """Parse the shipped key-value task document."""
    text = resources.files("probemind.data").joinpath(f"{TaskId(task).value}.task").read_text()
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out
