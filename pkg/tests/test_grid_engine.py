import numpy as np
import pytest

from probemind import grid
from probemind.grid import (
    BlockKind,
    GridAction,
    Mode,
    TaskId,
    Viewpoint,
    encode_grid_observation,
    goal_reached,
    load_golden_layout,
    load_task_config,
    parse_ascii,
    render_ascii,
    reset_grid,
    step_grid,
)

import oracles

GRID_TASKS = [TaskId.PASSING, TaskId.MAZE, TaskId.CONSTRUCTION]


def count_blocks(state):
    counts = {}
    for kind in state.rules.block_kinds:
        counts[kind] = int(np.sum(state.occupancy == kind))
    for inv in (state.demo_inv, state.learner_inv):
        if inv is not None:
            counts[inv] = counts.get(inv, 0) + 1
    return counts


def random_rollout(state, rng, steps):
    """Drive both agents with random legal-set actions."""
    rules = state.rules
    for _ in range(steps):
        da = rules.demo_actions[rng.integers(len(rules.demo_actions))]
        la = rules.learner_actions[rng.integers(len(rules.learner_actions))]
        state, terminal = step_grid(state, da, la)
        if terminal:
            break
    return state


@pytest.mark.parametrize("task", GRID_TASKS)
@pytest.mark.parametrize("mode", [Mode.TRAIN, Mode.TEST])
def test_reset_deterministic(task, mode):
    a = reset_grid(task, mode, 7)
    b = reset_grid(task, mode, 7)
    assert np.array_equal(a.occupancy, b.occupancy)
    assert a.demo_pos == b.demo_pos
    assert a.learner_pos == b.learner_pos
    assert a.goal == b.goal


def test_reset_rejects_negative_seed():
    with pytest.raises(ValueError):
        reset_grid(TaskId.PASSING, Mode.TRAIN, -1)


def test_passing_train_layout_matches_golden():
    state = reset_grid(TaskId.PASSING, Mode.TRAIN, 123)
    golden = load_golden_layout("passing_train")
    occ, demo, learner = parse_ascii(golden)
    assert np.array_equal(state.occupancy, occ)
    assert state.demo_pos == demo == (9, 9)
    assert state.learner_pos == learner == (1, 5)
    assert state.occupancy[5, 1] == grid.EMPTY  # gap at the left end


def test_maze_train_layout_matches_golden_fixed_parts():
    state = reset_grid(TaskId.MAZE, Mode.TRAIN, 5)
    occ, demo, learner = parse_ascii(load_golden_layout("maze_train"))
    fixed = ~np.isin(state.occupancy, (int(BlockKind.KEY), int(BlockKind.HAMMER)))
    assert np.array_equal(state.occupancy[fixed], occ[fixed])
    assert state.demo_pos == demo
    assert state.learner_pos == learner
    tools = np.argwhere(
        np.isin(state.occupancy, (int(BlockKind.KEY), int(BlockKind.HAMMER)))
    )
    assert len(tools) == 2
    for r, c in tools:
        assert (int(r), int(c)) in grid.MAZE_TOOL_REGION


def test_construction_train_layout_matches_golden():
    state = reset_grid(TaskId.CONSTRUCTION, Mode.TRAIN, 9)
    rendered = render_ascii(state)
    for digit in "0123":
        rendered = rendered.replace(digit, "C")
    golden = "\n".join(
        ln for ln in load_golden_layout("construction_train").strip().splitlines()
        if not ln.startswith(";")
    )
    assert rendered == golden
    colors = [state.occupancy[c] for c in grid.CONSTRUCTION_BLOCK_CELLS]
    assert len(set(colors)) == 3
    assert state.goal is not None
    placed = {int(k) - int(BlockKind.COLOR_0) for k in colors}
    assert {state.goal.color_a, state.goal.color_b} <= placed


def test_passing_test_mode_randomizes_gap_and_start():
    gaps, starts = set(), set()
    for seed in range(40):
        s = reset_grid(TaskId.PASSING, Mode.TEST, seed)
        row = s.occupancy[5, 1:10]
        (gap,) = np.where(row == grid.EMPTY)
        gaps.add(int(gap[0]))
        starts.add(s.demo_pos)
        assert 6 <= s.demo_pos[0] <= 9
    assert len(gaps) > 3
    assert len(starts) > 10


def test_maze_test_mode_layouts_are_solvable_by_oracle():
    for seed in range(15):
        s = reset_grid(TaskId.MAZE, Mode.TEST, seed)
        doors = np.isin(s.occupancy, (int(BlockKind.YELLOW_DOOR), int(BlockKind.BLUE_DOOR)))
        assert 1 <= doors.sum() <= 2
        assert oracles.oracle_bfs_distance(s) is not None


def test_construction_test_mode_obstacles_and_solvability():
    for seed in range(10):
        s = reset_grid(TaskId.CONSTRUCTION, Mode.TEST, seed)
        interior_walls = np.sum(s.occupancy[1:-1, 1:-1] == BlockKind.WALL)
        assert interior_walls == grid.CONSTRUCTION_TEST_OBSTACLES
        assert oracles.oracle_bfs_distance(s) is not None


@pytest.mark.parametrize("task", GRID_TASKS)
def test_agents_never_on_blocks_and_positions_distinct(task):
    rng = np.random.default_rng(0)
    for seed in range(5):
        s = reset_grid(task, Mode.TEST, seed)
        s = random_rollout(s, rng, 25)
        assert s.occupancy[s.demo_pos] == grid.EMPTY
        assert s.occupancy[s.learner_pos] == grid.EMPTY
        assert s.demo_pos != s.learner_pos


def test_step_determinism_and_purity():
    s = reset_grid(TaskId.MAZE, Mode.TRAIN, 3)
    before = s.occupancy.copy()
    a, ta = step_grid(s, GridAction.MOVE_S, GridAction.MOVE_W)
    b, tb = step_grid(s, GridAction.MOVE_S, GridAction.MOVE_W)
    assert np.array_equal(s.occupancy, before)  # input untouched
    assert np.array_equal(a.occupancy, b.occupancy)
    assert a.demo_pos == b.demo_pos and ta == tb


def test_blocked_moves_are_noops():
    s = reset_grid(TaskId.PASSING, Mode.TRAIN, 0)
    # demonstrator at (9,9): east and south are border walls
    s2, _ = step_grid(s, GridAction.MOVE_E, GridAction.STOP)
    assert s2.demo_pos == (9, 9)
    s3, _ = step_grid(s, GridAction.MOVE_S, GridAction.STOP)
    assert s3.demo_pos == (9, 9)


def test_move_into_other_agent_is_noop():
    s = reset_grid(TaskId.PASSING, Mode.TRAIN, 0)
    s.demo_pos = (6, 5)
    s.learner_pos = (6, 4)
    s2, _ = step_grid(s, GridAction.MOVE_W, GridAction.STOP)
    assert s2.demo_pos == (6, 5)


def test_demo_resolves_before_learner():
    # learner tries to move into the cell the demonstrator vacates: allowed,
    # because the demonstrator has already moved within the same tick
    s = reset_grid(TaskId.PASSING, Mode.TRAIN, 0)
    s.demo_pos = (7, 5)
    s.learner_pos = (8, 5)
    s2, _ = step_grid(s, GridAction.MOVE_N, GridAction.MOVE_N)
    assert s2.demo_pos == (6, 5)
    assert s2.learner_pos == (7, 5)


def test_passing_goal_on_crossing():
    s = reset_grid(TaskId.PASSING, Mode.TRAIN, 0)
    s.demo_pos = (5, 1)  # inside the gap
    s2, terminal = step_grid(s, GridAction.MOVE_N, GridAction.STOP)
    assert s2.demo_pos == (4, 1)
    assert terminal and goal_reached(s2)


def test_maze_goal_region():
    s = reset_grid(TaskId.MAZE, Mode.TRAIN, 0)
    s.demo_pos = (3, 3)
    assert goal_reached(s)
    s.demo_pos = (3, 6)
    assert not goal_reached(s)


def test_construction_putdown_completes_goal():
    s = reset_grid(TaskId.CONSTRUCTION, Mode.TRAIN, 1)
    ka, kb = s.goal.kinds
    (bpos,) = [tuple(map(int, p)) for p in np.argwhere(s.occupancy == kb)]
    # hand the demonstrator the first goal block and stand it two cells south
    # of the other: the N-first drop scan then places the block adjacent
    s.occupancy[s.occupancy == ka] = grid.EMPTY
    s.demo_inv = ka
    s.demo_pos = (bpos[0] + 2, bpos[1])
    assert not goal_reached(s)
    s2, terminal = step_grid(s, GridAction.PUT_DOWN, GridAction.STOP)
    assert s2.occupancy[bpos[0] + 1, bpos[1]] == ka
    assert terminal and goal_reached(s2)


def test_step_count_increments_and_t_max_terminates():
    s = reset_grid(TaskId.PASSING, Mode.TRAIN, 0)
    terminal = False
    for i in range(s.rules.t_max):
        assert not terminal
        s, terminal = step_grid(s, GridAction.STOP, GridAction.STOP)
        assert s.step_count == i + 1
    assert terminal
    assert s.step_count == s.rules.t_max


@pytest.mark.parametrize("task", GRID_TASKS)
def test_block_conservation_under_random_play(task):
    rng = np.random.default_rng(11)
    for seed in range(4):
        s = reset_grid(task, Mode.TEST, seed)
        before = count_blocks(s)
        s2 = random_rollout(s.copy(), rng, 40)
        assert count_blocks(s2) == before


def test_pickup_then_putdown_restores_cell():
    s = reset_grid(TaskId.PASSING, Mode.TRAIN, 0)
    s.learner_pos = (4, 5)  # north of a middle-wall block at (5,5)
    before = s.occupancy.copy()
    mid, _ = step_grid(s, GridAction.STOP, GridAction.PICK_UP)
    assert mid.learner_inv == BlockKind.WALL
    assert mid.occupancy[5, 5] == grid.EMPTY
    after, _ = step_grid(mid, GridAction.STOP, GridAction.PUT_DOWN)
    # N of (4,5) is empty, so the put-down scan tries (3,5) first; block the
    # north cell to force the drop back into the original cell
    mid.occupancy[3, 5] = BlockKind.WALL
    after, _ = step_grid(mid, GridAction.STOP, GridAction.PUT_DOWN)
    mid.occupancy[3, 5] = grid.EMPTY
    assert after.occupancy[5, 5] == BlockKind.WALL
    assert after.learner_inv is None
    assert np.array_equal(
        np.where(after.occupancy == BlockKind.WALL, 1, 0)[5],
        np.where(before == BlockKind.WALL, 1, 0)[5],
    )


def test_pickup_scan_order_takes_north_first():
    s = reset_grid(TaskId.MAZE, Mode.TRAIN, 0)
    s.occupancy[s.occupancy == BlockKind.KEY] = grid.EMPTY
    s.occupancy[s.occupancy == BlockKind.HAMMER] = grid.EMPTY
    s.demo_pos = (3, 7)
    s.occupancy[2, 7] = BlockKind.KEY     # north
    s.occupancy[3, 8] = BlockKind.HAMMER  # east
    s2, _ = step_grid(s, GridAction.PICK_UP, GridAction.STOP)
    assert s2.demo_inv == BlockKind.KEY
    assert s2.occupancy[3, 8] == BlockKind.HAMMER


def test_passing_demonstrator_cannot_pick():
    s = reset_grid(TaskId.PASSING, Mode.TRAIN, 0)
    with pytest.raises(ValueError):
        step_grid(s, GridAction.PICK_UP, GridAction.STOP)


def test_passing_learner_cannot_take_border_wall():
    s = reset_grid(TaskId.PASSING, Mode.TRAIN, 0)
    s.learner_pos = (1, 1)  # adjacent to north and west border walls only
    s2, _ = step_grid(s, GridAction.STOP, GridAction.PICK_UP)
    assert s2.learner_inv is None


def test_door_exchange_conserves_blocks_and_opens_gap():
    s = reset_grid(TaskId.MAZE, Mode.TRAIN, 0)
    s.demo_pos = (2, 6)  # east of the yellow door at (2,5)
    s.demo_inv = BlockKind.KEY
    s.occupancy[s.occupancy == BlockKind.KEY] = grid.EMPTY  # key now in hand
    before = count_blocks(s)
    s2, _ = step_grid(s, GridAction.PICK_UP, GridAction.STOP)
    assert s2.demo_inv == BlockKind.YELLOW_DOOR
    assert s2.occupancy[2, 5] == grid.EMPTY  # gap open
    assert s2.occupancy[1, 6] == BlockKind.KEY  # tool dropped north first
    assert count_blocks(s2) == before


def test_door_requires_matching_tool():
    s = reset_grid(TaskId.MAZE, Mode.TRAIN, 0)
    s.demo_pos = (2, 6)
    s.demo_inv = BlockKind.HAMMER
    s.occupancy[s.occupancy == BlockKind.HAMMER] = grid.EMPTY
    s2, _ = step_grid(s, GridAction.PICK_UP, GridAction.STOP)
    assert s2.demo_inv == BlockKind.HAMMER  # yellow door ignores the hammer
    assert s2.occupancy[2, 5] == BlockKind.YELLOW_DOOR


def test_oracle_agrees_with_engine_on_random_demo_actions():
    rng = np.random.default_rng(21)
    for task in GRID_TASKS:
        state = reset_grid(task, Mode.TEST, 2)
        state.learner_pos = (1, 1) if task != TaskId.PASSING else state.learner_pos
        for _ in range(60):
            actions = state.rules.demo_actions
            action = actions[rng.integers(len(actions))]
            pos, inv, occ = oracles.oracle_apply(state, action)
            nxt, _ = step_grid(state, action, GridAction.STOP)
            assert nxt.demo_pos == pos
            assert (-1 if nxt.demo_inv is None else int(nxt.demo_inv)) == inv
            assert nxt.occupancy.tobytes() == occ
            state = nxt


# --- observation encoding ---------------------------------------------------


@pytest.mark.parametrize("task", GRID_TASKS)
@pytest.mark.parametrize("viewpoint", [Viewpoint.DEMONSTRATOR, Viewpoint.LEARNER])
def test_encoding_matches_reference(task, viewpoint):
    s = reset_grid(task, Mode.TEST, 4)
    got = encode_grid_observation(s, viewpoint)
    want = oracles.oracle_encode(s, viewpoint.value)
    assert got.shape == (11, 11, s.rules.obs_channels)
    assert np.array_equal(got, want)
    assert set(np.unique(got)) <= {0.0, 1.0}


def test_encoding_wall_channel_includes_other_agent():
    s = reset_grid(TaskId.PASSING, Mode.TRAIN, 0)
    walls = int(np.sum(s.occupancy == BlockKind.WALL))
    obs = encode_grid_observation(s, Viewpoint.DEMONSTRATOR)
    assert int(obs[:, :, 0].sum()) == walls + 1
    assert obs[s.learner_pos[0], s.learner_pos[1], 0] == 1.0


def test_encoding_self_channel_single_one():
    s = reset_grid(TaskId.MAZE, Mode.TRAIN, 2)
    for vp in (Viewpoint.DEMONSTRATOR, Viewpoint.LEARNER):
        obs = encode_grid_observation(s, vp)
        assert obs[:, :, -1].sum() == 1.0


def test_encoding_carried_items_leave_grid():
    s = reset_grid(TaskId.MAZE, Mode.TRAIN, 0)
    key_ch = s.rules.block_kinds.index(BlockKind.KEY)
    hammer_ch = s.rules.block_kinds.index(BlockKind.HAMMER)
    s.occupancy[s.occupancy == BlockKind.HAMMER] = grid.EMPTY
    s.demo_inv = BlockKind.HAMMER
    obs = encode_grid_observation(s, Viewpoint.DEMONSTRATOR)
    assert obs[:, :, key_ch].sum() == 1.0
    assert obs[:, :, hammer_ch].sum() == 0.0
    assert np.array_equal(obs, oracles.oracle_encode(s, "demonstrator"))


def test_encoding_learner_viewpoint_requires_learner():
    s = reset_grid(TaskId.PASSING, Mode.TRAIN, 0)
    s.learner_pos = None
    with pytest.raises(ValueError):
        encode_grid_observation(s, Viewpoint.LEARNER)
    obs = encode_grid_observation(s, Viewpoint.DEMONSTRATOR)
    walls = int(np.sum(s.occupancy == BlockKind.WALL))
    assert int(obs[:, :, 0].sum()) == walls  # nobody else on the map


# --- layout documents -------------------------------------------------------


@pytest.mark.parametrize("task", GRID_TASKS)
def test_task_config_documents_match_rules(task):
    doc = load_task_config(task)
    rules = grid.TASK_RULES[task]
    assert int(doc["grid_size"]) == grid.GRID_SIZE
    assert int(doc["t_max"]) == rules.t_max
    assert int(doc["n_blocks"]) == rules.n_blocks
    assert int(doc["demo_actions"]) == len(rules.demo_actions)
    assert int(doc["learner_actions"]) == len(rules.learner_actions)


def test_ascii_round_trip():
    s = reset_grid(TaskId.MAZE, Mode.TRAIN, 8)
    occ, demo, learner = parse_ascii(render_ascii(s))
    assert np.array_equal(occ, s.occupancy)
    assert demo == s.demo_pos and learner == s.learner_pos
