"""The two intertwined learning processes.

Each training iteration rolls out one episode (the demonstrator acts by
rule, the learner samples its policy with epsilon-greedy exploration),
then applies an imitation update of the tracker and demonstrator-policy
blocks on the demonstrator trajectory, and an advantage actor-critic
update of the probing policy and value blocks on the learner trajectory.
The probing reward is the squared change of the latent mind vector; the
tracker is never updated by the reinforcement objective and the latents
used for rewards are the ones recorded at rollout time.

Baselines share the loop: a passive learner is absent from the world, a
random prober skips the policy entirely, and the count-based and
self-supervised-prediction rewards replace the mind-change reward stream.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field, asdict, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import autograd as ag
from . import demonstrators as dem
from .grid import (
    TASK_RULES,
    GridAction,
    Mode,
    TaskId,
    encode_grid_observation,
    goal_reached,
    peek_after_demo,
    reset_grid,
    step_grid,
    Viewpoint,
)
from .model import (
    LstmState,
    MindModel,
    ModelConfig,
    ParameterStore,
    mind_zero,
    probing_reward,
    save_checkpoint,
)
from .sorting import (
    ARRAY_LENGTH,
    VALUE_BITS,
    SortDemoAction,
    SortLearnerAction,
    encode_sort_observation,
    is_ascending,
    reset_sort,
    step_sort,
)

log = logging.getLogger("probemind")


class RewardMode(str, Enum):
    MINDCHANGE = "mindchange"
    PASSIVE = "passive"
    RANDOM = "random"
    COUNTBASED = "countbased"
    SELFSUP = "selfsup"


RL_MODES = (RewardMode.MINDCHANGE, RewardMode.COUNTBASED, RewardMode.SELFSUP)


class ConfigError(ValueError):
    pass


@dataclass
class TrainConfig:
    task: str
    iterations: int
    reward_mode: str = RewardMode.MINDCHANGE.value
    latent_dim: int = 8
    seed: int = 0
    gamma: float = 0.95
    entropy_weight: float = 0.01
    learning_rate: float = 0.001
    epsilon_start: float = 0.1
    epsilon_end: float = 0.01
    rms_decay: float = 0.99
    rms_epsilon: float = 1e-8
    grad_clip: float = 5.0
    demo_noise_rate: float = 0.0
    t_max_override: Optional[int] = None
    checkpoint_interval: int = 0  # 0: final checkpoint only
    count_bonus_beta: float = 1.0

    def validate(self):
        try:
            TaskId(self.task)
            RewardMode(self.reward_mode)
        except ValueError as err:
            raise ConfigError(str(err)) from None
        checks = [
            (self.iterations >= 1, "iterations must be >= 1"),
            (0.0 < self.gamma < 1.0, "gamma must lie in (0, 1)"),
            (self.entropy_weight >= 0.0, "entropy_weight must be non-negative"),
            (self.learning_rate > 0.0, "learning_rate must be positive"),
            (0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0,
             "epsilon schedule must satisfy 0 <= end <= start <= 1"),
            (0.0 < self.rms_decay < 1.0, "rms_decay must lie in (0, 1)"),
            (self.grad_clip > 0.0, "grad_clip must be positive"),
            (0.0 <= self.demo_noise_rate <= 1.0, "demo_noise_rate must be a probability"),
            (self.latent_dim >= 1, "latent_dim must be positive"),
            (self.seed >= 0, "seed must be non-negative"),
            (self.checkpoint_interval >= 0, "checkpoint_interval must be non-negative"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        return self


def epsilon_at(cfg: TrainConfig, iteration: int) -> float:
    """Linear anneal from epsilon_start to epsilon_end over the run."""
    if cfg.iterations <= 1:
        return cfg.epsilon_start
    frac = iteration / (cfg.iterations - 1)
    return cfg.epsilon_start - (cfg.epsilon_start - cfg.epsilon_end) * frac


@dataclass
class Trajectory:
    """One episode: per-agent (observation, action) steps, the latent
    sequence M, and the per-tick reward stream."""

    demo_obs: list = field(default_factory=list)
    demo_actions: list = field(default_factory=list)
    learner_obs: list = field(default_factory=list)
    learner_actions: list = field(default_factory=list)
    learner_ticks: list = field(default_factory=list)  # 1-based tick indices
    latents: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    rewards: np.ndarray = field(default_factory=lambda: np.zeros(0))
    length: int = 0
    success: bool = False


def discounted_returns(rewards: np.ndarray, gamma: float) -> np.ndarray:
    """R_t = sum_{tau>=0} gamma^tau r_{t+tau}, computed to episode end."""
    out = np.zeros_like(rewards, dtype=np.float64)
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out


def state_digest(raw: bytes) -> int:
    """64-bit digest of a serialized world state (count-based bonus)."""
    return int.from_bytes(hashlib.blake2b(raw, digest_size=8).digest(), "little")


def baseline_reward(
    mode: RewardMode,
    *,
    visit_counts: Optional[dict] = None,
    digest: Optional[int] = None,
    beta: float = 1.0,
    action_log_prob: Optional[float] = None,
) -> float:
    """Per-step reward for the non-mind-change reward modes."""
    if mode == RewardMode.COUNTBASED:
        visit_counts[digest] = visit_counts.get(digest, 0) + 1
        return beta / np.sqrt(visit_counts[digest])
    if mode == RewardMode.SELFSUP:
        return -action_log_prob
    if mode == RewardMode.RANDOM:
        return 0.0
    raise ValueError(f"not a baseline mode: {mode}")


def _sample(probs: np.ndarray, rng: np.random.Generator) -> int:
    return int(rng.choice(len(probs), p=probs))


def uniform_grid_action(rng: np.random.Generator, actions) -> GridAction:
    return actions[int(rng.integers(len(actions)))]


def rollout(
    model: Optional[MindModel],
    cfg: TrainConfig,
    rng: np.random.Generator,
    epsilon: float,
    env_mode: Mode = Mode.TRAIN,
    env_seed: int = 0,
    visit_counts: Optional[dict] = None,
    reward_fn: Optional[Callable] = None,
) -> Trajectory:
    """Run one episode and record both trajectories, M and the rewards.

    ``reward_fn(prev_state, new_state, goal_hit) -> float`` overrides the
    reward stream (used by the collaboration and competition tasks).
    """
    mode = RewardMode(cfg.reward_mode)
    task = TaskId(cfg.task)
    if task == TaskId.SORTING:
        return _rollout_sorting(model, cfg, rng, epsilon, env_mode, env_seed, visit_counts, reward_fn)
    return _rollout_grid(model, cfg, rng, epsilon, env_mode, env_seed, visit_counts, reward_fn)


def _learner_present(mode: RewardMode, reward_fn) -> bool:
    return reward_fn is not None or mode != RewardMode.PASSIVE


def _rollout_grid(model, cfg, rng, epsilon, env_mode, env_seed, visit_counts, reward_fn):
    mode = RewardMode(cfg.reward_mode)
    task = TaskId(cfg.task)
    rules = TASK_RULES[task]
    t_max = cfg.t_max_override or rules.t_max
    state = reset_grid(task, env_mode, env_seed)
    present = _learner_present(mode, reward_fn)
    if not present:
        state.learner_pos = None
        state.learner_inv = None
    use_policy = present and mode != RewardMode.RANDOM
    track = model is not None and model.cfg.include_tracker
    latent_dim = model.cfg.latent_dim if track else cfg.latent_dim

    traj = Trajectory()
    tracker_state = LstmState.zeros()
    learner_state = LstmState.zeros()
    demo_state = LstmState.zeros()  # self-supervised prediction reward only
    m_prev = mind_zero(latent_dim)
    latents, rewards = [], []

    for tick in range(1, t_max + 1):
        s_d = encode_grid_observation(state, Viewpoint.DEMONSTRATOR)
        planned = dem.plan_grid_action(state)
        a_d = dem.with_action_noise(planned, cfg.demo_noise_rate, rng, rules.demo_actions)
        demo_idx = rules.demo_actions.index(a_d)

        a_l = None
        if present:
            mid = peek_after_demo(state, a_d)
            s_l = encode_grid_observation(mid, Viewpoint.LEARNER)
            if model is not None and model.cfg.nomind:
                s_l = np.concatenate([s_l, s_d], axis=2)
            if use_policy:
                probs, learner_state = model.policy_step("learner", learner_state, s_l, m_prev)
                if epsilon > 0.0 and rng.random() < epsilon:
                    a_idx = int(rng.integers(len(rules.learner_actions)))
                else:
                    a_idx = _sample(probs[0], rng)
            else:
                a_idx = int(rng.integers(len(rules.learner_actions)))
            a_l = rules.learner_actions[a_idx]
            traj.learner_obs.append(s_l)
            traj.learner_actions.append(a_idx)
            traj.learner_ticks.append(tick)

        sup_logp = None
        if mode == RewardMode.SELFSUP:
            dprobs, demo_state = model.policy_step("demo", demo_state, s_d, m_prev)
            sup_logp = float(np.log(max(dprobs[0][demo_idx], 1e-300)))

        new_state, terminal = step_grid(state, a_d, a_l)
        if track:
            m_cur, tracker_state = model.tracker_step(tracker_state, s_d, demo_idx)
        else:
            m_cur = m_prev
        goal_hit = goal_reached(new_state)
        if reward_fn is not None:
            r = reward_fn(state, new_state, goal_hit)
        elif mode == RewardMode.MINDCHANGE:
            r = probing_reward(m_prev, m_cur)
        elif mode == RewardMode.COUNTBASED:
            r = baseline_reward(mode, visit_counts=visit_counts,
                                digest=state_digest(new_state.digest()),
                                beta=cfg.count_bonus_beta)
        elif mode == RewardMode.SELFSUP:
            r = baseline_reward(mode, action_log_prob=sup_logp)
        else:
            r = 0.0

        traj.demo_obs.append(s_d)
        traj.demo_actions.append(demo_idx)
        latents.append(m_cur)
        rewards.append(r)
        state = new_state
        m_prev = m_cur
        if terminal:
            break

    traj.latents = np.array(latents) if latents else np.zeros((0, latent_dim))
    traj.rewards = np.array(rewards)
    traj.length = len(latents)
    traj.success = goal_reached(state)
    return traj


def _rollout_sorting(model, cfg, rng, epsilon, env_mode, env_seed, visit_counts, reward_fn):
    mode = RewardMode(cfg.reward_mode)
    t_max = cfg.t_max_override or 30
    state = reset_sort(env_mode, env_seed, t_max=t_max)
    present = _learner_present(mode, reward_fn)
    use_policy = present and mode != RewardMode.RANDOM
    track = model is not None and model.cfg.include_tracker
    latent_dim = model.cfg.latent_dim if track else cfg.latent_dim

    traj = Trajectory()
    tracker_state = LstmState.zeros()
    learner_state = LstmState.zeros()
    demo_state = LstmState.zeros()
    m_prev = mind_zero(latent_dim)
    latents, rewards = [], []

    terminal = is_ascending(state.values)
    for tick in range(1, t_max + 1):
        if terminal:
            break
        s_d = encode_sort_observation(state)
        action, cursor = dem.bubble_sort_action(state)
        if cfg.demo_noise_rate > 0.0:
            action = dem.with_action_noise(
                action, cfg.demo_noise_rate, rng, dem.SORT_DEMO_NOISE_ACTIONS
            )
        target = (min(action.i, ARRAY_LENGTH), min(action.j, ARRAY_LENGTH))

        a_l = None
        if present and state.learner_scheduled:
            mid = state.copy()
            if not action.is_noop:
                mid.values[[action.i, action.j]] = mid.values[[action.j, action.i]]
            s_l = encode_sort_observation(mid)
            if use_policy:
                probs, learner_state = model.policy_step("learner", learner_state, s_l, m_prev)
                if epsilon > 0.0 and rng.random() < epsilon:
                    idx = int(rng.integers(ARRAY_LENGTH + 1))
                    bit = int(rng.integers(VALUE_BITS))
                else:
                    idx = _sample(probs[0], rng)
                    bit = _sample(probs[1], rng)
            else:
                idx = int(rng.integers(ARRAY_LENGTH + 1))
                bit = int(rng.integers(VALUE_BITS))
            a_l = SortLearnerAction(idx, bit)
            traj.learner_obs.append(s_l)
            traj.learner_actions.append((idx, bit))
            traj.learner_ticks.append(tick)
        elif state.learner_scheduled:
            a_l = SortLearnerAction.noop()  # learner slot inert when absent

        sup_logp = None
        if mode == RewardMode.SELFSUP:
            dprobs, demo_state = model.policy_step("demo", demo_state, s_d, m_prev)
            p = max(dprobs[0][target[0]] * dprobs[1][target[1]], 1e-300)
            sup_logp = float(np.log(p))

        state, terminal = step_sort(state, action, a_l, cursor_after=cursor)
        if track:
            m_cur, tracker_state = model.tracker_step(tracker_state, s_d, target)
        else:
            m_cur = m_prev
        goal_hit = is_ascending(state.values)
        if reward_fn is not None:
            r = reward_fn(None, state, goal_hit)
        elif mode == RewardMode.MINDCHANGE:
            r = probing_reward(m_prev, m_cur)
        elif mode == RewardMode.COUNTBASED:
            r = baseline_reward(mode, visit_counts=visit_counts,
                                digest=state_digest(state.digest()),
                                beta=cfg.count_bonus_beta)
        elif mode == RewardMode.SELFSUP:
            r = baseline_reward(mode, action_log_prob=sup_logp)
        else:
            r = 0.0

        traj.demo_obs.append(s_d)
        traj.demo_actions.append(target)
        latents.append(m_cur)
        rewards.append(r)
        m_prev = m_cur

    traj.latents = np.array(latents) if latents else np.zeros((0, latent_dim))
    traj.rewards = np.array(rewards)
    traj.length = len(latents)
    traj.success = is_ascending(state.values)
    return traj


# ---------------------------------------------------------------------------
# Optimizer


class RmsProp:
    """Root-mean-square propagation with a global-norm gradient clip."""

    def __init__(self, store: ParameterStore, decay=0.99, eps=1e-8, clip=5.0):
        self.store = store
        self.decay = decay
        self.eps = eps
        self.clip = clip
        self.acc = {n: np.zeros_like(a) for n, a in store.arrays.items()}

    def step(self, names: list[str], lr: float) -> bool:
        sq = 0.0
        for n in names:
            g = self.store.grads[n]
            sq += float(np.dot(g.ravel(), g.ravel()))
        if not np.isfinite(sq):
            log.warning("non-finite gradient; update aborted for %s", names[0].split(".")[0])
            return False
        total = np.sqrt(sq)
        scale = min(1.0, self.clip / total) if total > 0 else 1.0
        for n in names:
            g = self.store.grads[n]
            if scale != 1.0:
                np.multiply(g, scale, out=g)
            acc = self.acc[n]
            np.multiply(acc, self.decay, out=acc)
            gsq = np.square(g)
            gsq *= 1.0 - self.decay
            acc += gsq
            np.sqrt(acc, out=gsq)
            gsq += self.eps
            np.divide(g, gsq, out=gsq)
            gsq *= lr
            self.store.arrays[n] -= gsq
        return True


def optimizer_step(param, grad, accumulator, learning_rate, decay=0.99, eps=1e-8):
    """Single-block RMSProp rule; mutates and returns (param, accumulator)."""
    accumulator *= decay
    accumulator += (1.0 - decay) * grad * grad
    param -= learning_rate * grad / (np.sqrt(accumulator) + eps)
    return param, accumulator


# ---------------------------------------------------------------------------
# Updates


def il_objective(model: MindModel, traj: Trajectory):
    """Mean cross-entropy of the demonstrator's actions; gradients flow into
    both the tracker (through the latent recurrence) and the policy branch."""
    m_seq = model.tracker_unroll(traj.demo_obs, traj.demo_actions)
    zero = ag.Tensor(np.zeros((1, model.cfg.latent_dim)))
    m_prev = ag.concat([zero, m_seq[: len(traj.demo_obs) - 1]], axis=0)
    logits, _ = model.policy_unroll("demo", traj.demo_obs, m_prev)
    if model.cfg.is_sorting:
        targets = [np.array([a[0] for a in traj.demo_actions]),
                   np.array([a[1] for a in traj.demo_actions])]
    else:
        targets = [np.array(traj.demo_actions)]
    loss = None
    for head_logits, target in zip(logits, targets):
        nll = -ag.tmean(ag.take_rows(ag.log_softmax(head_logits), target))
        loss = nll if loss is None else loss + nll
    return loss


def il_update(model: MindModel, traj: Trajectory, opt: RmsProp, lr: float) -> float:
    if not traj.demo_obs:
        return 0.0
    names = model.store.names("tracker") + model.store.names("demo")
    loss = il_objective(model, traj)
    loss.backward()
    opt.step(names, lr)
    model.store.zero_grads(names)
    return loss.item()


def learner_m_inputs(traj: Trajectory, latent_dim: int) -> np.ndarray:
    """m^{t-1} for each learner step, taken from the rollout-time latents."""
    out = np.zeros((len(traj.learner_ticks), latent_dim))
    for row, tick in enumerate(traj.learner_ticks):
        if tick >= 2:
            out[row] = traj.latents[tick - 2]
    return out


def learner_returns(traj: Trajectory, gamma: float) -> np.ndarray:
    """Monte Carlo returns of the full tick stream, taken at learner steps."""
    returns_all = discounted_returns(traj.rewards, gamma)
    return np.array([returns_all[tick - 1] for tick in traj.learner_ticks])


def _policy_terms(model: MindModel, traj: Trajectory):
    """Forward the learner branch; returns (log-prob of taken actions,
    per-step policy entropy, LSTM hidden sequence)."""
    m_prev = learner_m_inputs(traj, model.cfg.latent_dim)
    logits, hidden = model.policy_unroll("learner", traj.learner_obs, m_prev)
    if model.cfg.is_sorting:
        targets = [np.array([a[0] for a in traj.learner_actions]),
                   np.array([a[1] for a in traj.learner_actions])]
    else:
        targets = [np.array(traj.learner_actions)]
    log_prob = None
    entropy = None
    for head_logits, target in zip(logits, targets):
        lp = ag.log_softmax(head_logits)
        picked = ag.take_rows(lp, target)
        log_prob = picked if log_prob is None else log_prob + picked
        h = -ag.tsum(ag.exp(lp) * lp, axis=1)
        entropy = h if entropy is None else entropy + h
    return log_prob, entropy, hidden


def _policy_loss(log_prob, entropy, advantages: np.ndarray, entropy_weight: float):
    return -(ag.tmean(log_prob * advantages) + entropy_weight * ag.tmean(entropy))


def policy_objective(model: MindModel, traj: Trajectory, cfg: TrainConfig,
                     advantages: np.ndarray):
    """Surrogate whose gradient is the entropy-regularized policy gradient
    for fixed advantage weights; touches only the policy block."""
    log_prob, entropy, _ = _policy_terms(model, traj)
    return _policy_loss(log_prob, entropy, advantages, cfg.entropy_weight)


def value_objective(model: MindModel, traj: Trajectory, returns: np.ndarray):
    """Half squared error of the value readout against fixed returns; the
    hidden-state input is detached, so only the value block is reached."""
    _, _, hidden = _policy_terms(model, traj)
    values = ag.reshape(model.value_readout(hidden.detach()), (len(traj.learner_ticks),))
    diff = ag.Tensor(returns) - values
    return 0.5 * ag.tmean(diff * diff)


def rl_objectives(model: MindModel, traj: Trajectory, cfg: TrainConfig):
    """Policy objective (with entropy) and value loss for one episode.

    Advantages use rollout-time latents and returns; the value readout
    consumes detached hidden states, so the value loss reaches only the
    value block while the policy term reaches only the policy block.
    """
    returns = learner_returns(traj, cfg.gamma)
    log_prob, entropy, hidden = _policy_terms(model, traj)
    values = model.value_readout(hidden.detach())
    values_flat = ag.reshape(values, (len(traj.learner_ticks),))
    diff = ag.Tensor(returns) - values_flat
    value_loss = 0.5 * ag.tmean(diff * diff)
    advantages = returns - values_flat.data
    policy_loss = _policy_loss(log_prob, entropy, advantages, cfg.entropy_weight)
    mean_entropy = float(entropy.data.mean())
    return policy_loss, value_loss, mean_entropy


def rl_update(
    model: MindModel, traj: Trajectory, cfg: TrainConfig, opt: RmsProp
) -> tuple[float, float, float]:
    """One A2C update of the policy and value blocks; the tracker and the
    demonstrator-policy blocks are untouched."""
    if not traj.learner_ticks:
        return 0.0, 0.0, 0.0
    l_names = model.store.names("learner")
    v_names = model.store.names("value")
    policy_loss, value_loss, mean_entropy = rl_objectives(model, traj, cfg)
    value_loss.backward()
    policy_loss.backward()
    opt.step(l_names, cfg.learning_rate)
    opt.step(v_names, cfg.learning_rate)
    model.store.zero_grads(l_names + v_names)
    return policy_loss.item(), value_loss.item(), mean_entropy


# ---------------------------------------------------------------------------
# Outer loop


METRIC_FIELDS = ("iteration", "episode_length", "il_loss", "mean_probing_reward",
                 "entropy", "epsilon")


@dataclass
class TrainResult:
    model: MindModel
    metrics: list[dict]
    checkpoints: list[Path] = field(default_factory=list)
    final_checkpoint: Optional[Path] = None


def build_model(cfg: TrainConfig) -> MindModel:
    mode = RewardMode(cfg.reward_mode)
    mcfg = ModelConfig(
        task=cfg.task,
        latent_dim=cfg.latent_dim,
        include_learner=mode in RL_MODES,
    )
    return MindModel.build(mcfg, np.random.SeedSequence((cfg.seed, 0)))


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_metrics(path: Path, rows: list[dict], fields=METRIC_FIELDS):
    with open(path, "w") as fh:
        fh.write(",".join(fields) + "\n")
        for row in rows:
            fh.write(",".join(_format(row[f]) for f in fields) + "\n")


def train(cfg: TrainConfig, out_dir: Optional[Path] = None) -> TrainResult:
    """Run the full loop: rollout, imitation update, probing-policy update.

    Writes metrics, a timing sidecar and periodic checkpoints when
    ``out_dir`` is given.  Fully deterministic for a fixed config.
    """
    cfg.validate()
    mode = RewardMode(cfg.reward_mode)
    model = build_model(cfg)
    opt = RmsProp(model.store, cfg.rms_decay, cfg.rms_epsilon, cfg.grad_clip)
    run_rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 1)))
    visit_counts: dict = {}
    rows = []
    timings = []
    checkpoints = []
    interval = cfg.checkpoint_interval
    if out_dir is not None:
        out_dir = Path(out_dir)
        (out_dir / "checkpoints").mkdir(parents=True, exist_ok=True)

    for i in range(cfg.iterations):
        t0 = time.perf_counter()
        eps = epsilon_at(cfg, i)
        env_seed = int(run_rng.integers(2**61))
        traj = rollout(model, cfg, run_rng, eps, Mode.TRAIN, env_seed, visit_counts)
        il_loss = il_update(model, traj, opt, cfg.learning_rate)
        entropy = 0.0
        if mode in RL_MODES:
            _, _, entropy = rl_update(model, traj, cfg, opt)
        if not np.isfinite(il_loss):
            raise FloatingPointError(f"non-finite imitation loss at iteration {i}")
        rows.append({
            "iteration": i,
            "episode_length": traj.length,
            "il_loss": il_loss,
            "mean_probing_reward": float(traj.rewards.mean()) if traj.length else 0.0,
            "entropy": entropy,
            "epsilon": eps,
        })
        timings.append({"iteration": i, "wall_time": time.perf_counter() - t0})
        if out_dir is not None and interval and (i + 1) % interval == 0:
            path = out_dir / "checkpoints" / f"ckpt_{i + 1:06d}.bin"
            save_checkpoint(path, model, extra={"iteration": i + 1})
            checkpoints.append(path)

    final = None
    if out_dir is not None:
        final = out_dir / "checkpoints" / "final.bin"
        save_checkpoint(final, model, extra={"iteration": cfg.iterations})
        write_metrics(out_dir / "metrics.csv", rows)
        write_metrics(out_dir / "timings.csv", timings, fields=("iteration", "wall_time"))
        with open(out_dir / "config.json", "w") as fh:
            json.dump(asdict(cfg), fh, indent=2, sort_keys=True)
    return TrainResult(model=model, metrics=rows, checkpoints=checkpoints, final_checkpoint=final)
