"""The learner's neural model of the demonstrator, built from scratch.

Components (disjoint parameter blocks, no weight sharing):

* ``tracker``: state+action encoder, two 128-unit FC layers, a 128-unit
  LSTM and a linear readout producing the latent mind vector ``m``.
* ``demo``: the modeled demonstrator policy: private state encoder, an
  attention gate driven by ``m`` that reweights the 32 feature maps, a
  128-unit LSTM and softmax head(s).
* ``learner``: the probing policy, same shape family; in the "nomind"
  variant it reads both agents' observations stacked channel-wise and has
  no attention gate.
* ``value``: linear readout of the learner LSTM's hidden state.

Two forward paths exist: batched-over-time tape functions used by the
training updates (gradients via ``autograd``), and per-step numpy
functions used by rollouts and evaluation.  They compute the same math;
the step path is bit-reproducible against itself, and the pair is kept
numerically consistent by tests.

All arithmetic is float64.  Initialization: uniform(-a, a) with
a = sqrt(6 / (fan_in + fan_out)) for weight matrices, zero biases except
the LSTM forget gate bias of +1.  LSTM gate order is [i, f, g, o].
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .grid import TASK_RULES, TaskId
from .sorting import ARRAY_LENGTH, VALUE_BITS

HIDDEN = 128
FILTERS = 32
LSTM_GATES = 4 * HIDDEN

CHECKPOINT_MAGIC = b"PMND"
CHECKPOINT_VERSION = 1

# Sorting action factor sizes: positions 0..9 plus the explicit no-op slot.
SORT_INDEX_CHOICES = ARRAY_LENGTH + 1


@dataclass(frozen=True)
class ModelConfig:
    task: str
    latent_dim: int = 8
    include_tracker: bool = True
    include_demo: bool = True
    include_learner: bool = True
    nomind: bool = False

    def __post_init__(self):
        TaskId(self.task)
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be positive")
        if self.nomind and self.include_tracker:
            raise ValueError("the nomind variant carries no behavior tracker")

    @property
    def task_id(self) -> TaskId:
        return TaskId(self.task)

    @property
    def is_sorting(self) -> bool:
        return self.task_id == TaskId.SORTING

    @property
    def obs_shape(self) -> tuple[int, int, int]:
        if self.is_sorting:
            return (ARRAY_LENGTH, 1, VALUE_BITS)
        rules = TASK_RULES[self.task_id]
        return (11, 11, rules.obs_channels)

    @property
    def cells(self) -> int:
        h, w, _ = self.obs_shape
        return h * w

    @property
    def demo_action_count(self) -> int:
        # number of action channels the tracker appends; for Sorting the two
        # 11-way factors get one channel each
        if self.is_sorting:
            return 2 * SORT_INDEX_CHOICES
        return len(TASK_RULES[self.task_id].demo_actions)

    @property
    def demo_head_sizes(self) -> tuple[int, ...]:
        if self.is_sorting:
            return (SORT_INDEX_CHOICES, SORT_INDEX_CHOICES)
        return (len(TASK_RULES[self.task_id].demo_actions),)

    @property
    def learner_head_sizes(self) -> tuple[int, ...]:
        if self.is_sorting:
            return (SORT_INDEX_CHOICES, VALUE_BITS)
        return (len(TASK_RULES[self.task_id].learner_actions),)

    @property
    def learner_in_channels(self) -> int:
        c = self.obs_shape[2]
        return 2 * c if self.nomind else c


class ParameterStore:
    """Named float64 parameter arrays with paired gradient buffers."""

    def __init__(self):
        self.arrays: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def add(self, name: str, value: np.ndarray):
        self.arrays[name] = np.asarray(value, dtype=np.float64)
        self.grads[name] = np.zeros_like(self.arrays[name])

    def tensor(self, name: str, grad: bool = True) -> Tensor:
        return Tensor(
            self.arrays[name],
            requires_grad=grad,
            grad_buffer=self.grads[name] if grad else None,
        )

    def names(self, block: Optional[str] = None) -> list[str]:
        if block is None:
            return list(self.arrays)
        prefix = block + "."
        return [n for n in self.arrays if n.startswith(prefix)]

    def blocks(self) -> list[str]:
        seen = []
        for name in self.arrays:
            b = name.split(".", 1)[0]
            if b not in seen:
                seen.append(b)
        return seen

    def zero_grads(self, names: Optional[list[str]] = None):
        for n in names if names is not None else self.grads:
            self.grads[n][...] = 0.0

    def block_bytes(self, block: str) -> bytes:
        return b"".join(self.arrays[n].tobytes() for n in self.names(block))


def _xavier(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=shape)


def _add_affine(store, rng, name, n_in, n_out):
    store.add(f"{name}.w", _xavier(rng, n_in, n_out, (n_in, n_out)))
    store.add(f"{name}.b", np.zeros(n_out))


def _add_lstm(store, rng, name, n_in):
    store.add(f"{name}.wx", _xavier(rng, n_in, LSTM_GATES, (n_in, LSTM_GATES)))
    store.add(f"{name}.wh", _xavier(rng, HIDDEN, LSTM_GATES, (HIDDEN, LSTM_GATES)))
    bias = np.zeros(LSTM_GATES)
    bias[HIDDEN : 2 * HIDDEN] = 1.0  # forget gate
    store.add(f"{name}.b", bias)


@dataclass
class LstmState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls) -> "LstmState":
        return cls(h=np.zeros((1, HIDDEN)), c=np.zeros((1, HIDDEN)))


class MindModel:
    def __init__(self, cfg: ModelConfig, store: ParameterStore):
        self.cfg = cfg
        self.store = store

    @classmethod
    def build(cls, cfg: ModelConfig, seed: int) -> "MindModel":
        rng = np.random.default_rng(seed)
        store = ParameterStore()
        flat = cfg.cells * FILTERS
        if cfg.include_tracker:
            c_in = cfg.obs_shape[2] + cfg.demo_action_count
            _add_affine(store, rng, "tracker.conv", c_in, FILTERS)
            _add_affine(store, rng, "tracker.fc1", flat, HIDDEN)
            _add_affine(store, rng, "tracker.fc2", HIDDEN, HIDDEN)
            _add_lstm(store, rng, "tracker.lstm", HIDDEN)
            _add_affine(store, rng, "tracker.out", HIDDEN, cfg.latent_dim)
        if cfg.include_demo:
            _add_affine(store, rng, "demo.conv", cfg.obs_shape[2], FILTERS)
            _add_affine(store, rng, "demo.fuse", cfg.latent_dim, FILTERS)
            _add_lstm(store, rng, "demo.lstm", flat)
            for i, size in enumerate(cfg.demo_head_sizes):
                _add_affine(store, rng, f"demo.head{i}", HIDDEN, size)
        if cfg.include_learner:
            _add_affine(store, rng, "learner.conv", cfg.learner_in_channels, FILTERS)
            if not cfg.nomind:
                _add_affine(store, rng, "learner.fuse", cfg.latent_dim, FILTERS)
            _add_lstm(store, rng, "learner.lstm", flat)
            for i, size in enumerate(cfg.learner_head_sizes):
                _add_affine(store, rng, f"learner.head{i}", HIDDEN, size)
            _add_affine(store, rng, "value.out", HIDDEN, 1)
        return cls(cfg, store)

    # -- helpers -------------------------------------------------------------

    def action_channels(self, action) -> np.ndarray:
        """One-hot action channel stack appended to the tracker input.

        The observed action's channel is all ones.  Sorting actions are a
        pair of indices; each factor lights its own channel.
        """
        h, w, _ = self.cfg.obs_shape
        planes = np.zeros((h, w, self.cfg.demo_action_count))
        if self.cfg.is_sorting:
            i, j = action
            planes[:, :, min(int(i), ARRAY_LENGTH)] = 1.0
            planes[:, :, SORT_INDEX_CHOICES + min(int(j), ARRAY_LENGTH)] = 1.0
        else:
            planes[:, :, int(action)] = 1.0
        return planes

    def tracker_input(self, obs: np.ndarray, action) -> np.ndarray:
        return np.concatenate([obs, self.action_channels(action)], axis=2)

    # -- batched tape forwards (training) -------------------------------------

    def _conv_relu(self, obs_seq: np.ndarray, name: str, grad: bool) -> Tensor:
        """1x1 conv + ReLU over a (T, H, W, C) constant input."""
        t_steps = obs_seq.shape[0]
        flat = Tensor(obs_seq.reshape(t_steps * self.cfg.cells, -1))
        w = self.store.tensor(f"{name}.w", grad)
        b = self.store.tensor(f"{name}.b", grad)
        out = ag.relu(ag.matmul(flat, w) + b)
        return ag.reshape(out, (t_steps, self.cfg.cells, FILTERS))

    def _lstm_unroll(self, x: Tensor, name: str, grad: bool) -> Tensor:
        """Run the LSTM from zeros over (T, n_in); returns hidden states (T, 128)."""
        wx = self.store.tensor(f"{name}.wx", grad)
        wh = self.store.tensor(f"{name}.wh", grad)
        b = self.store.tensor(f"{name}.b", grad)
        x_proj = ag.matmul(x, wx)
        h = Tensor(np.zeros((1, HIDDEN)))
        c = Tensor(np.zeros((1, HIDDEN)))
        hs = []
        for t in range(x.shape[0]):
            pre = x_proj[t : t + 1] + ag.matmul(h, wh) + b
            i = ag.sigmoid(pre[:, 0 * HIDDEN : 1 * HIDDEN])
            f = ag.sigmoid(pre[:, 1 * HIDDEN : 2 * HIDDEN])
            g = ag.tanh(pre[:, 2 * HIDDEN : 3 * HIDDEN])
            o = ag.sigmoid(pre[:, 3 * HIDDEN : 4 * HIDDEN])
            c = f * c + i * g
            h = o * ag.tanh(c)
            hs.append(h)
        return ag.concat(hs, axis=0)

    def tracker_unroll(self, demo_obs: list[np.ndarray], demo_actions: list, grad: bool = True) -> Tensor:
        """Latent mind sequence M = [m^1 .. m^T] for a demonstrator trajectory."""
        stacked = np.stack(
            [self.tracker_input(o, a) for o, a in zip(demo_obs, demo_actions)]
        )
        feats = self._conv_relu(stacked, "tracker.conv", grad)
        t_steps = len(demo_obs)
        flat = ag.reshape(feats, (t_steps, self.cfg.cells * FILTERS))
        h1 = ag.relu(ag.matmul(flat, self.store.tensor("tracker.fc1.w", grad))
                     + self.store.tensor("tracker.fc1.b", grad))
        h2 = ag.relu(ag.matmul(h1, self.store.tensor("tracker.fc2.w", grad))
                     + self.store.tensor("tracker.fc2.b", grad))
        hidden = self._lstm_unroll(h2, "tracker.lstm", grad)
        return ag.matmul(hidden, self.store.tensor("tracker.out.w", grad)) + self.store.tensor(
            "tracker.out.b", grad
        )

    def policy_unroll(
        self, branch: str, obs_seq: list[np.ndarray], m_prev, grad: bool = True
    ) -> tuple[list[Tensor], Tensor]:
        """Logits per head plus the LSTM hidden sequence for one policy branch.

        ``m_prev`` is a (T, D) Tensor or array of the mind vector inputs; it
        is ignored by the nomind learner variant.
        """
        stacked = np.stack(obs_seq)
        feats = self._conv_relu(stacked, f"{branch}.conv", grad)
        use_fusion = not (branch == "learner" and self.cfg.nomind)
        if use_fusion:
            m_prev = m_prev if isinstance(m_prev, Tensor) else Tensor(m_prev)
            attn = ag.sigmoid(
                ag.matmul(m_prev, self.store.tensor(f"{branch}.fuse.w", grad))
                + self.store.tensor(f"{branch}.fuse.b", grad)
            )
            feats = feats * ag.reshape(attn, (len(obs_seq), 1, FILTERS))
        flat = ag.reshape(feats, (len(obs_seq), self.cfg.cells * FILTERS))
        hidden = self._lstm_unroll(flat, f"{branch}.lstm", grad)
        sizes = self.cfg.demo_head_sizes if branch == "demo" else self.cfg.learner_head_sizes
        logits = [
            ag.matmul(hidden, self.store.tensor(f"{branch}.head{i}.w", grad))
            + self.store.tensor(f"{branch}.head{i}.b", grad)
            for i in range(len(sizes))
        ]
        return logits, hidden

    def value_readout(self, hidden: Tensor, grad: bool = True) -> Tensor:
        """Value estimates from (detached) learner LSTM hidden states."""
        return ag.matmul(hidden, self.store.tensor("value.out.w", grad)) + self.store.tensor(
            "value.out.b", grad
        )

    # -- per-step numpy forwards (rollout / evaluation) ------------------------

    def _np(self, name: str) -> np.ndarray:
        return self.store.arrays[name]

    def _conv_relu_np(self, obs: np.ndarray, name: str) -> np.ndarray:
        flat = obs.reshape(self.cfg.cells, -1)
        return np.maximum(flat @ self._np(f"{name}.w") + self._np(f"{name}.b"), 0.0)

    def _lstm_step_np(self, x: np.ndarray, state: LstmState, name: str) -> LstmState:
        pre = x @ self._np(f"{name}.wx") + state.h @ self._np(f"{name}.wh") + self._np(f"{name}.b")
        i = 1.0 / (1.0 + np.exp(-pre[:, 0 * HIDDEN : 1 * HIDDEN]))
        f = 1.0 / (1.0 + np.exp(-pre[:, 1 * HIDDEN : 2 * HIDDEN]))
        g = np.tanh(pre[:, 2 * HIDDEN : 3 * HIDDEN])
        o = 1.0 / (1.0 + np.exp(-pre[:, 3 * HIDDEN : 4 * HIDDEN]))
        c = f * state.c + i * g
        return LstmState(h=o * np.tanh(c), c=c)

    def tracker_step(
        self, state: LstmState, obs: np.ndarray, action
    ) -> tuple[np.ndarray, LstmState]:
        """One tracker update: consumes (s_d, a_d), returns (m, new state)."""
        x = self.tracker_input(obs, action)
        feats = self._conv_relu_np(x, "tracker.conv").reshape(1, -1)
        h1 = np.maximum(feats @ self._np("tracker.fc1.w") + self._np("tracker.fc1.b"), 0.0)
        h2 = np.maximum(h1 @ self._np("tracker.fc2.w") + self._np("tracker.fc2.b"), 0.0)
        new = self._lstm_step_np(h2, state, "tracker.lstm")
        m = new.h @ self._np("tracker.out.w") + self._np("tracker.out.b")
        return m[0], new

    def policy_step(
        self, branch: str, state: LstmState, obs: np.ndarray, m_prev: np.ndarray
    ) -> tuple[list[np.ndarray], LstmState]:
        """One policy step; returns per-head probabilities and the new state."""
        feats = self._conv_relu_np(obs, f"{branch}.conv")
        if not (branch == "learner" and self.cfg.nomind):
            pre = m_prev.reshape(1, -1) @ self._np(f"{branch}.fuse.w") + self._np(f"{branch}.fuse.b")
            attn = 1.0 / (1.0 + np.exp(-pre))
            feats = feats * attn
        new = self._lstm_step_np(feats.reshape(1, -1), state, f"{branch}.lstm")
        sizes = self.cfg.demo_head_sizes if branch == "demo" else self.cfg.learner_head_sizes
        probs = []
        for i in range(len(sizes)):
            logits = new.h @ self._np(f"{branch}.head{i}.w") + self._np(f"{branch}.head{i}.b")
            z = logits - logits.max()
            e = np.exp(z)
            probs.append((e / e.sum())[0])
        return probs, new

    def value_step(self, state: LstmState) -> float:
        out = state.h @ self._np("value.out.w") + self._np("value.out.b")
        return float(out[0, 0])


def mind_zero(latent_dim: int) -> np.ndarray:
    """m^0: the mind estimate before any observation."""
    return np.zeros(latent_dim)


def probing_reward(m_prev: np.ndarray, m_cur: np.ndarray) -> float:
    """Squared Euclidean change of the mind vector between consecutive steps."""
    m_prev = np.asarray(m_prev, dtype=np.float64)
    m_cur = np.asarray(m_cur, dtype=np.float64)
    if m_prev.shape != m_cur.shape:
        raise ValueError(f"dimension mismatch: {m_prev.shape} vs {m_cur.shape}")
    d = m_cur - m_prev
    return float(d @ d)


# ---------------------------------------------------------------------------
# Checkpoints: magic, version, JSON manifest, then raw little-endian arrays.


def save_checkpoint(path, model: MindModel, extra: Optional[dict] = None):
    manifest = {
        "format_version": CHECKPOINT_VERSION,
        "config": asdict(model.cfg),
        "arrays": [
            {"name": n, "shape": list(model.store.arrays[n].shape)}
            for n in model.store.arrays
        ],
        "extra": extra or {},
    }
    header = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(len(header).to_bytes(8, "little"))
        fh.write(header)
        for n in model.store.arrays:
            fh.write(model.store.arrays[n].astype("<f8").tobytes())


def load_checkpoint(path) -> tuple[MindModel, dict]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"not a model checkpoint: {path}")
        header_len = int.from_bytes(fh.read(8), "little")
        manifest = json.loads(fh.read(header_len))
        if manifest["format_version"] != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {manifest['format_version']}")
        cfg = ModelConfig(**manifest["config"])
        store = ParameterStore()
        for spec in manifest["arrays"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(8 * count)
            store.add(spec["name"], np.frombuffer(buf, dtype="<f8").reshape(shape).copy())
    return MindModel(cfg, store), manifest.get("extra", {})
