"""Replay buffer, epsilon-greedy policy, Q-targets and the training loop.

Three agent variants share the loop and differ only in the bootstrap
target: the plain variant evaluates the frozen target network at its own
best action; the double variant picks the action with the online network
but evaluates it with the target network, which caps the max-operator's
optimism (its target can never exceed the plain one); the third runs the
double rule on the two-stream value/advantage network.

Everything random (weights, exploration, batch sampling) derives from
one seed, so identical configs produce bit-identical training runs. All
argmax ties break to the lowest action index.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .market_env import Action
from .neural_net import (
    AdamState,
    AnyQNetwork,
    DuelingQNetwork,
    QNetwork,
    adam_step,
    load_checkpoint,
    save_checkpoint,
)

CURVES_HEADER = ("epoch", "total_reward", "mean_loss")


class AgentKind(str, Enum):
    DQN = "dqn"
    DDQN = "ddqn"
    DDDQN = "dddqn"


@dataclass(frozen=True)
class Transition:
    """One replay entry; states are stored as feature vectors."""

    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    done: bool


class ReplayBuffer:
    """Fixed-capacity FIFO store with seeded uniform batch sampling."""

    def __init__(self, capacity: int = 1000,
                 seed: int | np.random.Generator = 0) -> None:
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._items: deque[Transition] = deque(maxlen=capacity)
        self._rng = seed if isinstance(seed, np.random.Generator) \
            else np.random.default_rng(seed)

    def push(self, transition: Transition) -> None:
        self._items.append(transition)

    def sample(self, k: int) -> list[Transition]:
        """Uniform sample of k distinct entries (no replacement in a batch)."""
        if k > len(self._items):
            raise ValueError(f"cannot sample {k} from buffer of {len(self._items)}")
        picks = self._rng.choice(len(self._items), size=k, replace=False)
        return [self._items[int(i)] for i in picks]

    def __len__(self) -> int:
        return len(self._items)


@dataclass
class AgentConfig:
    """Training hyperparameters; the seed drives every random choice."""

    kind: AgentKind = AgentKind.DQN
    gamma: float = 0.95
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    batch_size: int = 32
    target_sync_every: int = 100
    epochs: int = 50
    learning_rate: float = 1e-3
    buffer_capacity: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        self.kind = AgentKind(self.kind)
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must be in [0, 1)")
        for name in ("epsilon_start", "epsilon_end"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.batch_size <= 0 or self.target_sync_every <= 0:
            raise ValueError("batch_size and target_sync_every must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")

    def to_dict(self) -> dict:
        data = dict(self.__dict__)
        data["kind"] = self.kind.value
        return data


def make_network(kind: AgentKind, seed: int | np.random.Generator) -> AnyQNetwork:
    if AgentKind(kind) is AgentKind.DDDQN:
        return DuelingQNetwork(seed)
    return QNetwork(seed)


def dqn_target(tr: Transition, target_net: AnyQNetwork, gamma: float) -> float:
    """y = r + gamma * max_a Q_target(s', a), zeroed on terminal."""
    if tr.done:
        return tr.reward
    return tr.reward + gamma * float(np.max(target_net.forward(tr.next_state)))


def ddqn_target(tr: Transition, online_net: AnyQNetwork,
                target_net: AnyQNetwork, gamma: float) -> float:
    """y = r + gamma * Q_target(s', argmax_a Q_online(s', a)).

    The online net picks, the target net evaluates; never exceeds the
    plain target for the same pair of networks.
    """
    if tr.done:
        return tr.reward
    best = int(np.argmax(online_net.forward(tr.next_state)))
    return tr.reward + gamma * float(target_net.forward(tr.next_state)[best])


def dddqn_target(tr: Transition, online_net: DuelingQNetwork,
                 target_net: DuelingQNetwork, gamma: float) -> float:
    """The double-selection rule evaluated on the two-stream networks."""
    return ddqn_target(tr, online_net, target_net, gamma)


def select_action(q: np.ndarray, epsilon: float,
                  rng: np.random.Generator) -> Action:
    """Epsilon-greedy over the three actions; greedy ties go to lowest index."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must be in [0, 1]")
    if epsilon > 0.0 and rng.random() < epsilon:
        return Action(int(rng.integers(len(q))))
    return Action(int(np.argmax(q)))


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    total_reward: float
    mean_loss: float


@dataclass
class TrainResult:
    online: AnyQNetwork
    target: AnyQNetwork
    curves: list[EpochStats] = field(default_factory=list)
    final_epsilon: float = 0.0


def _state_vector(state) -> np.ndarray:
    if hasattr(state, "to_vector"):
        return state.to_vector()
    return np.asarray(state, dtype=float)


def _batch_targets(batch: Sequence[Transition], kind: AgentKind,
                   online: AnyQNetwork, target: AnyQNetwork,
                   gamma: float) -> np.ndarray:
    next_states = np.stack([tr.next_state for tr in batch])
    rewards = np.array([tr.reward for tr in batch])
    live = np.array([0.0 if tr.done else 1.0 for tr in batch])
    q_next = target.forward(next_states)
    if kind is AgentKind.DQN:
        bootstrap = q_next.max(axis=1)
    else:
        best = np.argmax(online.forward(next_states), axis=1)
        bootstrap = q_next[np.arange(len(batch)), best]
    return rewards + gamma * bootstrap * live


def train(config: AgentConfig, env,
          online: AnyQNetwork | None = None,
          target: AnyQNetwork | None = None) -> TrainResult:
    """Train an agent, one full episode per epoch.

    The environment contract: ``reset() -> state``, ``step(action) ->
    object with .next_state/.reward/.done`` and a ``steps_per_episode``
    attribute used to size the linear epsilon anneal. Once the buffer
    holds a first batch, every environment step takes one optimizer step,
    and the target network re-syncs every ``target_sync_every`` of them.
    """
    seq = np.random.SeedSequence(config.seed)
    net_seed, buffer_seed, policy_seed = seq.spawn(3)
    if online is None:
        online = make_network(config.kind, np.random.default_rng(net_seed))
    if target is None:
        target = online.clone()
    buffer = ReplayBuffer(config.buffer_capacity,
                          np.random.default_rng(buffer_seed))
    policy_rng = np.random.default_rng(policy_seed)
    adam = AdamState.init(online.parameters(), lr=config.learning_rate)

    total_steps = max(1, config.epochs * int(env.steps_per_episode))
    span = config.epsilon_end - config.epsilon_start

    curves: list[EpochStats] = []
    epsilon = config.epsilon_start
    env_steps = 0
    grad_steps = 0
    for epoch in range(config.epochs):
        state = _state_vector(env.reset())
        done = False
        total_reward = 0.0
        losses: list[float] = []
        while not done:
            epsilon = config.epsilon_start + span * min(1.0, env_steps / total_steps)
            action = select_action(online.forward(state), epsilon, policy_rng)
            result = env.step(action)
            next_state = _state_vector(result.next_state)
            buffer.push(Transition(state, int(action), result.reward,
                                   next_state, result.done))
            total_reward += result.reward
            env_steps += 1
            if len(buffer) >= config.batch_size:
                batch = buffer.sample(config.batch_size)
                targets = _batch_targets(batch, config.kind, online, target,
                                         config.gamma)
                loss, grads = online.backward_batch(
                    np.stack([tr.state for tr in batch]),
                    np.array([tr.action for tr in batch]),
                    targets,
                )
                adam_step(online.parameters(), grads, adam)
                losses.append(loss)
                grad_steps += 1
                if grad_steps % config.target_sync_every == 0:
                    target.copy_from(online)
            state = next_state
            done = result.done
        mean_loss = sum(losses) / len(losses) if losses else 0.0
        curves.append(EpochStats(epoch=epoch, total_reward=total_reward,
                                 mean_loss=mean_loss))
    return TrainResult(online=online, target=target, curves=curves,
                       final_epsilon=epsilon)


def write_curves_csv(path: str | Path, curves: Sequence[EpochStats]) -> None:
    """Persist per-epoch training curves as epoch,total_reward,mean_loss."""
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CURVES_HEADER)
        for row in curves:
            writer.writerow([row.epoch, repr(row.total_reward), repr(row.mean_loss)])


def read_curves_csv(path: str | Path) -> list[EpochStats]:
    with Path(path).open(newline="", encoding="utf-8") as handle:
        return [EpochStats(epoch=int(row["epoch"]),
                           total_reward=float(row["total_reward"]),
                           mean_loss=float(row["mean_loss"]))
                for row in csv.DictReader(handle)]


def save_agent(path: str | Path, result: TrainResult,
               config: AgentConfig) -> None:
    """Checkpoint = network dump + config echo + final epsilon."""
    save_checkpoint(result.online, path, extra={
        "agent_config": config.to_dict(),
        "final_epsilon": result.final_epsilon,
    })


def load_agent(path: str | Path) -> tuple[AnyQNetwork, dict]:
    return load_checkpoint(path)
