"""Twin-delayed deterministic actor-critic with a FIFO replay buffer.

Twin critics with a min-target bootstrap, delayed actor updates, Polyak
target mixing. The target action is the raw target-actor output (no
smoothing noise), and the critic target bootstraps from the pre-projection
action. The agent lives entirely in normalized observation space; actions
are C-rates mapped through a tanh head.
"""

from __future__ import annotations

import math

import numpy as np

from .config import ExperimentConfig
from .mlp import AdamState, Network, adam_step, polyak_update
from .rng import Rng
from .states import AgentState, ObservationScaler, Transition

ACTOR_DIMS = [4, 128, 128, 1]
CRITIC_DIMS = [5, 128, 128, 1]


class ReplayUnderfull(RuntimeError):
    """Sampling requested before the buffer holds a full batch."""


class ReplayBuffer:
    """Bounded FIFO of transitions; uniform sampling with replacement."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._data: list[Transition] = []
        self._next = 0  # overwrite cursor once full

    def __len__(self) -> int:
        return len(self._data)

    def push(self, tr: Transition) -> None:
        if len(self._data) < self.capacity:
            self._data.append(tr)
        else:
            self._data[self._next] = tr
            self._next = (self._next + 1) % self.capacity

    def sample(self, batch_size: int, rng: Rng) -> list[Transition]:
        if len(self._data) < batch_size:
            raise ReplayUnderfull("warmup incomplete: buffer smaller than batch")
        n = len(self._data)
        return [self._data[rng.integer(n)] for _ in range(batch_size)]


class Td3Agent:
    """Actor 4->128->128->1 (tanh head), twin critics 5->128->128->1."""

    def __init__(self, config: ExperimentConfig, actor: Network, critic1: Network,
                 critic2: Network, noise_std: float):
        self.scaler = ObservationScaler(config)
        self.a_min = config.a_min
        self.a_max = config.a_max
        self.gamma = config.gamma
        self.tau = config.tau
        self.policy_delay = config.policy_delay
        self.noise_std = noise_std
        self.noise_decay = config.noise_decay
        self.noise_floor = config.noise_floor
        self.noise_std_init = math.sqrt(config.noise_variance)

        self.actor = actor
        self.critic1 = critic1
        self.critic2 = critic2
        self.actor_target = actor.copy()
        self.critic1_target = critic1.copy()
        self.critic2_target = critic2.copy()
        self.opt_actor = AdamState.for_network(actor, config.actor_lr)
        self.opt_critic1 = AdamState.for_network(critic1, config.critic_lr)
        self.opt_critic2 = AdamState.for_network(critic2, config.critic_lr)

    @classmethod
    def create(cls, config: ExperimentConfig, rng: Rng) -> "Td3Agent":
        actor = Network.create(ACTOR_DIMS, rng, output_activation="tanh",
                               final_layer_scale=1e-2)
        critic1 = Network.create(CRITIC_DIMS, rng)
        critic2 = Network.create(CRITIC_DIMS, rng)
        return cls(config, actor, critic1, critic2,
                   noise_std=math.sqrt(config.noise_variance))

    # -- exploration schedule --------------------------------------------

    def noise_std_for_episode(self, episode: int) -> float:
        """Linear decay from sqrt(initial variance), floored; episode is 1-based."""
        return max(self.noise_floor,
                   self.noise_std_init - (episode - 1) * self.noise_decay)

    # -- acting -----------------------------------------------------------

    def _to_action(self, head):
        """tanh output in [-1, 1] -> C-rate in [a_min, a_max]."""
        return self.a_min + (head + 1.0) * 0.5 * (self.a_max - self.a_min)

    def select_action(self, s: AgentState, rng: Rng, explore: bool) -> float:
        head = float(self.actor.forward(self.scaler.normalize(s))[0])
        action = self._to_action(head)
        if explore:
            action += rng.normal(0.0, self.noise_std)
        return min(max(action, self.a_min), self.a_max)

    # -- training ---------------------------------------------------------

    def _split_batch(self, batch: list[Transition]):
        states = self.scaler.normalize_batch([tr.state for tr in batch])
        next_states = self.scaler.normalize_batch([tr.next_state for tr in batch])
        actions = np.array([tr.action for tr in batch], dtype=np.float64)
        rewards = np.array([tr.reward for tr in batch], dtype=np.float64)
        dones = np.array([tr.done for tr in batch], dtype=np.float64)
        return states, actions, rewards, next_states, dones

    def critic_target_values(self, batch: list[Transition]) -> np.ndarray:
        """y = r + gamma * (1 - done) * min(Q1', Q2') at the target action."""
        if not batch:
            raise ValueError("empty batch")
        _, _, rewards, next_states, dones = self._split_batch(batch)
        head = self.actor_target.forward(next_states)
        next_action_norm = (head + 1.0) * 0.5  # critic takes the [0,1] action
        xq = np.hstack([next_states, next_action_norm])
        q1 = self.critic1_target.forward(xq)[:, 0]
        q2 = self.critic2_target.forward(xq)[:, 0]
        return rewards + self.gamma * (1.0 - dones) * np.minimum(q1, q2)

    def update_critics(self, batch: list[Transition]) -> tuple[float, float]:
        """One Adam step per critic on the mean squared TD error; returns
        the pre-update losses."""
        y = self.critic_target_values(batch)
        states, actions, _, _, _ = self._split_batch(batch)
        action_norm = np.asarray(self.scaler.normalize_action(actions))[:, None]
        x = np.hstack([states, action_norm])
        b = len(batch)
        losses = []
        for critic, opt in ((self.critic1, self.opt_critic1),
                            (self.critic2, self.opt_critic2)):
            pred = critic.forward(x)[:, 0]
            err = pred - y
            losses.append(float(np.mean(err ** 2)))
            grads = critic.backward(x, (2.0 * err / b)[:, None])
            adam_step(critic, grads, opt)
        return losses[0], losses[1]

    def update_actor_and_targets(self, batch: list[Transition],
                                 step: int) -> float | None:
        """Delayed policy update: every ``policy_delay`` steps, ascend
        mean Q1(s, actor(s)) and Polyak-mix all three targets."""
        if step % self.policy_delay != 0:
            return None
        states, _, _, _, _ = self._split_batch(batch)
        b = states.shape[0]
        head = self.actor.forward(states)
        action_norm = (head + 1.0) * 0.5
        x = np.hstack([states, action_norm])
        q = self.critic1.forward(x)
        loss = -float(np.mean(q))
        # dLoss/dQ = -1/B; chain through the critic input to the action column,
        # then through the 0.5 scaling of the tanh head.
        critic_grads = self.critic1.backward(x, np.full((b, 1), -1.0 / b))
        upstream_head = critic_grads.input[:, 4:5] * 0.5
        actor_grads = self.actor.backward(states, upstream_head)
        adam_step(self.actor, actor_grads, self.opt_actor)
        polyak_update(self.actor_target, self.actor, self.tau)
        polyak_update(self.critic1_target, self.critic1, self.tau)
        polyak_update(self.critic2_target, self.critic2, self.tau)
        return loss

    # -- checkpointing ------------------------------------------------------

    def to_dict(self) -> dict:
        return {"actor": self.actor.to_dict(),
                "critic1": self.critic1.to_dict(),
                "critic2": self.critic2.to_dict(),
                "actor_target": self.actor_target.to_dict(),
                "critic1_target": self.critic1_target.to_dict(),
                "critic2_target": self.critic2_target.to_dict(),
                "opt_actor": self.opt_actor.to_dict(),
                "opt_critic1": self.opt_critic1.to_dict(),
                "opt_critic2": self.opt_critic2.to_dict(),
                "noise_std": self.noise_std}

    @classmethod
    def from_dict(cls, config: ExperimentConfig, data: dict) -> "Td3Agent":
        agent = cls(config,
                    Network.from_dict(data["actor"]),
                    Network.from_dict(data["critic1"]),
                    Network.from_dict(data["critic2"]),
                    noise_std=data["noise_std"])
        agent.actor_target = Network.from_dict(data["actor_target"])
        agent.critic1_target = Network.from_dict(data["critic1_target"])
        agent.critic2_target = Network.from_dict(data["critic2_target"])
        agent.opt_actor = AdamState.from_dict(data["opt_actor"], agent.actor)
        agent.opt_critic1 = AdamState.from_dict(data["opt_critic1"], agent.critic1)
        agent.opt_critic2 = AdamState.from_dict(data["opt_critic2"], agent.critic2)
        return agent
