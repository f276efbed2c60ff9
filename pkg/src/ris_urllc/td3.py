"""Twin-delayed deterministic policy gradient learner (and its DDPG ablation).

Six networks: actor, two critics, and a lagged target copy of each.  Every
environment step pushes a transition into a uniform ring buffer and (once
the buffer covers a batch) regresses both critics onto the clipped
double-Q target

    y = r + gamma * min_i Q_i(s', a'; target),
    a' = clip(mu_target(s') + clip(noise, -c, c), -1, 1).

Every ``policy_delay``-th critic update also ascends the first critic's
value of the actor's own action and then polyak-blends all targets.  DDPG
mode strips the second critic, the target smoothing noise, and the delay.

The critic fuses its two inputs by running state and action through
separate dense branches and summing the branch outputs before the head
stack; this keeps the action's contribution from being swamped by the much
wider state vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import ChannelSampler, ChannelSet
from .config import LearnConfig, ScenarioConfig
from .env import RisUrllcEnv, action_length, state_length
from .nets import (Adam, DenseLayer, Mlp, assign_params, copy_into, load_tensors,
                   make_mlp, named_params, polyak_blend, save_tensors)
from .rng import substream


class ReplayBuffer:
    """Preallocated ring of transitions with uniform sampling."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        self.capacity = capacity
        self.s = np.zeros((capacity, state_dim))
        self.a = np.zeros((capacity, action_dim))
        self.r = np.zeros(capacity)
        self.s2 = np.zeros((capacity, state_dim))
        self.size = 0
        self.cursor = 0

    def add(self, s, a, r, s2) -> None:
        i = self.cursor
        self.s[i] = s
        self.a[i] = a
        self.r[i] = r
        self.s2[i] = s2
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, rng: np.random.Generator, batch: int):
        idx = rng.integers(0, self.size, size=batch)
        return self.s[idx], self.a[idx], self.r[idx], self.s2[idx]

    def __len__(self) -> int:
        return self.size


def _branch(in_dim: int, widths: tuple[int, ...], layernorm: bool,
            rng: np.random.Generator) -> Mlp:
    dims = [in_dim, *widths]
    return Mlp([DenseLayer(dims[i], dims[i + 1], "relu", layernorm, rng)
                for i in range(len(dims) - 1)])


class Critic:
    """Q(s, a): separate state/action branches, summed, then a head stack."""

    def __init__(self, state_dim: int, action_dim: int, learn: LearnConfig,
                 rng: np.random.Generator):
        self.branch_s = _branch(state_dim, learn.critic_trunk, learn.layernorm, rng)
        self.branch_a = _branch(action_dim, learn.critic_trunk, learn.layernorm, rng)
        self.head = make_mlp(learn.critic_trunk[-1], learn.critic_head, 1,
                             "linear", learn.layernorm, rng)

    def params(self) -> list[np.ndarray]:
        return self.branch_s.params() + self.branch_a.params() + self.head.params()

    def forward(self, s: np.ndarray, a: np.ndarray):
        hs, cache_s = self.branch_s.forward(s)
        ha, cache_a = self.branch_a.forward(a)
        q, cache_h = self.head.forward(hs + ha)
        return q, (cache_s, cache_a, cache_h)

    def __call__(self, s: np.ndarray, a: np.ndarray) -> np.ndarray:
        return self.forward(s, a)[0]

    def backward(self, cache, dq: np.ndarray):
        cache_s, cache_a, cache_h = cache
        grads_h, dfused = self.head.backward(cache_h, dq)
        grads_s, ds = self.branch_s.backward(cache_s, dfused)
        grads_a, da = self.branch_a.backward(cache_a, dfused)
        return grads_s + grads_a + grads_h, ds, da


class Td3Agent:
    """Actor + twin critics + targets, with delayed policy/target updates."""

    def __init__(self, state_dim: int, action_dim: int, learn: LearnConfig,
                 rng: np.random.Generator):
        self.learn = learn
        self.algo = learn.algo
        self.state_dim = state_dim
        self.action_dim = action_dim
        # single critic, no smoothing, undelayed policy in the ablation
        self.policy_delay = 1 if self.algo == "ddpg" else learn.policy_delay
        self.smooth_sigma = 0.0 if self.algo == "ddpg" else learn.sigma_smooth

        self.actor = make_mlp(state_dim, learn.actor_layers, action_dim,
                              "tanh", learn.layernorm, rng, final_scale=1e-3)
        self.critic1 = Critic(state_dim, action_dim, learn, rng)
        self.critic2 = Critic(state_dim, action_dim, learn, rng) \
            if self.algo == "td3" else None

        self.target_actor = make_mlp(state_dim, learn.actor_layers, action_dim,
                                     "tanh", learn.layernorm, rng, final_scale=1e-3)
        copy_into(self.target_actor.params(), self.actor.params())
        self.target_critic1 = Critic(state_dim, action_dim, learn, rng)
        copy_into(self.target_critic1.params(), self.critic1.params())
        if self.critic2 is not None:
            self.target_critic2 = Critic(state_dim, action_dim, learn, rng)
            copy_into(self.target_critic2.params(), self.critic2.params())
        else:
            self.target_critic2 = None

        self.opt_actor = Adam(self.actor.params(), learn.lr_actor)
        self.opt_critic1 = Adam(self.critic1.params(), learn.lr_critic)
        self.opt_critic2 = Adam(self.critic2.params(), learn.lr_critic) \
            if self.critic2 is not None else None
        self.update_count = 0

    # ------------------------------------------------------------------
    # acting
    # ------------------------------------------------------------------

    def select_action(self, s: np.ndarray, explore: bool,
                      rng: np.random.Generator | None = None) -> np.ndarray:
        a = self.actor(s[None, :])[0]
        if explore:
            a = a + rng.normal(0.0, self.learn.sigma_explore, a.shape)
        return np.clip(a, -1.0, 1.0)

    def target_action(self, s2: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        a = self.target_actor(s2)
        if self.smooth_sigma > 0.0:
            noise = np.clip(rng.normal(0.0, self.smooth_sigma, a.shape),
                            -self.learn.smooth_clip, self.learn.smooth_clip)
            a = a + noise
        return np.clip(a, -1.0, 1.0)

    # ------------------------------------------------------------------
    # learning
    # ------------------------------------------------------------------

    def critic_targets(self, r: np.ndarray, s2: np.ndarray,
                       rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Clipped target values y plus the critic-1-only values (diagnostic)."""
        a2 = self.target_action(s2, rng)
        q1 = self.target_critic1(s2, a2)
        qmin = np.minimum(q1, self.target_critic2(s2, a2)) \
            if self.target_critic2 is not None else q1
        gamma = self.learn.gamma
        return r[:, None] + gamma * qmin, r[:, None] + gamma * q1

    def critic_update(self, batch, rng: np.random.Generator) -> tuple[float, float]:
        s, a, r, s2 = batch
        y, _ = self.critic_targets(r, s2, rng)
        losses = []
        pairs = [(self.critic1, self.opt_critic1)]
        if self.critic2 is not None:
            pairs.append((self.critic2, self.opt_critic2))
        for critic, opt in pairs:
            q, cache = critic.forward(s, a)
            err = q - y
            loss = float(np.mean(err ** 2))
            if not math.isfinite(loss):
                raise FloatingPointError(f"critic loss diverged: {loss}")
            grads, _, _ = critic.backward(cache, 2.0 * err / err.shape[0])
            opt.step(critic.params(), grads)
            losses.append(loss)
        self.update_count += 1
        return losses[0], losses[-1]

    def policy_and_target_update(self, batch) -> bool:
        """Actor ascent on critic 1 + target blends; no-op off the delay grid."""
        if self.update_count % self.policy_delay != 0:
            return False
        s = batch[0]
        a_pi, actor_caches = self.actor.forward(s)
        q, critic_cache = self.critic1.forward(s, a_pi)
        # ascend mean Q: backprop -1/B through the critic to the action input
        dq = np.full_like(q, -1.0 / q.shape[0])
        _, _, da = self.critic1.backward(critic_cache, dq)
        actor_grads, _ = self.actor.backward(actor_caches, da)
        self.opt_actor.step(self.actor.params(), actor_grads)

        tau = self.learn.tau
        polyak_blend(self.target_actor.params(), self.actor.params(), tau)
        polyak_blend(self.target_critic1.params(), self.critic1.params(), tau)
        if self.target_critic2 is not None:
            polyak_blend(self.target_critic2.params(), self.critic2.params(), tau)
        return True

    # ------------------------------------------------------------------
    # persistence
    # ------------------------------------------------------------------

    def save(self, path: str | Path) -> None:
        tensors: dict[str, np.ndarray] = {"meta/update_count": np.array([float(self.update_count)])}
        tensors.update(named_params(self.actor.params(), "actor"))
        tensors.update(named_params(self.target_actor.params(), "target_actor"))
        tensors.update(named_params(self.critic1.params(), "critic1"))
        tensors.update(named_params(self.target_critic1.params(), "target_critic1"))
        for name, opt in (("opt_actor", self.opt_actor), ("opt_critic1", self.opt_critic1)):
            for k, v in opt.state_tensors().items():
                tensors[f"{name}/{k}"] = v
        if self.critic2 is not None:
            tensors.update(named_params(self.critic2.params(), "critic2"))
            tensors.update(named_params(self.target_critic2.params(), "target_critic2"))
            for k, v in self.opt_critic2.state_tensors().items():
                tensors[f"opt_critic2/{k}"] = v
        save_tensors(path, tensors)

    def load(self, path: str | Path) -> None:
        tensors = load_tensors(path)
        self.update_count = int(tensors["meta/update_count"][0])
        assign_params(self.actor.params(), tensors, "actor")
        assign_params(self.target_actor.params(), tensors, "target_actor")
        assign_params(self.critic1.params(), tensors, "critic1")
        assign_params(self.target_critic1.params(), tensors, "target_critic1")
        self.opt_actor.load_state_tensors(_sub(tensors, "opt_actor"))
        self.opt_critic1.load_state_tensors(_sub(tensors, "opt_critic1"))
        if self.critic2 is not None:
            if "critic2/0" not in tensors:
                raise ValueError("checkpoint has no twin critic (architecture mismatch)")
            assign_params(self.critic2.params(), tensors, "critic2")
            assign_params(self.target_critic2.params(), tensors, "target_critic2")
            self.opt_critic2.load_state_tensors(_sub(tensors, "opt_critic2"))


def _sub(tensors: dict[str, np.ndarray], prefix: str) -> dict[str, np.ndarray]:
    plen = len(prefix) + 1
    return {k[plen:]: v for k, v in tensors.items() if k.startswith(prefix + "/")}


# ---------------------------------------------------------------------------
# training / evaluation drivers
# ---------------------------------------------------------------------------

@dataclass
class EpisodeRecord:
    episode: int
    mean_l_tot: float            # raw bits, averaged over the episode's steps
    mean_scaled_reward: float
    critic_loss: float
    critic_loss_twin: float
    eval_l_tot: float            # NaN on non-evaluation episodes


@dataclass
class TrainResult:
    records: list[EpisodeRecord] = field(default_factory=list)
    eval_history: list[tuple[int, float]] = field(default_factory=list)

    def final_eval_mean(self, last_episodes: int) -> float:
        """Mean of the evaluation scores logged in the last N episodes."""
        if not self.eval_history:
            return float("nan")
        cutoff = self.records[-1].episode - last_episodes
        tail = [score for ep, score in self.eval_history if ep > cutoff]
        return float(np.mean(tail)) if tail else float("nan")


def make_eval_channels(cfg: ScenarioConfig, eval_seed: int,
                       n: int) -> list[ChannelSet]:
    """The n fixed evaluation draws for (cfg, eval_seed); shared by baselines."""
    sampler = ChannelSampler(cfg)
    return [sampler.draw(substream(eval_seed, "eval-channel", i)) for i in range(n)]


def evaluate_greedy(agent: Td3Agent, cfg: ScenarioConfig, learn: LearnConfig,
                    channels: list[ChannelSet], eval_seed: int,
                    equal_cbl: bool = False):
    """Greedy rollouts on fixed channels; returns (scores, decisions).

    Each realization starts from its own random initial decision, the
    deterministic policy runs ``learn.eval_steps`` steps on the frozen
    channel, and the settled final step provides the score and decision.
    """
    env = RisUrllcEnv(cfg, learn, equal_cbl=equal_cbl, horizon=learn.eval_steps)
    scores = np.empty(len(channels))
    decisions = []
    for i, ch in enumerate(channels):
        s = env.reset_to(ch, substream(eval_seed, "eval-init", i))
        info = None
        for _ in range(learn.eval_steps):
            a = agent.select_action(s, explore=False)
            s, _, info = env.step(a)
        scores[i] = info["l_tot"]
        decisions.append(info["decision"])
    return scores, decisions


def train(cfg: ScenarioConfig, learn: LearnConfig, seed: int,
          equal_cbl: bool = False, eval_seed: int | None = None,
          agent: Td3Agent | None = None,
          progress: bool = False) -> tuple[Td3Agent, TrainResult]:
    """Run the full training loop; returns the agent and the per-episode log.

    Streams: network init, exploration noise, buffer sampling and target
    smoothing each use a dedicated substream of ``seed``; episode e draws
    its channel and initial action from substream (seed, "episode", e).
    Evaluation channels come from ``eval_seed`` (default: seed) so runs
    with different training seeds can share evaluation draws.
    """
    eval_seed = seed if eval_seed is None else eval_seed
    env = RisUrllcEnv(cfg, learn, equal_cbl=equal_cbl)
    s_dim, a_dim = state_length(cfg), action_length(cfg)
    if agent is None:
        agent = Td3Agent(s_dim, a_dim, learn, substream(seed, "net-init"))
    buffer = ReplayBuffer(learn.buffer_capacity, s_dim, a_dim)
    rng_explore = substream(seed, "explore")
    rng_sample = substream(seed, "sample")
    rng_smooth = substream(seed, "smooth")
    eval_channels = make_eval_channels(cfg, eval_seed, learn.eval_realizations)

    result = TrainResult()
    warmup = learn.batch_size
    global_step = 0
    for ep in range(learn.n_episodes):
        s = env.reset(substream(seed, "episode", ep))
        raw_sum = scaled_sum = 0.0
        loss_sum = np.zeros(2)
        n_updates = 0
        for _ in range(learn.n_steps):
            if global_step < warmup:
                a = rng_explore.uniform(-1.0, 1.0, a_dim)
            else:
                a = agent.select_action(s, explore=True, rng=rng_explore)
            s2, r, info = env.step(a)
            buffer.add(s, a, r, s2)
            s = s2
            raw_sum += info["l_tot"]
            scaled_sum += r
            global_step += 1
            if len(buffer) >= learn.batch_size:
                batch = buffer.sample(rng_sample, learn.batch_size)
                loss_sum += agent.critic_update(batch, rng_smooth)
                agent.policy_and_target_update(batch)
                n_updates += 1

        eval_score = float("nan")
        if (ep + 1) % learn.eval_every == 0 or ep == learn.n_episodes - 1:
            scores, _ = evaluate_greedy(agent, cfg, learn, eval_channels,
                                        eval_seed, equal_cbl=equal_cbl)
            eval_score = float(np.mean(scores))
            result.eval_history.append((ep, eval_score))
        rec = EpisodeRecord(
            episode=ep,
            mean_l_tot=raw_sum / learn.n_steps,
            mean_scaled_reward=scaled_sum / learn.n_steps,
            critic_loss=loss_sum[0] / max(n_updates, 1),
            critic_loss_twin=loss_sum[1] / max(n_updates, 1),
            eval_l_tot=eval_score,
        )
        result.records.append(rec)
        if progress and ((ep + 1) % 25 == 0 or ep == 0):
            print(f"episode {ep + 1}/{learn.n_episodes}  "
                  f"train L_tot {rec.mean_l_tot:8.2f}  eval {eval_score:8.2f}",
                  flush=True)
    return agent, result
