"""Soft actor-critic: squashed-gaussian actor, twin Q critics with targets,
uniform replay, and checkpointing that restores training bit-for-bit.

Update rule per batch:
    y      = r + gamma * (1 - done) * (min(Q1', Q2')(s', a') - alpha * log pi(a'|s'))
    critics minimize mean (Q(s,a) - y)^2
    actor  minimizes mean (alpha * log pi(a~|s) - min(Q1, Q2)(s, a~))
with a' and a~ freshly sampled through the reparameterized squash, followed
by a Polyak step of the target networks. Rewards can be rescaled for the
critic targets (reward_scale); logged episode returns are never rescaled.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import CorruptCheckpoint, InsufficientData, VersionMismatch
from .nn import Adam, DenseNet, deterministic_action, squashed_gaussian_grads, squashed_gaussian_sample

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class SacHyperParams:
    """Training constants. theta is carried for config fidelity but unused
    (it belongs to noise-process exploration, which SAC does not use)."""

    lr_value: float = 0.0005
    lr_policy: float = 0.0001
    gamma: float = 0.995
    tau: float = 0.001
    alpha: float = 0.2
    batch_size: int = 64
    buffer_capacity: int = 100_000
    theta: float = 0.15
    hidden_width: int = 256
    update_every: int = 1
    gradient_steps: int = 1
    warmup_steps: int = 1000
    reward_scale: float = 1.0
    init_log_std: float = 0.0
    init_throttle_bias: float = 0.0
    twin_critics: bool = True

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must be in (0, 1)")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must be in (0, 1]")
        if self.batch_size > self.buffer_capacity:
            raise ValueError("batch_size cannot exceed buffer_capacity")


@dataclass(frozen=True)
class Transition:
    obs: np.ndarray
    action: np.ndarray
    reward: float
    next_obs: np.ndarray
    done: bool


@dataclass(frozen=True)
class Batch:
    obs: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    next_obs: np.ndarray
    done: np.ndarray


class ReplayBuffer:
    """Ring buffer over preallocated arrays; uniform sampling with replacement."""

    def __init__(self, capacity: int, obs_dim: int, act_dim: int, seed: int = 0):
        self.capacity = int(capacity)
        self.obs = np.zeros((capacity, obs_dim), dtype=np.float64)
        self.action = np.zeros((capacity, act_dim), dtype=np.float64)
        self.reward = np.zeros(capacity, dtype=np.float64)
        self.next_obs = np.zeros((capacity, obs_dim), dtype=np.float64)
        self.done = np.zeros(capacity, dtype=np.float64)
        self.rng = np.random.default_rng(seed)
        self._pos = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, obs, action, reward, next_obs, done) -> None:
        i = self._pos
        self.obs[i] = obs
        self.action[i] = action
        self.reward[i] = reward
        self.next_obs[i] = next_obs
        self.done[i] = 1.0 if done else 0.0
        self._pos = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def add(self, t: Transition) -> None:
        self.push(t.obs, t.action, t.reward, t.next_obs, t.done)

    def sample(self, n: int) -> Batch:
        if self._size == 0:
            raise InsufficientData("replay buffer is empty")
        idx = self.rng.integers(0, self._size, size=n)
        return Batch(
            obs=self.obs[idx],
            action=self.action[idx],
            reward=self.reward[idx],
            next_obs=self.next_obs[idx],
            done=self.done[idx],
        )

    def clear(self) -> None:
        self._pos = 0
        self._size = 0


@dataclass(frozen=True)
class UpdateReport:
    critic1_loss: float
    critic2_loss: float | None
    actor_loss: float
    mean_entropy: float
    mean_q: float


class SacAgent:
    """Owned and mutated by a single training loop; snapshots may be shared."""

    def __init__(self, obs_dim: int = 23, act_dim: int = 2, hyper: SacHyperParams | None = None,
                 seed: int = 0):
        self.obs_dim = int(obs_dim)
        self.act_dim = int(act_dim)
        self.hyper = hyper or SacHyperParams()
        self.rng = np.random.default_rng(seed)
        w = self.hyper.hidden_width

        self.actor = DenseNet([obs_dim, w, w, act_dim], head="gaussian", rng=self.rng)
        # shift the gaussian heads: configurable starting exploration noise,
        # and an optional forward bias on the last action channel so driving
        # tasks explore the speed dimension from the start
        self.actor.biases[-1] += self.hyper.init_log_std
        self.actor.biases[-2][-1] += self.hyper.init_throttle_bias
        self.critic1 = DenseNet([obs_dim + act_dim, w, w, 1], head="linear", rng=self.rng)
        self.critic2 = DenseNet([obs_dim + act_dim, w, w, 1], head="linear", rng=self.rng)
        self.target1 = DenseNet([obs_dim + act_dim, w, w, 1], head="linear")
        self.target2 = DenseNet([obs_dim + act_dim, w, w, 1], head="linear")
        self.target1.copy_params_from(self.critic1)
        self.target2.copy_params_from(self.critic2)

        self.actor_opt = Adam(self.actor.param_count, lr=self.hyper.lr_policy)
        self.critic1_opt = Adam(self.critic1.param_count, lr=self.hyper.lr_value)
        self.critic2_opt = Adam(self.critic2.param_count, lr=self.hyper.lr_value)
        self.update_count = 0

    # -- acting ------------------------------------------------------------

    def select_action(self, obs: np.ndarray, deterministic: bool = False) -> np.ndarray:
        mean, log_std = self.actor.forward(np.asarray(obs, dtype=np.float64))
        if deterministic:
            return deterministic_action(mean)
        noise = self.rng.standard_normal(mean.shape)
        action, _ = squashed_gaussian_sample(mean, log_std, noise)
        return action

    def random_action(self) -> np.ndarray:
        """Uniform action for warmup exploration, drawn from the agent RNG."""
        return self.rng.uniform(-1.0, 1.0, self.act_dim)

    # -- learning -----------------------------------------------------------

    def update(self, buffer: ReplayBuffer) -> UpdateReport:
        h = self.hyper
        # warmup gates only the first update; a trained agent resuming on a
        # freshly flushed buffer needs no more than one batch
        need = max(h.batch_size, h.warmup_steps) if self.update_count == 0 else h.batch_size
        if len(buffer) < need:
            raise InsufficientData(f"buffer holds {len(buffer)} transitions, need {need}")
        batch = buffer.sample(h.batch_size)
        n = batch.obs.shape[0]
        reward = batch.reward * h.reward_scale

        # critic targets from resampled next actions
        mean_n, log_std_n = self.actor.forward(batch.next_obs)
        noise_n = self.rng.standard_normal(mean_n.shape)
        a_next, logp_next = squashed_gaussian_sample(mean_n, log_std_n, noise_n)
        xq_next = np.concatenate([batch.next_obs, a_next], axis=1)
        q1_t = self.target1.forward(xq_next)[:, 0]
        if h.twin_critics:
            q2_t = self.target2.forward(xq_next)[:, 0]
            q_next = np.minimum(q1_t, q2_t)
        else:
            q_next = q1_t
        y = reward + h.gamma * (1.0 - batch.done) * (q_next - h.alpha * logp_next)

        xq = np.concatenate([batch.obs, batch.action], axis=1)
        critic_losses: list[float] = []
        critics = [(self.critic1, self.critic1_opt)]
        if h.twin_critics:
            critics.append((self.critic2, self.critic2_opt))
        for critic, opt in critics:
            q, cache = critic.forward_cached(xq)
            err = q[:, 0] - y
            critic_losses.append(float(np.mean(err**2)))
            grad, _ = critic.backward(cache, (2.0 / n) * err[:, None])
            opt.step(critic.params, grad)

        # actor: ascend min-Q of a reparameterized action, keep entropy up
        (mean, log_std), actor_cache = self.actor.forward_cached(batch.obs)
        noise_a = self.rng.standard_normal(mean.shape)
        a_new, logp_new = squashed_gaussian_sample(mean, log_std, noise_a)
        xq_new = np.concatenate([batch.obs, a_new], axis=1)
        q1, c1 = self.critic1.forward_cached(xq_new)
        if h.twin_critics:
            q2, c2 = self.critic2.forward_cached(xq_new)
            pick1 = q1[:, 0] <= q2[:, 0]
            q_min = np.where(pick1, q1[:, 0], q2[:, 0])
        else:
            pick1 = np.ones(n, dtype=bool)
            q_min = q1[:, 0]
        actor_loss = float(np.mean(h.alpha * logp_new - q_min))

        d_q1 = np.where(pick1, -1.0 / n, 0.0)[:, None]
        _, d_in1 = self.critic1.backward(c1, d_q1)
        grad_action = d_in1[:, self.obs_dim :]
        if h.twin_critics:
            d_q2 = np.where(pick1, 0.0, -1.0 / n)[:, None]
            _, d_in2 = self.critic2.backward(c2, d_q2)
            grad_action = grad_action + d_in2[:, self.obs_dim :]
        grad_logp = np.full(n, h.alpha / n)
        d_mean, d_log_std = squashed_gaussian_grads(a_new, noise_a, log_std, grad_action, grad_logp)
        actor_grad, _ = self.actor.backward(actor_cache, (d_mean, d_log_std))
        self.actor_opt.step(self.actor.params, actor_grad)

        self.soft_update()
        self.update_count += 1
        return UpdateReport(
            critic1_loss=critic_losses[0],
            critic2_loss=critic_losses[1] if h.twin_critics else None,
            actor_loss=actor_loss,
            mean_entropy=float(-np.mean(logp_new)),
            mean_q=float(np.mean(q_min)),
        )

    def soft_update(self, tau: float | None = None) -> None:
        """target <- tau * online + (1 - tau) * target, elementwise."""
        t = self.hyper.tau if tau is None else tau
        for online, target in ((self.critic1, self.target1), (self.critic2, self.target2)):
            target.params *= 1.0 - t
            target.params += t * online.params

    # -- persistence ----------------------------------------------------------

    def save_checkpoint(self, path) -> None:
        meta = {
            "version": CHECKPOINT_VERSION,
            "kind": "sac-agent",
            "obs_dim": self.obs_dim,
            "act_dim": self.act_dim,
            "hyper": asdict(self.hyper),
            "update_count": self.update_count,
            "rng_state": self.rng.bit_generator.state,
            "opt": {
                "actor": self.actor_opt.state_dict(),
                "critic1": self.critic1_opt.state_dict(),
                "critic2": self.critic2_opt.state_dict(),
            },
        }
        np.savez(
            path,
            meta=np.array(json.dumps(meta)),
            actor=self.actor.params,
            critic1=self.critic1.params,
            critic2=self.critic2.params,
            target1=self.target1.params,
            target2=self.target2.params,
            actor_m=self.actor_opt.m,
            actor_v=self.actor_opt.v,
            critic1_m=self.critic1_opt.m,
            critic1_v=self.critic1_opt.v,
            critic2_m=self.critic2_opt.m,
            critic2_v=self.critic2_opt.v,
        )


def load_checkpoint(
    path,
    expected_obs_dim: int | None = None,
    expected_act_dim: int | None = None,
    expected_hidden_width: int | None = None,
) -> SacAgent:
    """Rebuild an agent (networks, optimizers, RNG) from save_checkpoint output.

    Raises CorruptCheckpoint when the file is unreadable or incomplete, and
    VersionMismatch when the format version or the architecture disagrees
    with what the caller expects.
    """
    try:
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            arrays = {k: data[k] for k in data.files if k != "meta"}
    except VersionMismatch:
        raise
    except Exception as exc:
        raise CorruptCheckpoint(f"cannot read checkpoint {path}: {exc}") from exc

    if meta.get("version") != CHECKPOINT_VERSION or meta.get("kind") != "sac-agent":
        raise VersionMismatch(f"unsupported checkpoint format: {meta.get('version')!r}")
    hyper = SacHyperParams(**meta["hyper"])
    for name, expected, actual in (
        ("obs_dim", expected_obs_dim, meta["obs_dim"]),
        ("act_dim", expected_act_dim, meta["act_dim"]),
        ("hidden_width", expected_hidden_width, hyper.hidden_width),
    ):
        if expected is not None and expected != actual:
            raise VersionMismatch(f"checkpoint {name} is {actual}, expected {expected}")

    agent = SacAgent(obs_dim=meta["obs_dim"], act_dim=meta["act_dim"], hyper=hyper, seed=0)
    try:
        for net, key in (
            (agent.actor, "actor"),
            (agent.critic1, "critic1"),
            (agent.critic2, "critic2"),
            (agent.target1, "target1"),
            (agent.target2, "target2"),
        ):
            if arrays[key].shape != net.params.shape:
                raise VersionMismatch(f"{key} parameter count mismatch")
            net.params[...] = arrays[key]
        for opt, key in (
            (agent.actor_opt, "actor"),
            (agent.critic1_opt, "critic1"),
            (agent.critic2_opt, "critic2"),
        ):
            opt.load_state(meta["opt"][key], arrays[f"{key}_m"], arrays[f"{key}_v"])
    except KeyError as exc:
        raise CorruptCheckpoint(f"checkpoint missing entry: {exc}") from exc
    agent.update_count = int(meta["update_count"])
    state = meta["rng_state"]
    agent.rng = np.random.default_rng()
    agent.rng.bit_generator.state = state
    return agent
