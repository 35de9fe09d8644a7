"""Clipped-surrogate policy optimization with generalized advantage
estimation.

The update is written against explicit gradients (see nets.py), keeps
an adaptive-moment optimizer across calls, and aborts without touching
parameters if a loss goes non-finite. Advantages are normalized per
minibatch; the probability-ratio exponent is clamped before
exponentiation to guard overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .nets import Adam, clip_by_global_norm
from .policy import (
    LOG_STD_MIN,
    ExplorationMode,
    PolicyParams,
    bernoulli_entropy,
    bernoulli_log_prob,
    gaussian_tanh_log_prob,
    sigmoid,
)

RATIO_EXP_CLAMP = 30.0


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 3e-5
    n_steps: int = 512
    batch_size: int = 128
    n_epochs: int = 20
    gamma: float = 0.99
    gae_lambda: float = 0.9
    clip_range: float = 0.4
    ent_coef: float = 0.0
    vf_coef: float = 0.5
    max_grad_norm: float = 0.5
    n_envs: int = 1
    total_timesteps: int = 3_000_000
    seed: int = 0
    exploration_mode: ExplorationMode = ExplorationMode.BERNOULLI
    noise_resample_every: int = 4
    # plant steps per policy decision (zero-order hold in between, like the
    # deployed controller); 1 = decide every simulator step
    control_interval: int = 1
    eval_every_updates: int = 10
    eval_episodes: int = 20
    checkpoint_every_updates: int = 50

    def __post_init__(self) -> None:
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if not (0.0 <= self.gae_lambda <= 1.0):
            raise ValueError(f"gae_lambda must be in [0, 1], got {self.gae_lambda}")
        if self.clip_range <= 0.0:
            raise ValueError(f"clip_range must be > 0, got {self.clip_range}")
        if self.n_envs < 1:
            raise ValueError(f"n_envs must be >= 1, got {self.n_envs}")
        if self.n_steps < 1 or self.batch_size < 1:
            raise ValueError("n_steps and batch_size must be >= 1")
        if (self.n_steps * self.n_envs) % self.batch_size != 0:
            raise ValueError(
                f"batch_size ({self.batch_size}) must divide n_steps*n_envs "
                f"({self.n_steps * self.n_envs})"
            )
        if self.total_timesteps < 1:
            raise ValueError("total_timesteps must be >= 1")
        if self.control_interval < 1:
            raise ValueError(f"control_interval must be >= 1, got {self.control_interval}")


class RolloutBuffer:
    """Fixed-length on-policy storage for one update's worth of steps.

    ``actions`` holds the binary pair in Bernoulli mode and the
    pre-squash Gaussian sample in continuous-threshold mode.
    Observations are stored as the (already normalized) vectors the
    policy actually consumed.
    """

    def __init__(self, n_steps: int, obs_dim: int):
        self.n_steps = n_steps
        self.observations = np.zeros((n_steps, obs_dim))
        self.actions = np.zeros((n_steps, 2))
        self.log_probs = np.zeros(n_steps)
        self.values = np.zeros(n_steps)
        self.rewards = np.zeros(n_steps)
        self.dones = np.zeros(n_steps)
        self.bootstrap_value = 0.0
        self.pos = 0

    def add(self, obs, action, log_prob, value, reward, done) -> None:
        if self.pos >= self.n_steps:
            raise ValueError("rollout buffer is full")
        i = self.pos
        self.observations[i] = obs
        self.actions[i] = action
        self.log_probs[i] = log_prob
        self.values[i] = value
        self.rewards[i] = reward
        self.dones[i] = 1.0 if done else 0.0
        self.pos += 1

    @property
    def full(self) -> bool:
        return self.pos == self.n_steps

    def reset(self) -> None:
        self.pos = 0
        self.bootstrap_value = 0.0


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    dones: np.ndarray,
    bootstrap_value: float,
    gamma: float,
    gae_lambda: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Advantages by the usual backward recursion over TD residuals.

    delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t)
    A_t     = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}

    ``bootstrap_value`` stands in for V(s_{t+1}) past the buffer end.
    Returns (advantages, returns) with returns = advantages + values.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    n = len(rewards)
    if n < 1:
        raise ValueError("need at least one step")
    if len(values) != n or len(dones) != n:
        raise ValueError(
            f"length mismatch: rewards {n}, values {len(values)}, dones {len(dones)}"
        )
    advantages = np.zeros(n)
    last = 0.0
    for t in range(n - 1, -1, -1):
        next_value = bootstrap_value if t == n - 1 else values[t + 1]
        nonterminal = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_value * nonterminal - values[t]
        last = delta + gamma * gae_lambda * nonterminal * last
        advantages[t] = last
    return advantages, advantages + values


def ppo_ratio(log_prob_new, log_prob_old):
    """exp(new - old) with the exponent clamped to +-30."""
    diff = np.clip(np.asarray(log_prob_new) - np.asarray(log_prob_old),
                   -RATIO_EXP_CLAMP, RATIO_EXP_CLAMP)
    out = np.exp(diff)
    return float(out) if out.ndim == 0 else out


def clipped_policy_loss(ratios: np.ndarray, advantages: np.ndarray, clip_range: float) -> float:
    """-mean(min(r*A, clip(r, 1-eps, 1+eps)*A)).

    Callers normalize advantages before this; the function itself takes
    them as given.
    """
    ratios = np.asarray(ratios, dtype=np.float64)
    advantages = np.asarray(advantages, dtype=np.float64)
    if ratios.size == 0:
        raise ValueError("empty batch")
    if ratios.shape != advantages.shape:
        raise ValueError(f"shape mismatch: {ratios.shape} vs {advantages.shape}")
    if clip_range <= 0.0:
        raise ValueError(f"clip_range must be > 0, got {clip_range}")
    unclipped = ratios * advantages
    clipped = np.clip(ratios, 1.0 - clip_range, 1.0 + clip_range) * advantages
    return float(-np.mean(np.minimum(unclipped, clipped)))


def normalize_advantages(advantages: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    return (advantages - advantages.mean()) / (advantages.std() + eps)


@dataclass
class UpdateStats:
    policy_loss: float = 0.0
    value_loss: float = 0.0
    entropy: float = 0.0
    ratio_mean: float = 1.0
    clip_fraction: float = 0.0
    grad_norm: float = 0.0
    n_minibatches: int = 0
    aborted: bool = False
    abort_reason: str = ""


@dataclass
class _LossPieces:
    total: float
    policy_loss: float
    value_loss: float
    entropy: float
    ratios: np.ndarray
    logits: np.ndarray
    values: np.ndarray
    actor_cache: list
    critic_cache: list


def _minibatch_loss(
    params: PolicyParams,
    obs: np.ndarray,
    actions: np.ndarray,
    log_probs_old: np.ndarray,
    advantages: np.ndarray,
    returns: np.ndarray,
    config: TrainConfig,
) -> _LossPieces:
    logits, actor_cache = params.actor.forward(obs)
    values, critic_cache = params.critic.forward(obs)
    v = values[:, 0]
    if params.exploration_mode is ExplorationMode.BERNOULLI:
        log_probs_new = bernoulli_log_prob(logits, actions)
        entropy = float(np.mean(bernoulli_entropy(logits)))
    else:
        log_probs_new = gaussian_tanh_log_prob(actions, logits, params.log_std)
        entropy = float(np.sum(params.log_std + 0.5 * (1.0 + math.log(2.0 * math.pi))))
    ratios = ppo_ratio(log_probs_new, log_probs_old)
    policy_loss = clipped_policy_loss(ratios, advantages, config.clip_range)
    value_loss = float(np.mean((v - returns) ** 2))
    total = policy_loss + config.vf_coef * value_loss - config.ent_coef * entropy
    return _LossPieces(total, policy_loss, value_loss, entropy, ratios, logits, values,
                       actor_cache, critic_cache)


def ppo_total_loss(
    params: PolicyParams,
    obs: np.ndarray,
    actions: np.ndarray,
    log_probs_old: np.ndarray,
    advantages: np.ndarray,
    returns: np.ndarray,
    config: TrainConfig,
) -> float:
    """Scalar training loss of one minibatch (advantages as given)."""
    return _minibatch_loss(params, obs, actions, log_probs_old, advantages, returns, config).total


def _minibatch_grads(
    params: PolicyParams,
    pieces: _LossPieces,
    actions: np.ndarray,
    log_probs_old: np.ndarray,
    advantages: np.ndarray,
    returns: np.ndarray,
    config: TrainConfig,
) -> list[np.ndarray]:
    """Analytic gradient of the total loss wrt every trainable array."""
    b = len(advantages)
    ratios = pieces.ratios
    logits = pieces.logits
    eps = config.clip_range

    unclipped = ratios * advantages
    clipped = np.clip(ratios, 1.0 - eps, 1.0 + eps) * advantages
    # d(total)/d(log_prob_new): only where the unclipped branch attains the
    # min and the ratio exponent is inside the clamp window.
    log_diff = np.log(np.maximum(ratios, 1e-300))  # == clamped (new - old)
    active = (unclipped <= clipped) & (np.abs(log_diff) < RATIO_EXP_CLAMP)
    g_logprob = np.where(active, -ratios * advantages, 0.0) / b

    if params.exploration_mode is ExplorationMode.BERNOULLI:
        p = sigmoid(logits)
        d_logits = g_logprob[:, None] * (actions - p)
        if config.ent_coef != 0.0:
            # -ent_coef * mean(H); dH/dz = -z * p * (1 - p)
            d_logits += config.ent_coef * logits * p * (1.0 - p) / b
        log_std_grad = None
    else:
        std = np.exp(params.log_std)
        zscore = (actions - logits) / std
        d_logits = g_logprob[:, None] * (zscore / std)
        log_std_grad = (g_logprob[:, None] * (zscore * zscore - 1.0)).sum(axis=0)
        if config.ent_coef != 0.0:
            log_std_grad = log_std_grad - config.ent_coef * np.ones_like(log_std_grad)

    actor_grads = params.actor.backward(pieces.actor_cache, d_logits)

    v = pieces.values[:, 0]
    d_values = (config.vf_coef * 2.0 * (v - returns) / b)[:, None]
    critic_grads = params.critic.backward(pieces.critic_cache, d_values)

    grads = actor_grads + critic_grads
    if params.log_std is not None:
        grads = grads + [log_std_grad if log_std_grad is not None else np.zeros_like(params.log_std)]
    return grads


class PPOLearner:
    """Holds the optimizer state so moments persist across updates."""

    def __init__(self, params: PolicyParams, config: TrainConfig):
        self.params = params
        self.config = config
        shapes = [a.shape for a in params.trainable_arrays()]
        self.optimizer = Adam(shapes, lr=config.learning_rate)

    def update(self, buffer: RolloutBuffer, rng: np.random.Generator) -> UpdateStats:
        return _run_update(self.params, buffer, self.config, self.optimizer, rng)


def ppo_update(
    params: PolicyParams,
    buffer: RolloutBuffer,
    config: TrainConfig,
    optimizer: Optional[Adam] = None,
    rng: Optional[np.random.Generator] = None,
) -> tuple[PolicyParams, UpdateStats]:
    """One full update pass: n_epochs of shuffled minibatches.

    Returns the (mutated in place) params and aggregate statistics; on a
    non-finite loss the parameters and optimizer are rolled back to
    their pre-update snapshot and ``stats.aborted`` is set.
    """
    if optimizer is None:
        optimizer = Adam([a.shape for a in params.trainable_arrays()], lr=config.learning_rate)
    if rng is None:
        rng = np.random.default_rng(config.seed)
    stats = _run_update(params, buffer, config, optimizer, rng)
    return params, stats


def _run_update(
    params: PolicyParams,
    buffer: RolloutBuffer,
    config: TrainConfig,
    optimizer: Adam,
    rng: np.random.Generator,
) -> UpdateStats:
    if not buffer.full:
        raise ValueError(f"rollout buffer not full ({buffer.pos}/{buffer.n_steps})")
    advantages, returns = compute_gae(
        buffer.rewards, buffer.values, buffer.dones, buffer.bootstrap_value,
        config.gamma, config.gae_lambda,
    )

    param_snapshot = params.snapshot()
    opt_snapshot = ([m.copy() for m in optimizer.m], [v.copy() for v in optimizer.v], optimizer.t)

    sums = {"policy_loss": 0.0, "value_loss": 0.0, "entropy": 0.0,
            "ratio_mean": 0.0, "clip_fraction": 0.0, "grad_norm": 0.0}
    n_mb = 0
    n = buffer.n_steps
    for _ in range(config.n_epochs):
        perm = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = perm[start:start + config.batch_size]
            obs = buffer.observations[idx]
            acts = buffer.actions[idx]
            lp_old = buffer.log_probs[idx]
            adv = normalize_advantages(advantages[idx])
            ret = returns[idx]

            pieces = _minibatch_loss(params, obs, acts, lp_old, adv, ret, config)
            if not math.isfinite(pieces.total):
                params.restore(param_snapshot)
                optimizer.m = opt_snapshot[0]
                optimizer.v = opt_snapshot[1]
                optimizer.t = opt_snapshot[2]
                return UpdateStats(
                    aborted=True,
                    abort_reason=(
                        f"non-finite loss (policy={pieces.policy_loss!r}, "
                        f"value={pieces.value_loss!r}); parameters kept"
                    ),
                    n_minibatches=n_mb,
                )
            grads = _minibatch_grads(params, pieces, acts, lp_old, adv, ret, config)
            grads, norm = clip_by_global_norm(grads, config.max_grad_norm)
            optimizer.step(params.trainable_arrays(), grads)
            if params.log_std is not None:
                np.maximum(params.log_std, LOG_STD_MIN, out=params.log_std)

            sums["policy_loss"] += pieces.policy_loss
            sums["value_loss"] += pieces.value_loss
            sums["entropy"] += pieces.entropy
            sums["ratio_mean"] += float(np.mean(pieces.ratios))
            sums["clip_fraction"] += float(np.mean(np.abs(pieces.ratios - 1.0) > config.clip_range))
            sums["grad_norm"] += min(norm, config.max_grad_norm)
            n_mb += 1

    return UpdateStats(
        policy_loss=sums["policy_loss"] / n_mb,
        value_loss=sums["value_loss"] / n_mb,
        entropy=sums["entropy"] / n_mb,
        ratio_mean=sums["ratio_mean"] / n_mb,
        clip_fraction=sums["clip_fraction"] / n_mb,
        grad_norm=sums["grad_norm"] / n_mb,
        n_minibatches=n_mb,
    )
