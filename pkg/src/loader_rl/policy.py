"""Actor-critic policy over the 4-element observation.

Two exploration modes share the same actor body:

* bernoulli (default): the two outputs are logits of independent
  Bernoulli heads, one per binary command.
* continuous-threshold: the two outputs are means of a diagonal
  Gaussian with a learned state-independent log-std; samples are
  tanh-squashed and thresholded at zero into binaries, with the
  exploration noise held for a fixed number of steps between resamples.

Observations are normalized by running mean/variance before entering
either network; the statistics update only while collecting rollouts
and travel with the parameters in checkpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .env import Observation
from .nets import MLP
from .sim import Controls

HIDDEN = 64
N_ACTIONS = 2
LOG2PI = math.log(2.0 * math.pi)
# Floor for the learned exploration log-std in continuous-threshold mode.
# With nothing opposing it (entropy bonus defaults to zero) the std
# otherwise collapses and exploration dies long before the brake-to-stop
# behaviour is reliably discovered; thresholded decisions follow the mean
# sign, so a small noise floor does not disturb converged behaviour.
LOG_STD_MIN = -2.0


class ExplorationMode(Enum):
    BERNOULLI = "bernoulli"
    CONTINUOUS_THRESHOLD = "continuous_threshold"


class ObsNormalizer:
    """Running per-element mean/variance (Welford), with a variance floor."""

    def __init__(self, dim: int, eps: float = 1e-8, clip: float = 10.0):
        self.dim = dim
        self.eps = eps
        self.clip = clip
        self.count = 0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros(dim)

    def update(self, x: np.ndarray) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + delta * (x - self.mean)

    @property
    def var(self) -> np.ndarray:
        if self.count < 2:
            return np.ones(self.dim)
        return self.m2 / self.count

    def normalize(self, x: np.ndarray) -> np.ndarray:
        z = (x - self.mean) / np.sqrt(self.var + self.eps)
        return np.clip(z, -self.clip, self.clip)

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {
            "mean": self.mean.copy(),
            "m2": self.m2.copy(),
            "count": np.array([float(self.count)]),
        }

    @classmethod
    def from_state_arrays(cls, arrays: dict[str, np.ndarray], eps: float = 1e-8, clip: float = 10.0) -> "ObsNormalizer":
        norm = cls(dim=len(arrays["mean"]), eps=eps, clip=clip)
        norm.mean = np.asarray(arrays["mean"], dtype=np.float64).copy()
        norm.m2 = np.asarray(arrays["m2"], dtype=np.float64).copy()
        norm.count = int(arrays["count"][0])
        return norm


@dataclass
class PolicyParams:
    """Actor and critic networks plus observation statistics.

    ``log_std`` is only present in continuous-threshold mode.
    """

    actor: MLP
    critic: MLP
    obs_normalizer: ObsNormalizer
    exploration_mode: ExplorationMode = ExplorationMode.BERNOULLI
    log_std: np.ndarray | None = None

    @property
    def obs_dim(self) -> int:
        return self.actor.sizes[0]

    def trainable_arrays(self) -> list[np.ndarray]:
        arrays = self.actor.params + self.critic.params
        if self.log_std is not None:
            arrays = arrays + [self.log_std]
        return arrays

    def snapshot(self) -> list[np.ndarray]:
        return [a.copy() for a in self.trainable_arrays()]

    def restore(self, snap: list[np.ndarray]) -> None:
        for dst, src in zip(self.trainable_arrays(), snap):
            dst[...] = src


def init_policy(
    obs_dim: int,
    rng: np.random.Generator,
    mode: ExplorationMode = ExplorationMode.BERNOULLI,
) -> PolicyParams:
    """Fresh seeded parameters: orthogonal layers, small final actor gain
    so initial action probabilities sit near 0.5."""
    actor = MLP([obs_dim, HIDDEN, HIDDEN, N_ACTIONS], rng, final_gain=0.01)
    critic = MLP([obs_dim, HIDDEN, HIDDEN, 1], rng, final_gain=1.0)
    log_std = np.zeros(N_ACTIONS) if mode is ExplorationMode.CONTINUOUS_THRESHOLD else None
    return PolicyParams(
        actor=actor,
        critic=critic,
        obs_normalizer=ObsNormalizer(obs_dim),
        exploration_mode=mode,
        log_std=log_std,
    )


def _as_obs_array(obs, dim: int) -> np.ndarray:
    if isinstance(obs, Observation):
        x = obs.to_array(pad_to_5d=dim == 5)
    else:
        x = np.asarray(obs, dtype=np.float64)
    if x.shape != (dim,):
        raise ValueError(f"observation shape {x.shape} does not match policy input ({dim},)")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"observation has non-finite values: {x}")
    return x


def policy_forward(params: PolicyParams, obs) -> tuple[np.ndarray, float]:
    """Normalized forward pass: (two action logits/means, value estimate).

    Pure: the normalizer statistics are used but not updated.
    """
    x = _as_obs_array(obs, params.obs_dim)
    xn = params.obs_normalizer.normalize(x)
    logits = params.actor(xn)
    value = float(params.critic(xn)[0])
    return logits, value


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


def log_sigmoid(z: np.ndarray) -> np.ndarray:
    # -softplus(-z), stable for large |z|
    return -np.logaddexp(0.0, -z)


def bernoulli_log_prob(logits: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """Sum over the two heads of log P(action); supports batches."""
    logits = np.asarray(logits, dtype=np.float64)
    actions = np.asarray(actions, dtype=np.float64)
    lp = actions * log_sigmoid(logits) + (1.0 - actions) * log_sigmoid(-logits)
    return lp.sum(axis=-1)


def bernoulli_entropy(logits: np.ndarray) -> np.ndarray:
    """Entropy of the two-head Bernoulli distribution, summed over heads."""
    logits = np.asarray(logits, dtype=np.float64)
    p = sigmoid(logits)
    h = np.logaddexp(0.0, logits) - logits * p  # softplus(z) - z*sigmoid(z)
    return h.sum(axis=-1)


def sample_action(logits: np.ndarray, rng: np.random.Generator) -> tuple[Controls, float]:
    """Draw the two binary commands independently from their heads."""
    if not np.all(np.isfinite(logits)):
        raise ValueError(f"non-finite logits: {logits}")
    p = sigmoid(np.asarray(logits, dtype=np.float64))
    u = rng.random(N_ACTIONS)
    a = (u < p).astype(np.float64)
    log_prob = float(bernoulli_log_prob(logits, a))
    return Controls(brake=int(a[0]), lift_up=int(a[1])), log_prob


def greedy_action(logits: np.ndarray) -> Controls:
    """Most likely action: a head fires iff its logit is positive."""
    return Controls(brake=int(logits[0] > 0.0), lift_up=int(logits[1] > 0.0))


class ThresholdSampler:
    """Continuous-threshold exploration with periodically held noise.

    Keeps the standard-normal noise vector fixed for
    ``resample_every`` decisions, mimicking state-dependent-exploration
    style smoothness; the pre-squash sample is what the optimizer sees.
    """

    def __init__(self, resample_every: int = 4):
        self.resample_every = max(1, int(resample_every))
        self._noise: np.ndarray | None = None
        self._age = 0

    def reset(self) -> None:
        self._noise = None
        self._age = 0

    def sample(
        self, mean: np.ndarray, log_std: np.ndarray, rng: np.random.Generator
    ) -> tuple[Controls, float, np.ndarray]:
        """Returns (binary action, log_prob, pre-squash sample u)."""
        if self._noise is None or self._age >= self.resample_every:
            self._noise = rng.standard_normal(N_ACTIONS)
            self._age = 0
        self._age += 1
        std = np.exp(log_std)
        u = mean + std * self._noise
        log_prob = float(gaussian_tanh_log_prob(u, mean, log_std))
        squashed = np.tanh(u)
        return Controls(brake=int(squashed[0] > 0.0), lift_up=int(squashed[1] > 0.0)), log_prob, u


def gaussian_tanh_log_prob(u: np.ndarray, mean: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    """log-density of pre-squash sample u under N(mean, std), with the
    tanh change-of-variables correction; sums over action dims."""
    u = np.asarray(u, dtype=np.float64)
    std = np.exp(log_std)
    z = (u - mean) / std
    base = -0.5 * z * z - log_std - 0.5 * LOG2PI
    corr = np.log1p(-np.tanh(u) ** 2 + 1e-12)
    return (base - corr).sum(axis=-1)


def threshold_greedy_action(mean: np.ndarray) -> Controls:
    return Controls(brake=int(math.tanh(mean[0]) > 0.0), lift_up=int(math.tanh(mean[1]) > 0.0))
