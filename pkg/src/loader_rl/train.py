"""Training loop: alternate rollout collection and policy updates.

Single environment, fully seeded. Episode resets, action sampling,
minibatch shuffling and evaluation each draw from their own named
sub-stream of the master seed, so two runs with the same config produce
byte-identical metrics. A rolling window of finished episodes feeds the
per-update metrics row; a periodic greedy evaluation picks the
best-so-far checkpoint (success rate first, mean reward as tiebreak),
which is kept even if training later collapses.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .checkpoint import PolicyCheckpoint, write_checkpoint
from .env import ApproachEnv, Outcome
from .policy import ExplorationMode, ThresholdSampler, init_policy, sample_action
from .ppo import PPOLearner, RolloutBuffer, TrainConfig, UpdateStats
from .evaluate import evaluate_policy, greedy_policy_fn
from .seeding import substream, substream_seed

logger = logging.getLogger(__name__)

METRICS_COLUMNS = [
    "timestep", "updates", "ep_reward_mean", "ep_len_mean", "success_rate",
    "policy_loss", "value_loss", "entropy", "clip_fraction", "ratio_mean",
]

EPISODE_WINDOW = 20


def format_metrics_row(row: dict) -> str:
    cells = []
    for c in METRICS_COLUMNS:
        v = row[c]
        cells.append(str(v) if isinstance(v, int) else repr(float(v)))
    return ",".join(cells)


@dataclass
class TrainResult:
    last: PolicyCheckpoint
    best: Optional[PolicyCheckpoint]
    metrics: list[dict]
    best_eval: Optional[tuple[float, float]] = None  # (success_rate, reward_mean)


@dataclass
class _EpisodeWindow:
    rewards: list[float] = field(default_factory=list)
    lengths: list[int] = field(default_factory=list)
    successes: list[bool] = field(default_factory=list)

    def push(self, reward: float, length: int, success: bool) -> None:
        self.rewards.append(reward)
        self.lengths.append(length)
        self.successes.append(success)
        if len(self.rewards) > EPISODE_WINDOW:
            self.rewards.pop(0)
            self.lengths.pop(0)
            self.successes.pop(0)

    def stats(self) -> tuple[float, float, float]:
        if not self.rewards:
            return float("nan"), float("nan"), float("nan")
        n = len(self.rewards)
        return (
            sum(self.rewards) / n,
            sum(self.lengths) / n,
            sum(self.successes) / n,
        )


def _snapshot_checkpoint(
    params, config: TrainConfig, env: ApproachEnv, timesteps: int, extra_rng: dict
) -> PolicyCheckpoint:
    from copy import deepcopy

    return PolicyCheckpoint(
        params=deepcopy(params),
        train_config=config,
        env_config=env.config,
        vehicle_params=env.params,
        timesteps=timesteps,
        rng_state=extra_rng,
    )


def train(
    env_factory: Callable[[], ApproachEnv],
    config: TrainConfig,
    *,
    out_dir: Optional[Path] = None,
    config_digest: str = "",
    stop_when: Optional[Callable[[TrainResult], bool]] = None,
) -> TrainResult:
    """Run PPO until ``config.total_timesteps`` environment steps.

    With ``out_dir`` set, writes metrics.csv incrementally plus periodic,
    best and last checkpoints. ``stop_when`` is consulted after each
    evaluation round for early stopping (used by experiment drivers).
    If the environment raises, the last checkpoint is persisted before
    the error propagates.
    """
    if config.n_envs != 1:
        raise ValueError("only n_envs=1 rollout collection is implemented")
    env = env_factory()
    obs_dim = env.config.obs_dim
    master = config.seed

    params = init_policy(obs_dim, substream(master, "policy_init"), config.exploration_mode)
    learner = PPOLearner(params, config)
    sampling_rng = substream(master, "sampling")
    shuffle_rng = substream(master, "shuffle")
    sampler = ThresholdSampler(config.noise_resample_every)

    buffer = RolloutBuffer(config.n_steps, obs_dim)
    window = _EpisodeWindow()
    metrics: list[dict] = []
    metrics_file = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        metrics_file = open(out_dir / "metrics.csv", "w")
        metrics_file.write(f"# config_digest={config_digest}\n")
        metrics_file.write(",".join(METRICS_COLUMNS) + "\n")

    episode_index = 0
    obs = env.reset(substream_seed(master, "env", episode_index))
    ep_reward, ep_len = 0.0, 0
    timesteps = 0
    updates = 0
    best: Optional[PolicyCheckpoint] = None
    best_key: Optional[tuple[float, float]] = None
    result = TrainResult(last=None, best=None, metrics=metrics)  # type: ignore[arg-type]

    def make_ckpt() -> PolicyCheckpoint:
        return _snapshot_checkpoint(
            params, config, env,
            timesteps,
            {"episode_index": episode_index, "updates": updates},
        )

    try:
        while timesteps < config.total_timesteps:
            buffer.reset()
            for _ in range(config.n_steps):
                raw = obs.to_array(pad_to_5d=obs_dim == 5)
                params.obs_normalizer.update(raw)
                xn = params.obs_normalizer.normalize(raw)
                logits = params.actor(xn)
                value = float(params.critic(xn)[0])
                if config.exploration_mode is ExplorationMode.BERNOULLI:
                    action, log_prob = sample_action(logits, sampling_rng)
                    stored = np.array([float(action.brake), float(action.lift_up)])
                else:
                    action, log_prob, u = sampler.sample(logits, params.log_std, sampling_rng)
                    stored = u
                # one buffer entry per decision; the action is held for
                # control_interval plant steps with rewards summed
                reward_sum = 0.0
                done = False
                for _ in range(config.control_interval):
                    obs_next, breakdown, done = env.step(action)
                    reward_sum += breakdown.total
                    ep_reward += breakdown.total
                    ep_len += 1
                    timesteps += 1
                    if done:
                        break
                buffer.add(xn, stored, log_prob, value, reward_sum, done)
                if done:
                    window.push(ep_reward, ep_len, breakdown.outcome is Outcome.SUCCESS)
                    episode_index += 1
                    obs = env.reset(substream_seed(master, "env", episode_index))
                    ep_reward, ep_len = 0.0, 0
                else:
                    obs = obs_next

            raw = obs.to_array(pad_to_5d=obs_dim == 5)
            xn = params.obs_normalizer.normalize(raw)
            buffer.bootstrap_value = float(params.critic(xn)[0])

            stats = learner.update(buffer, shuffle_rng)
            updates += 1
            if stats.aborted:
                logger.warning("update %d aborted: %s", updates, stats.abort_reason)
            _append_metrics(metrics, metrics_file, timesteps, updates, window, stats)

            if updates % config.eval_every_updates == 0:
                report = evaluate_policy(
                    env_factory(), greedy_policy_fn(params), config.eval_episodes,
                    substream_seed(master, "eval", updates),
                    decision_interval=config.control_interval,
                )
                # rank by the non-degenerate-heading bucket: that is the
                # statistic evaluation reports, and the degenerate slice of a
                # 20-episode probe is too small to be informative
                bucket = report.main if report.main.n > 0 else report.overall
                key = (bucket.success_rate, bucket.reward_mean)
                if best_key is None or key > best_key:
                    best_key = key
                    best = make_ckpt()
                    if out_dir is not None:
                        write_checkpoint(best, out_dir / "best.ckpt")
                result = TrainResult(last=make_ckpt(), best=best, metrics=metrics, best_eval=best_key)
                if stop_when is not None and stop_when(result):
                    logger.info("early stop requested at %d timesteps", timesteps)
                    break

            if out_dir is not None and updates % config.checkpoint_every_updates == 0:
                write_checkpoint(make_ckpt(), out_dir / f"ckpt_{timesteps:010d}.ckpt")
    except Exception:
        if out_dir is not None:
            write_checkpoint(make_ckpt(), out_dir / "last.ckpt")
        raise
    finally:
        if metrics_file is not None:
            metrics_file.close()

    last = make_ckpt()
    if out_dir is not None:
        write_checkpoint(last, out_dir / "last.ckpt")
        if best is not None:
            write_checkpoint(best, out_dir / "best.ckpt")
    return TrainResult(last=last, best=best, metrics=metrics, best_eval=best_key)


def _append_metrics(metrics, metrics_file, timesteps, updates, window, stats: UpdateStats) -> None:
    r_mean, l_mean, s_rate = window.stats()
    row = {
        "timestep": timesteps,
        "updates": updates,
        "ep_reward_mean": r_mean,
        "ep_len_mean": l_mean,
        "success_rate": s_rate,
        "policy_loss": stats.policy_loss,
        "value_loss": stats.value_loss,
        "entropy": stats.entropy,
        "clip_fraction": stats.clip_fraction,
        "ratio_mean": stats.ratio_mean,
    }
    metrics.append(row)
    if metrics_file is not None:
        metrics_file.write(format_metrics_row(row) + "\n")
        metrics_file.flush()
