"""A miniature training run, end to end.

Uses the deployment hyperparameters with two deviations sized for a
demo: a raised learning rate and a tiny timestep budget. Expect noisy
metrics, not a solved task; the full desk-scale experiment lives in the
acceptance suite (tests/test_acceptance.py) and the CLI:

    loader-rl train run.cfg --out runs/demo --total-timesteps 1000000
"""

from loader_rl import ApproachEnv, TrainConfig
from loader_rl.policy import ExplorationMode
from loader_rl.train import train

config = TrainConfig(
    total_timesteps=20_480,
    learning_rate=3e-4,
    exploration_mode=ExplorationMode.CONTINUOUS_THRESHOLD,
    seed=7,
    eval_every_updates=10,
    eval_episodes=5,
)

print("update | timestep | ep_reward | ep_len | entropy | clip_frac")
result = train(lambda: ApproachEnv(), config)
for row in result.metrics:
    print(
        f"{row['updates']:6d} | {row['timestep']:8d} | {row['ep_reward_mean']:9.3f} | "
        f"{row['ep_len_mean']:6.1f} | {row['entropy']:7.3f} | {row['clip_fraction']:.3f}"
    )

print(f"\ncollected {result.last.timesteps} timesteps, {len(result.metrics)} updates")
if result.best is not None:
    print(f"best checkpoint after eval: success/reward {result.best_eval}")
