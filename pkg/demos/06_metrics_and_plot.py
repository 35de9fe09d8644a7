"""Metrics file and reward-curve rendering, library-side.

The same artifacts the CLI produces (metrics.csv with an embedded config
digest, a self-contained SVG of the reward curve) assembled through the
library API. Rendering is deterministic: the same metrics bytes always
produce the same SVG bytes.
"""

import tempfile
from pathlib import Path

from loader_rl import ApproachEnv, TrainConfig
from loader_rl.config import RunConfig
from loader_rl.plot import read_metrics_csv, render_reward_curve_svg
from loader_rl.policy import ExplorationMode
from loader_rl.train import train

run = RunConfig(seed=3)
out = Path(tempfile.mkdtemp(prefix="loader_rl_demo_"))

config = TrainConfig(
    total_timesteps=30_000, learning_rate=3e-4, seed=run.seed,
    exploration_mode=ExplorationMode.CONTINUOUS_THRESHOLD, control_interval=10,
    eval_every_updates=2, eval_episodes=5,
)
result = train(lambda: ApproachEnv(run.env, run.vehicle), config,
               out_dir=out, config_digest=run.digest)

metrics_path = out / "metrics.csv"
rows, digest = read_metrics_csv(str(metrics_path))
print(f"{metrics_path}: {len(rows)} update rows, config digest {digest}")
for row in rows:
    print(f"  timestep {row['timestep']:7.0f}  ep_reward_mean {row['ep_reward_mean']:8.3f}")

svg = render_reward_curve_svg(rows, digest)
svg_path = out / "reward.svg"
svg_path.write_text(svg)
print(f"\nwrote {svg_path} ({len(svg)} bytes)")
print("re-rendering is byte-identical:", render_reward_curve_svg(rows, digest) == svg)
if result.best_eval is not None:
    print(f"best checkpoint eval (success rate, mean reward): {result.best_eval}")
