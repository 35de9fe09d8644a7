"""Walk through one environment episode and its reward anatomy.

The task: stop within 1.5 m of a point 5 m ahead at under 0.1 m/s with
the boom above 95% lift. Per step the agent earns the distance it
closed, a scaled (and capped) lift improvement, minus a growing time
penalty; termination pays exactly +1 or -1.
"""

from loader_rl import ApproachEnv, Controls, EnvConfig, max_reward_bound

env = ApproachEnv(EnvConfig())
obs = env.reset(seed=2024)
print(f"start: rel=({obs.rel_x:.2f}, {obs.rel_y:.2f}) m, speed {obs.speed} m/s, lift {obs.lift:.3f}")
print(f"reward ceiling for this config: {max_reward_bound(env.config):.2f}\n")

# hand-rolled plan: drive and lift, then brake hard at 1.1 m to go
print("  t     dist   lift  brake   r_progress  r_lift    r_time    total")
total = 0.0
done = False
while not done:
    distance = (obs.rel_x**2 + obs.rel_y**2) ** 0.5
    action = Controls(brake=int(distance <= 1.1), lift_up=int(obs.lift <= 0.95))
    obs, rb, done = env.step(action)
    total += rb.total
    step = env.state.step_count
    if step % 25 == 0 or done:
        print(
            f" {env.state.vehicle.elapsed:5.2f}  {env.state.prev_distance:5.2f}  "
            f"{obs.lift:.3f}    {action.brake}     {rb.progress_term:+8.4f}  "
            f"{rb.lift_term:+8.4f}  {rb.time_term:+8.4f}  {rb.total:+8.4f}"
        )
print(f"\noutcome: {rb.outcome.value}, accumulated reward {total:.3f}")

print("\n== the three reward branches ==")
from loader_rl import compute_reward

print("out of range:", compute_reward(5.0, 5.2, 0.5, 0.5, 2.0, 100, True, False, env.config).total)
print("success:     ", compute_reward(1.3, 1.2, 0.96, 0.96, 0.05, 100, False, False, env.config).total)
print("shaping:     ", round(compute_reward(5.0, 4.96, 0.5, 0.515, 2.0, 1, False, False, env.config).total, 5))
