"""Wheel-loader approach-task RL toolkit.

Simulate the straight-line approach-and-lift task, train a two-head
binary policy on it with clipped-surrogate policy optimization, check
it against a scripted oracle, and stress-test it under deployment
conditions (sensor delay, decimated control rate, PID throttle,
tapered braking).
"""

from .env import (
    Action,
    ApproachEnv,
    EnvConfig,
    EnvState,
    LiftTermMode,
    Observation,
    Outcome,
    RewardBreakdown,
    build_observation,
    compute_reward,
    reset,
    step,
    target_from_heading,
)
from .sim import (
    BrakeModel,
    Controls,
    TaperParams,
    VehicleParams,
    VehicleState,
    step_vehicle,
    tapered_brake_decel,
)
from .oracle import (
    LatchedBrakePolicy,
    OracleConfig,
    max_reward_bound,
    reward_oracle,
    scripted_policy,
)
from .policy import (
    ExplorationMode,
    ObsNormalizer,
    PolicyParams,
    greedy_action,
    init_policy,
    policy_forward,
    sample_action,
)
from .ppo import (
    RolloutBuffer,
    TrainConfig,
    UpdateStats,
    clipped_policy_loss,
    compute_gae,
    ppo_ratio,
    ppo_update,
)
from .checkpoint import (
    CheckpointFormatError,
    PolicyCheckpoint,
    load_checkpoint,
    read_checkpoint,
    save_checkpoint,
    write_checkpoint,
)
from .emulator import (
    DelayBuffer,
    EmulationConfig,
    PidGains,
    PidState,
    delayed_position,
    pid_throttle,
    run_emulated_episode,
    utm_relative_observation,
)
from .evaluate import EvalReport, evaluate_policy, greedy_policy_fn, run_episode
from .train import TrainResult, train
from .config import ConfigError, RunConfig, load_run_config
from .trace import EpisodeTrace, read_trace_csv, write_trace_csv

__version__ = "0.1.0"
