"""Episodic approach-and-lift environment.

One episode: the loader starts at the origin with a random heading,
driving at cruise speed, boom at roughly half lift. A stopping point
sits a fixed distance straight ahead. The agent issues two binary
commands per step (brake, lift up) and earns shaped reward for closing
distance and raising the boom, +1 for stopping inside the vicinity at
low speed with the boom past the lift goal, and -1 for leaving the
valid range or running out the clock.

The observation gives the componentwise absolute offsets to the target,
so it is positive regardless of heading and does not distinguish being
short of the point from being past it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from .sim import BrakeModel, Controls, VehicleParams, VehicleState, step_vehicle

Action = Controls


class Outcome(Enum):
    RUNNING = "Running"
    SUCCESS = "Success"
    OUT_OF_RANGE = "OutOfRange"
    TIMEOUT = "Timeout"


class LiftTermMode(Enum):
    """Shape of the per-step lift reward term.

    GOAL_PROGRESS pays the decrease in distance-to-lift-goal, capped at
    the goal so post-goal lifting earns nothing. LITERAL evaluates
    ``prev_lift - goal_frac * curr_lift`` verbatim for comparison runs.
    """

    GOAL_PROGRESS = "goal_progress"
    LITERAL = "literal"


@dataclass(frozen=True)
class EnvConfig:
    target_distance: float = 5.0
    vicinity: float = 1.5
    speed_threshold: float = 0.1
    lift_goal_frac: float = 0.95
    out_of_range_radius: float = 10.0
    max_episode_time: float = 15.0
    time_penalty_tc: float = 1e-4
    # Default scale makes the total lift shaping over lift_start_mean ->
    # lift_goal_frac equal the total distance shaping over target_distance.
    lift_reward_scale: float = 5.0 / 0.45
    dt: float = 1.0 / 50.0
    lift_start_mean: float = 0.5
    lift_start_jitter: float = 0.03
    lift_term_mode: LiftTermMode = LiftTermMode.GOAL_PROGRESS
    pad_obs_to_5d: bool = False

    def __post_init__(self) -> None:
        if not (self.vicinity < self.target_distance < self.out_of_range_radius):
            raise ValueError("need vicinity < target_distance < out_of_range_radius")
        if self.speed_threshold <= 0.0:
            raise ValueError(f"speed_threshold must be > 0, got {self.speed_threshold}")
        if not (0.0 < self.lift_goal_frac < 1.0):
            raise ValueError(f"lift_goal_frac must be in (0, 1), got {self.lift_goal_frac}")
        if self.dt <= 0.0 or self.max_episode_time <= 0.0:
            raise ValueError("dt and max_episode_time must be > 0")
        if self.lift_start_jitter < 0.0:
            raise ValueError("lift_start_jitter must be >= 0")

    @property
    def obs_dim(self) -> int:
        return 5 if self.pad_obs_to_5d else 4


@dataclass(frozen=True)
class Observation:
    """Agent input: absolute target offsets, speed, normalized lift."""

    rel_x: float
    rel_y: float
    speed: float
    lift: float

    def to_array(self, pad_to_5d: bool = False) -> np.ndarray:
        if pad_to_5d:
            return np.array([self.rel_x, self.rel_y, self.speed, self.lift, 0.0])
        return np.array([self.rel_x, self.rel_y, self.speed, self.lift])


@dataclass(frozen=True)
class RewardBreakdown:
    progress_term: float
    lift_term: float
    time_term: float
    terminal_term: float
    total: float
    done: bool
    outcome: Outcome


@dataclass
class EnvState:
    vehicle: VehicleState
    target_x: float
    target_y: float
    start_x: float
    start_y: float
    step_count: int
    prev_distance: float
    prev_lift: float
    done: bool
    rng: np.random.Generator = field(repr=False)


def target_from_heading(start: tuple[float, float], heading: float, distance: float) -> tuple[float, float]:
    """Point ``distance`` metres straight ahead of ``start`` at ``heading``.

    Heading 0 faces +y; the x offset is ``distance * sin(heading)``.
    """
    if distance <= 0.0:
        raise ValueError(f"distance must be > 0, got {distance}")
    return (start[0] + distance * math.sin(heading), start[1] + distance * math.cos(heading))


def build_observation(env: EnvState) -> Observation:
    v = env.vehicle
    return Observation(
        rel_x=abs(env.target_x - v.x),
        rel_y=abs(env.target_y - v.y),
        speed=v.speed,
        lift=v.lift,
    )


def compute_reward(
    prev_distance: float,
    curr_distance: float,
    prev_lift: float,
    curr_lift: float,
    speed: float,
    step_count: int,
    out_of_range: bool,
    timed_out: bool,
    config: EnvConfig,
) -> RewardBreakdown:
    """Per-step reward with three mutually exclusive branches.

    (1) either failure flag: -1 and done; (2) inside the vicinity, below
    the speed threshold, boom past the lift goal: +1 and done; (3)
    otherwise shaped reward = distance progress + capped lift progress -
    time penalty. Terminal totals are exactly +-1 with shaping zeroed.
    """
    for name, v in (("prev_distance", prev_distance), ("curr_distance", curr_distance),
                    ("prev_lift", prev_lift), ("curr_lift", curr_lift), ("speed", speed)):
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v!r}")
    if step_count < 1:
        raise ValueError(f"step_count must be >= 1, got {step_count}")

    if out_of_range or timed_out:
        outcome = Outcome.OUT_OF_RANGE if out_of_range else Outcome.TIMEOUT
        return RewardBreakdown(0.0, 0.0, 0.0, -1.0, -1.0, True, outcome)

    if (
        curr_distance < config.vicinity
        and speed < config.speed_threshold
        and curr_lift > config.lift_goal_frac
    ):
        return RewardBreakdown(0.0, 0.0, 0.0, 1.0, 1.0, True, Outcome.SUCCESS)

    progress = prev_distance - curr_distance
    goal = config.lift_goal_frac
    if config.lift_term_mode is LiftTermMode.GOAL_PROGRESS:
        lift_term = config.lift_reward_scale * (min(curr_lift, goal) - min(prev_lift, goal))
    else:
        lift_term = prev_lift - goal * curr_lift
    time_term = -config.time_penalty_tc * step_count
    total = progress + lift_term + time_term
    return RewardBreakdown(progress, lift_term, time_term, 0.0, total, False, Outcome.RUNNING)


def reset(
    config: EnvConfig,
    seed: int,
    params: Optional[VehicleParams] = None,
    *,
    heading: Optional[float] = None,
) -> tuple[EnvState, Observation]:
    """Start a fresh episode.

    The heading is uniform over [0, 2pi) and the boom starts near half
    lift with a small uniform jitter; both draws come from ``seed`` so
    the same seed reproduces the episode exactly. ``heading`` overrides
    the random draw for controlled sweeps.
    """
    params = params or VehicleParams()
    rng = np.random.default_rng(seed)
    drawn_heading = float(rng.uniform(0.0, 2.0 * math.pi))
    if heading is None:
        heading = drawn_heading
    j = config.lift_start_jitter
    lift0 = float(config.lift_start_mean + rng.uniform(-j, j))
    vehicle = VehicleState(
        x=0.0, y=0.0, heading=heading, speed=params.cruise_speed, lift=lift0, elapsed=0.0
    )
    tx, ty = target_from_heading((0.0, 0.0), heading, config.target_distance)
    env = EnvState(
        vehicle=vehicle,
        target_x=tx,
        target_y=ty,
        start_x=0.0,
        start_y=0.0,
        step_count=0,
        prev_distance=config.target_distance,
        prev_lift=lift0,
        done=False,
        rng=rng,
    )
    return env, build_observation(env)


def step(
    env: EnvState,
    action: Controls,
    config: EnvConfig,
    params: Optional[VehicleParams] = None,
    *,
    brake_model: BrakeModel = BrakeModel.IDEAL,
    throttle_accel: float | None = None,
) -> tuple[EnvState, Observation, RewardBreakdown, bool]:
    """Apply one action and return (state', observation, reward, done).

    ``brake_model`` and ``throttle_accel`` exist for deployment
    emulation; plain training episodes use the defaults (ideal brake,
    cruise-speed snap).
    """
    if env.done:
        raise RuntimeError("cannot step a finished episode; reset first")
    params = params or VehicleParams()

    vehicle = step_vehicle(env.vehicle, action, config.dt, params, brake_model, throttle_accel)
    curr_distance = math.hypot(env.target_x - vehicle.x, env.target_y - vehicle.y)
    from_start = math.hypot(vehicle.x - env.start_x, vehicle.y - env.start_y)
    out_of_range = from_start > config.out_of_range_radius
    step_count = env.step_count + 1
    # nominal step_count * dt rather than the accumulated elapsed, so the
    # step at which the limit fires does not drift with float summation
    timed_out = step_count * config.dt >= config.max_episode_time

    breakdown = compute_reward(
        env.prev_distance,
        curr_distance,
        env.prev_lift,
        vehicle.lift,
        vehicle.speed,
        step_count,
        out_of_range,
        timed_out,
        config,
    )

    new_env = replace(
        env,
        vehicle=vehicle,
        step_count=step_count,
        prev_distance=curr_distance,
        prev_lift=vehicle.lift,
        done=breakdown.done,
    )
    return new_env, build_observation(new_env), breakdown, breakdown.done


class ApproachEnv:
    """Stateful wrapper over the functional reset/step API.

    Holds config and vehicle parameters; each instance owns exactly one
    episode at a time. Instances are independent, so many can run
    concurrently with separate seeds.
    """

    def __init__(self, config: Optional[EnvConfig] = None, params: Optional[VehicleParams] = None):
        self.config = config or EnvConfig()
        self.params = params or VehicleParams()
        self.state: Optional[EnvState] = None

    def reset(self, seed: int, *, heading: Optional[float] = None) -> Observation:
        self.state, obs = reset(self.config, seed, self.params, heading=heading)
        return obs

    def step(
        self,
        action: Controls,
        *,
        brake_model: BrakeModel = BrakeModel.IDEAL,
        throttle_accel: float | None = None,
    ) -> tuple[Observation, RewardBreakdown, bool]:
        if self.state is None:
            raise RuntimeError("call reset before step")
        self.state, obs, breakdown, done = step(
            self.state,
            action,
            self.config,
            self.params,
            brake_model=brake_model,
            throttle_accel=throttle_accel,
        )
        return obs, breakdown, done
