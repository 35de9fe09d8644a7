"""Versioned single-file binary checkpoints.

Layout: 8-byte magic, little-endian u32 format version, u32 header
length, a JSON header (configs, digests, rng state, array manifest),
then the raw little-endian float64 array payload in manifest order.
Weights round-trip bit-exactly because they never leave binary form.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field

import numpy as np

from . import flatcfg
from .env import EnvConfig
from .nets import MLP
from .policy import ExplorationMode, ObsNormalizer, PolicyParams
from .ppo import TrainConfig
from .sim import VehicleParams

logger = logging.getLogger(__name__)

MAGIC = b"LOADERRL"
FORMAT_VERSION = 1


class CheckpointFormatError(Exception):
    """Corrupt, truncated, or wrong-version checkpoint data."""


@dataclass
class PolicyCheckpoint:
    params: PolicyParams
    train_config: TrainConfig
    env_config: EnvConfig
    vehicle_params: VehicleParams
    timesteps: int = 0
    rng_state: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    @property
    def env_digest(self) -> str:
        flat = {}
        flat.update({f"env.{k}": v for k, v in flatcfg.flatten(self.env_config).items()})
        flat.update({f"vehicle.{k}": v for k, v in flatcfg.flatten(self.vehicle_params).items()})
        return flatcfg.digest(flat)


def env_digest_of(env_config: EnvConfig, vehicle_params: VehicleParams) -> str:
    flat = {}
    flat.update({f"env.{k}": v for k, v in flatcfg.flatten(env_config).items()})
    flat.update({f"vehicle.{k}": v for k, v in flatcfg.flatten(vehicle_params).items()})
    return flatcfg.digest(flat)


def _collect_arrays(params: PolicyParams) -> dict[str, np.ndarray]:
    arrays: dict[str, np.ndarray] = {}
    for i, a in enumerate(params.actor.params):
        arrays[f"actor.{i}"] = a
    for i, a in enumerate(params.critic.params):
        arrays[f"critic.{i}"] = a
    if params.log_std is not None:
        arrays["log_std"] = params.log_std
    for name, a in params.obs_normalizer.state_arrays().items():
        arrays[f"norm.{name}"] = a
    return arrays


def save_checkpoint(ckpt: PolicyCheckpoint) -> bytes:
    arrays = _collect_arrays(ckpt.params)
    manifest = [[name, list(a.shape)] for name, a in arrays.items()]
    header = {
        "format_version": ckpt.format_version,
        "env_digest": ckpt.env_digest,
        "timesteps": ckpt.timesteps,
        "rng_state": ckpt.rng_state,
        "train_config": flatcfg.flatten(ckpt.train_config),
        "env_config": flatcfg.flatten(ckpt.env_config),
        "vehicle_params": flatcfg.flatten(ckpt.vehicle_params),
        "actor_sizes": ckpt.params.actor.sizes,
        "critic_sizes": ckpt.params.critic.sizes,
        "exploration_mode": ckpt.params.exploration_mode.value,
        "manifest": manifest,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode()
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<I", ckpt.format_version)
    blob += struct.pack("<I", len(header_bytes))
    blob += header_bytes
    for name, _ in manifest:
        blob += np.ascontiguousarray(arrays[name], dtype="<f8").tobytes()
    return bytes(blob)


def write_checkpoint(ckpt: PolicyCheckpoint, path) -> None:
    with open(path, "wb") as f:
        f.write(save_checkpoint(ckpt))


def load_checkpoint(data: bytes, expected_env_digest: str | None = None) -> PolicyCheckpoint:
    """Parse checkpoint bytes; any structural problem raises
    CheckpointFormatError. A mismatched expected env digest logs a
    warning but still loads (callers that need strictness compare
    digests themselves)."""
    if len(data) < len(MAGIC) + 8:
        raise CheckpointFormatError("truncated checkpoint: missing header")
    if data[: len(MAGIC)] != MAGIC:
        raise CheckpointFormatError("bad magic string; not a checkpoint file")
    offset = len(MAGIC)
    (version,) = struct.unpack_from("<I", data, offset)
    offset += 4
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(
            f"unsupported checkpoint format version {version} (expected {FORMAT_VERSION})"
        )
    (header_len,) = struct.unpack_from("<I", data, offset)
    offset += 4
    if len(data) < offset + header_len:
        raise CheckpointFormatError("truncated checkpoint: incomplete header")
    try:
        header = json.loads(data[offset : offset + header_len].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointFormatError(f"corrupt header: {e}") from e
    offset += header_len

    arrays: dict[str, np.ndarray] = {}
    for name, shape in header["manifest"]:
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if len(data) < offset + nbytes:
            raise CheckpointFormatError(f"truncated checkpoint: array {name!r} incomplete")
        arr = np.frombuffer(data[offset : offset + nbytes], dtype="<f8").astype(np.float64)
        arrays[name] = arr.reshape(shape)
        offset += nbytes
    if offset != len(data):
        raise CheckpointFormatError(f"{len(data) - offset} trailing bytes after arrays")

    train_config = flatcfg.unflatten(TrainConfig, header["train_config"])
    env_config = flatcfg.unflatten(EnvConfig, header["env_config"])
    vehicle_params = flatcfg.unflatten(VehicleParams, header["vehicle_params"])
    mode = ExplorationMode(header["exploration_mode"])

    rng_placeholder = np.random.default_rng(0)
    actor = MLP(header["actor_sizes"], rng_placeholder)
    critic = MLP(header["critic_sizes"], rng_placeholder)
    actor.set_params([arrays[f"actor.{i}"] for i in range(len(actor.params))])
    critic.set_params([arrays[f"critic.{i}"] for i in range(len(critic.params))])
    normalizer = ObsNormalizer.from_state_arrays(
        {"mean": arrays["norm.mean"], "m2": arrays["norm.m2"], "count": arrays["norm.count"]}
    )
    params = PolicyParams(
        actor=actor,
        critic=critic,
        obs_normalizer=normalizer,
        exploration_mode=mode,
        log_std=arrays.get("log_std"),
    )
    ckpt = PolicyCheckpoint(
        params=params,
        train_config=train_config,
        env_config=env_config,
        vehicle_params=vehicle_params,
        timesteps=int(header["timesteps"]),
        rng_state=header.get("rng_state", {}),
        format_version=version,
    )
    if header.get("env_digest") != ckpt.env_digest:
        raise CheckpointFormatError("stored env digest does not match stored configs")
    if expected_env_digest is not None and expected_env_digest != ckpt.env_digest:
        logger.warning(
            "checkpoint was trained against a different environment config "
            "(digest %s, expected %s)", ckpt.env_digest, expected_env_digest,
        )
    return ckpt


def read_checkpoint(path, expected_env_digest: str | None = None) -> PolicyCheckpoint:
    with open(path, "rb") as f:
        return load_checkpoint(f.read(), expected_env_digest)
