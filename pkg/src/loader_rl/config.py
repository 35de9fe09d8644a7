"""Run configuration: one flat key=value file drives every command.

Keys use dotted section prefixes (``env.vicinity=1.5``); ``#`` starts a
comment. Parsing reports the offending line number for unknown keys and
bad values. A run needs a seed, either in the file or from the command
line. The digest of the fully merged configuration is embedded in every
artifact a command writes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import flatcfg
from .emulator import EmulationConfig
from .env import EnvConfig
from .ppo import TrainConfig
from .sim import VehicleParams


class ConfigError(Exception):
    """Invalid configuration file or values."""


_SECTIONS = {
    "env": EnvConfig,
    "vehicle": VehicleParams,
    "train": TrainConfig,
    "emulation": EmulationConfig,
}


@dataclass
class RunConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    train: TrainConfig = field(default_factory=TrainConfig)
    emulation: EmulationConfig = field(default_factory=EmulationConfig)
    seed: int = 0

    def flat(self) -> dict[str, str]:
        out = {"seed": str(self.seed)}
        for section, value in (("env", self.env), ("vehicle", self.vehicle),
                               ("train", self.train), ("emulation", self.emulation)):
            out.update({f"{section}.{k}": v for k, v in flatcfg.flatten(value).items()})
        return out

    @property
    def digest(self) -> str:
        return flatcfg.digest(self.flat())

    @property
    def env_digest(self) -> str:
        flat = {k: v for k, v in self.flat().items() if k.startswith(("env.", "vehicle."))}
        return flatcfg.digest(flat)

    def to_text(self) -> str:
        return flatcfg.canonical_lines(self.flat())


def _known_keys() -> dict[str, object]:
    keys: dict[str, object] = {"seed": int}
    for section, cls in _SECTIONS.items():
        for key, typ in flatcfg.field_types(cls).items():
            keys[f"{section}.{key}"] = typ
    return keys


def parse_config_text(text: str, source: str = "<config>") -> dict[str, tuple[str, int]]:
    """key -> (raw value, line number); raises ConfigError with the line
    number of anything malformed or unknown."""
    known = _known_keys()
    out: dict[str, tuple[str, int]] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw_line.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in known:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} (first at line {out[key][1]})")
        out[key] = (value, lineno)
    return out


def build_run_config(
    entries: dict[str, tuple[str, int]],
    overrides: dict[str, str] | None = None,
    source: str = "<config>",
    require_seed: bool = True,
) -> RunConfig:
    """Assemble a RunConfig from parsed entries plus CLI overrides.

    Overrides use the same dotted keys and win over the file. A missing
    seed is an error unless ``require_seed`` is false.
    """
    known = _known_keys()
    flat: dict[str, str] = {k: v for k, (v, _) in entries.items()}
    lines: dict[str, int] = {k: n for k, (_, n) in entries.items()}
    for key, value in (overrides or {}).items():
        if key not in known:
            raise ConfigError(f"unknown override key {key!r}")
        flat[key] = value
        lines.pop(key, None)

    if require_seed and "seed" not in flat:
        raise ConfigError(f"{source}: missing required key 'seed' (set it in the file or pass --seed)")

    def fail(key: str, err: Exception) -> ConfigError:
        where = f"{source}:{lines[key]}: " if key in lines else ""
        return ConfigError(f"{where}invalid value for {key!r}: {err}")

    seed = 0
    if "seed" in flat:
        try:
            seed = flatcfg.decode_value(flat["seed"], int)
        except (TypeError, ValueError) as e:
            raise fail("seed", e) from e

    sections = {}
    for section, cls in _SECTIONS.items():
        types = flatcfg.field_types(cls)
        sub = {k[len(section) + 1:]: v for k, v in flat.items() if k.startswith(section + ".")}
        for k, v in sub.items():
            try:
                flatcfg.decode_value(v, types[k])
            except (TypeError, ValueError) as e:
                raise fail(f"{section}.{k}", e) from e
        try:
            sections[section] = flatcfg.unflatten(cls, sub)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{source}: invalid {section} configuration: {e}") from e
    return RunConfig(
        env=sections["env"],
        vehicle=sections["vehicle"],
        train=sections["train"],
        emulation=sections["emulation"],
        seed=seed,
    )


def load_run_config(
    path: str | None,
    overrides: dict[str, str] | None = None,
    require_seed: bool = True,
) -> RunConfig:
    if path is None:
        return build_run_config({}, overrides, require_seed=require_seed)
    with open(path) as f:
        text = f.read()
    entries = parse_config_text(text, source=str(path))
    return build_run_config(entries, overrides, source=str(path), require_seed=require_seed)
