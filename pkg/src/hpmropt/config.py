"""Layered run configuration.

Defaults come from the packaged ``default_config.yaml``; a user file is
deep-merged on top, then command-line overrides. The merged document is
hashed (canonical JSON, SHA-256) so every output can record exactly what
produced it.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .design import ReactorConstants
from .econ import CostDatabase, FinanceAssumptions
from .rl.reward import ConstraintSpec
from .rl.train import TrainConfig
from .rom import RomConfig
from .surrogate.mlp import MLPConfig
from .surrogate.twostage import SurrogateConfig

MODES = ("be", "graphite")
SAMPLING_METHODS = ("uniform", "lhs")


class ConfigError(ValueError):
    pass


def default_document() -> dict:
    text = resources.files("hpmropt").joinpath("data/default_config.yaml").read_text()
    return yaml.safe_load(text)


def deep_merge(base: dict, over: dict, path: str = "") -> dict:
    """Recursive merge; unknown keys are rejected except in free-form sections."""
    out = copy.deepcopy(base)
    for key, value in (over or {}).items():
        where = f"{path}{key}"
        if key not in out and path.split(".")[0] not in _FREE_SECTIONS:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value, where + ".")
        else:
            out[key] = copy.deepcopy(value)
    return out


# sections whose keys are validated by the typed constructors instead
_FREE_SECTIONS = ("constants", "rom", "costs", "finance")


# keys that change where or how fast a run executes but not what it computes
EXECUTION_KEYS = ("out", "workers")


def config_hash(doc: dict) -> str:
    """SHA-256 of the canonical JSON document, execution-only keys excluded."""
    doc = {k: v for k, v in doc.items() if k not in EXECUTION_KEYS}
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode()).hexdigest()


@dataclass(frozen=True)
class RunConfig:
    doc: dict
    source: str | None = None  # user config path, if any

    # ------------------------------------------------------------ loading
    @classmethod
    def load(cls, path=None, overrides: dict | None = None) -> "RunConfig":
        doc = default_document()
        if path is not None:
            p = Path(path)
            if not p.is_file():
                raise ConfigError(f"config file not found: {p}")
            user = yaml.safe_load(p.read_text()) or {}
            if not isinstance(user, dict):
                raise ConfigError(f"config file {p} must hold a mapping")
            doc = deep_merge(doc, user)
        doc = deep_merge(doc, overrides or {})
        cfg = cls(doc, None if path is None else str(path))
        cfg.validate()
        return cfg

    def validate(self) -> None:
        d = self.doc
        if d["mode"] not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {d['mode']!r}")
        if d["sampling"]["method"] not in SAMPLING_METHODS:
            raise ConfigError(f"sampling.method must be one of {SAMPLING_METHODS}")
        for key in ("seed", "workers"):
            if not isinstance(d[key], int) or d[key] < 0:
                raise ConfigError(f"{key} must be a non-negative integer")
        if d["workers"] < 1:
            raise ConfigError("workers must be at least 1")
        for section in ("sampling", "optimize", "baseline"):
            b = d[section]["budget"]
            if not isinstance(b, int) or b < 0:
                raise ConfigError(f"{section}.budget must be a non-negative integer")
        cap = d["lcoe_cap"]
        if cap != "auto" and not (isinstance(cap, (int, float)) and cap > 0):
            raise ConfigError("lcoe_cap must be 'auto' or a positive number")
        for key, p in d["paths"].items():
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"paths.{key} does not exist: {p}")
        # typed sections raise on unknown or invalid entries
        try:
            self.constants(), self.rom(), self.costs(), self.finance(), self.spec()
            self.surrogate(), self.train()
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc

    # ------------------------------------------------------------ views
    @property
    def hash(self) -> str:
        return config_hash(self.doc)

    @property
    def seed(self) -> int:
        return int(self.doc["seed"])

    @property
    def mode(self) -> str:
        return self.doc["mode"]

    @property
    def workers(self) -> int:
        return int(self.doc["workers"])

    def __getitem__(self, key):
        return self.doc[key]

    def constants(self) -> ReactorConstants:
        return ReactorConstants.from_dict(self.doc["constants"])

    def rom(self) -> RomConfig:
        return RomConfig.from_dict(self.doc["rom"])

    def costs(self) -> CostDatabase:
        return CostDatabase.from_dict(self.doc["costs"]).for_mode(self.mode)

    def finance(self) -> FinanceAssumptions:
        return FinanceAssumptions.from_dict(self.doc["finance"])

    def spec(self) -> ConstraintSpec:
        return ConstraintSpec.from_dict(self.doc["constraints"])

    def surrogate(self) -> SurrogateConfig:
        s = dict(self.doc["surrogate"])
        for key in ("cv_folds", "min_rows"):
            s.pop(key)
        mlp = {**s.pop("mlp"), "seed": self.seed}
        return SurrogateConfig(mlp=MLPConfig.from_dict(mlp), seed=self.seed, workers=self.workers, **s)

    def train(self) -> TrainConfig:
        o = dict(self.doc["optimize"])
        o["total_samples"] = o.pop("budget")
        return TrainConfig.from_dict({**o, "seed": self.seed, "threads": self.workers})

    def with_overrides(self, overrides: dict) -> "RunConfig":
        cfg = RunConfig(deep_merge(self.doc, overrides), self.source)
        cfg.validate()
        return cfg

    def dump(self) -> str:
        return yaml.safe_dump(self.doc, sort_keys=True)
