"""JSON experiment configuration.

Complex numbers are written as ``[real, imag]`` pairs. The scene is given
either as ``{"reflection_gain": [re, im]}`` or as
``{"ref_power": .., "range_m": .., "rcs": [re, im]}``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .array import ArrayConfig, SceneConfig
from .fim import RunConfig
from .prior import GaussianMixturePrior, default_prior

EXPERIMENTS = ("power-pattern", "pcrb-vs-snr", "mse-validation", "property-suite")

DEFAULT_PROPERTY_TRIALS = {
    "moment_gap": 10_000,
    "bound_chain": 200,
    "rank_one_dominance": 10_000,
    "schur_vs_inversion": 500,
    "prior_fisher_decomposition": 200,
    "moment_convergence": 1,
}


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(watts) + 30.0


def _complex(value, where):
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(f"{where}: expected a number or a [real, imag] pair, got {value!r}")


def _pair(z):
    return [z.real, z.imag]


@dataclass(frozen=True)
class AngleGrid:
    start: float = 0.0
    stop: float = math.pi
    num: int = 1001

    def angles(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.num)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "pcrb-vs-snr"
    array: ArrayConfig = field(default_factory=ArrayConfig)
    prior: GaussianMixturePrior = field(default_factory=default_prior)
    scene: dict = field(default_factory=lambda: {"ref_power": 0.01, "range_m": 1.0, "rcs": [1.0, 0.0]})
    power_dbm: float = 30.0
    noise_dbm: float = -120.0
    num_samples: int = 25
    angle_grid: AngleGrid = field(default_factory=AngleGrid)
    snr_db: tuple = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    trials: int = 1000
    seed: int = 2024
    property_trials: dict = field(default_factory=lambda: dict(DEFAULT_PROPERTY_TRIALS))

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment: must be one of {EXPERIMENTS}, got {self.experiment!r}")
        for name in ("power_dbm", "noise_dbm"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name}: must be finite")
        if not self.snr_db or not all(math.isfinite(s) for s in self.snr_db):
            raise ConfigError("snr_db: must be a non-empty list of finite values")
        if self.trials < 100:
            raise ConfigError("trials: at least 100 Monte Carlo trials are required")
        unknown = set(self.property_trials) - set(DEFAULT_PROPERTY_TRIALS)
        if unknown:
            raise ConfigError(f"property_trials: unknown properties {sorted(unknown)}")
        # surface scene problems at parse time
        self.scene_config()
        self.run_config()

    @property
    def power_w(self) -> float:
        return dbm_to_watts(self.power_dbm)

    @property
    def noise_w(self) -> float:
        return dbm_to_watts(self.noise_dbm)

    def run_config(self) -> RunConfig:
        try:
            return RunConfig(self.num_samples, self.power_w)
        except ValueError as exc:
            raise ConfigError(f"num_samples/power_dbm: {exc}") from exc

    def scene_config(self) -> SceneConfig:
        s = self.scene
        try:
            if "reflection_gain" in s:
                extra = set(s) - {"reflection_gain"}
                if extra:
                    raise ConfigError(f"scene: reflection_gain cannot be combined with {sorted(extra)}")
                return SceneConfig(_complex(s["reflection_gain"], "scene.reflection_gain"), self.noise_w)
            missing = {"ref_power", "range_m", "rcs"} - set(s)
            if missing:
                raise ConfigError(f"scene: missing {sorted(missing)} (or give reflection_gain)")
            return SceneConfig.from_path_loss(
                float(s["ref_power"]), float(s["range_m"]), _complex(s["rcs"], "scene.rcs"), self.noise_w
            )
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"scene: {exc}") from exc

    @property
    def path_gain(self) -> float:
        """``beta0 / r^2``; falls back to ``|alpha|`` when only the gain is given."""
        s = self.scene
        if "reflection_gain" in s:
            return abs(_complex(s["reflection_gain"], "scene.reflection_gain"))
        return float(s["ref_power"]) / float(s["range_m"]) ** 2

    def trials_for(self, prop: str) -> int:
        return int(self.property_trials.get(prop, DEFAULT_PROPERTY_TRIALS[prop]))

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config: top level must be a JSON object")
        known = {
            "experiment", "array", "prior", "scene", "power_dbm", "noise_dbm", "num_samples",
            "angle_grid", "snr_db", "trials", "seed", "property_trials",
        }
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"config: unknown fields {sorted(unknown)}")
        kw = {}
        try:
            if "experiment" in d:
                kw["experiment"] = str(d["experiment"])
            if "array" in d:
                kw["array"] = ArrayConfig(**d["array"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"array: {exc}") from exc
        try:
            if "prior" in d:
                kw["prior"] = GaussianMixturePrior.from_components(d["prior"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"prior: {exc}") from exc
        if "scene" in d:
            if not isinstance(d["scene"], dict):
                raise ConfigError("scene: must be an object")
            kw["scene"] = {
                k: _pair(_complex(v, f"scene.{k}")) if k in ("rcs", "reflection_gain") else v
                for k, v in d["scene"].items()
            }
        try:
            for name in ("power_dbm", "noise_dbm"):
                if name in d:
                    kw[name] = float(d[name])
            for name in ("num_samples", "trials", "seed"):
                if name in d:
                    if int(d[name]) != d[name]:
                        raise ValueError(f"must be an integer, got {d[name]!r}")
                    kw[name] = int(d[name])
            if "angle_grid" in d:
                kw["angle_grid"] = AngleGrid(**d["angle_grid"])
            if "snr_db" in d:
                kw["snr_db"] = tuple(sorted(float(x) for x in d["snr_db"]))
            if "property_trials" in d:
                kw["property_trials"] = {str(k): int(v) for k, v in d["property_trials"].items()}
        except (TypeError, ValueError, AttributeError) as exc:
            raise ConfigError(f"config: {exc}") from exc
        return cls(**kw)

    def to_dict(self) -> dict:
        scene = {
            k: _pair(_complex(v, k)) if k in ("rcs", "reflection_gain") else float(v)
            for k, v in self.scene.items()
        }
        return {
            "experiment": self.experiment,
            "array": {"n_tx": self.array.n_tx, "n_rx": self.array.n_rx, "spacing_ratio": self.array.spacing_ratio},
            "prior": self.prior.to_components(),
            "scene": scene,
            "power_dbm": self.power_dbm,
            "noise_dbm": self.noise_dbm,
            "num_samples": self.num_samples,
            "angle_grid": {"start": self.angle_grid.start, "stop": self.angle_grid.stop, "num": self.angle_grid.num},
            "snr_db": list(self.snr_db),
            "trials": self.trials,
            "seed": self.seed,
            "property_trials": dict(sorted(self.property_trials.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


def load_config(path) -> ExperimentConfig:
    """Parse a JSON config file, reporting the line/column of syntax errors."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        return ExperimentConfig.from_dict(raw)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
