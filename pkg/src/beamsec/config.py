"""Plain-text experiment configuration: presets, parsing, validation."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace

from .channel import PRESETS, ScenarioConfig
from .defenses import REGRESSION_DISTILL, SOFTMAX_T
from .model import TrainConfig

RQ12_EPSILONS = (0.01, 0.3, 0.5, 0.7, 0.9)
RQ3_EPSILONS = (0.03, 0.05, 0.08, 0.10)


class ConfigError(ValueError):
    """Raised for unknown keys or malformed values in a config file."""


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig
    master_seed: int = 1
    train_fraction: float = 0.8
    threads: int = 1
    hidden_dims: tuple[int, ...] = (512, 256)
    hidden_activations: tuple[str, ...] = ()  # () -> relu on every hidden layer
    train: TrainConfig = field(default_factory=TrainConfig)
    attack_kinds: tuple[str, ...] = ("FGSM", "BIM", "PGD", "MIM")
    attack_epsilons: tuple[float, ...] = RQ12_EPSILONS
    rq3_epsilons: tuple[float, ...] = RQ3_EPSILONS
    attack_steps: int = 10
    pgd_random_start: bool = False
    clip_lo: float = -1.0
    clip_hi: float = 1.0
    adv_attacks: tuple[str, ...] = ("BIM",)
    adv_epsilons: tuple[float, ...] = (0.05, 0.1)
    epochs_per_round: int = 50
    distill_temperature: float = 20.0
    distill_mode: str = SOFTMAX_T

    def __post_init__(self):
        for grid in (self.attack_epsilons, self.rq3_epsilons):
            if not grid:
                raise ConfigError("epsilon grids must be non-empty")
            if list(grid) != sorted(grid):
                raise ConfigError(f"epsilon grid must be ascending: {grid}")


_KNOWN_KEYS = {
    "run": {"preset", "seed", "train_fraction", "threads"},
    "scenario": {"name", "num_antennas", "num_subcarriers",
                 "num_pilot_subcarriers", "num_users", "num_paths",
                 "carrier_ghz", "bandwidth_ghz", "codebook_size",
                 "user_region", "seed"},
    "model": {"hidden", "hidden_activations", "epochs", "batch_size",
              "learning_rate", "optimizer"},
    "attacks": {"kinds", "epsilons", "rq3_epsilons", "steps", "random_start",
                "clip_lo", "clip_hi"},
    "defenses": {"adv_attacks", "adv_epsilons", "epochs_per_round",
                 "distill_temperature", "distill_mode"},
}


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _names(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _bool(text: str) -> bool:
    if text.lower() in ("true", "yes", "1"):
        return True
    if text.lower() in ("false", "no", "0"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def default_config(preset: str = "O1_60-mini", seed: int = 1) -> ExperimentConfig:
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    return ExperimentConfig(scenario=PRESETS[preset], master_seed=seed)


def load_experiment_config(path) -> ExperimentConfig:
    """Parse the sectioned key/value experiment file; unknown keys are errors."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None

    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        unknown = set(parser[section]) - _KNOWN_KEYS[section]
        if unknown:
            raise ConfigError(
                f"{path}: unknown key(s) {sorted(unknown)} in [{section}]")

    try:
        return _build(parser)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _build(parser: configparser.ConfigParser) -> ExperimentConfig:
    run = parser["run"] if parser.has_section("run") else {}
    if parser.has_section("scenario"):
        s = parser["scenario"]
        region = _floats(s.get("user_region", "10,100,-50,50"))
        if len(region) != 4:
            raise ConfigError("user_region needs 4 numbers: xmin,xmax,ymin,ymax")
        scenario = ScenarioConfig(
            name=s.get("name", "custom"),
            num_antennas=int(s["num_antennas"]),
            num_subcarriers=int(s["num_subcarriers"]),
            num_pilot_subcarriers=int(s["num_pilot_subcarriers"]),
            num_users=int(s["num_users"]),
            num_paths=int(s["num_paths"]),
            carrier_ghz=float(s.get("carrier_ghz", "60")),
            bandwidth_ghz=float(s.get("bandwidth_ghz", "0.5")),
            codebook_size=int(s["codebook_size"]),
            user_region=region,
            seed=int(s.get("seed", "0")))
    else:
        scenario = PRESETS[run.get("preset", "O1_60-mini")]

    cfg = ExperimentConfig(scenario=scenario,
                           master_seed=int(run.get("seed", "1")),
                           train_fraction=float(run.get("train_fraction", "0.8")),
                           threads=int(run.get("threads", "1")))

    if parser.has_section("model"):
        m = parser["model"]
        cfg = replace(
            cfg,
            hidden_dims=_ints(m["hidden"]) if "hidden" in m else cfg.hidden_dims,
            hidden_activations=(_names(m["hidden_activations"])
                                if "hidden_activations" in m
                                else cfg.hidden_activations),
            train=replace(
                cfg.train,
                epochs=int(m.get("epochs", cfg.train.epochs)),
                batch_size=int(m.get("batch_size", cfg.train.batch_size)),
                learning_rate=float(m.get("learning_rate", cfg.train.learning_rate)),
                optimizer=m.get("optimizer", cfg.train.optimizer)))
    if parser.has_section("attacks"):
        a = parser["attacks"]
        cfg = replace(
            cfg,
            attack_kinds=_names(a["kinds"]) if "kinds" in a else cfg.attack_kinds,
            attack_epsilons=_floats(a["epsilons"]) if "epsilons" in a else cfg.attack_epsilons,
            rq3_epsilons=_floats(a["rq3_epsilons"]) if "rq3_epsilons" in a else cfg.rq3_epsilons,
            attack_steps=int(a.get("steps", cfg.attack_steps)),
            pgd_random_start=_bool(a.get("random_start", str(cfg.pgd_random_start))),
            clip_lo=float(a.get("clip_lo", cfg.clip_lo)),
            clip_hi=float(a.get("clip_hi", cfg.clip_hi)))
    if parser.has_section("defenses"):
        d = parser["defenses"]
        mode = d.get("distill_mode", cfg.distill_mode)
        if mode not in (REGRESSION_DISTILL, SOFTMAX_T):
            raise ConfigError(f"unknown distill_mode {mode!r}")
        cfg = replace(
            cfg,
            adv_attacks=_names(d["adv_attacks"]) if "adv_attacks" in d else cfg.adv_attacks,
            adv_epsilons=_floats(d["adv_epsilons"]) if "adv_epsilons" in d else cfg.adv_epsilons,
            epochs_per_round=int(d.get("epochs_per_round", cfg.epochs_per_round)),
            distill_temperature=float(d.get("distill_temperature", cfg.distill_temperature)),
            distill_mode=mode)
    return cfg
