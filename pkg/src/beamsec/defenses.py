"""Mitigation methods: iterative adversarial training and defensive distillation."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .attacks import AttackConfig, attack_batch
from .channel import Dataset
from .model import (OUTPUT_SOFTMAX_T, MlpModel, ModelSpec, TrainConfig, fit,
                    init_model, predict)

REGRESSION_DISTILL = "regression-distill"
SOFTMAX_T = "softmax-T"


@dataclass(frozen=True)
class AdvTrainConfig:
    attacks: tuple[str, ...]          # attack kinds, e.g. ("BIM",)
    epsilons: tuple[float, ...]
    epochs_per_round: int = 50
    base: TrainConfig = field(default_factory=TrainConfig)
    attack_steps: int = 10
    clip_lo: float = -1.0
    clip_hi: float = 1.0

    def __post_init__(self):
        if not self.attacks or not self.epsilons:
            raise ValueError("attack and epsilon lists must be non-empty")
        if any(e < 0 for e in self.epsilons):
            raise ValueError("epsilon budgets must be >= 0")


@dataclass(frozen=True)
class DistillConfig:
    teacher_spec: ModelSpec
    student_spec: ModelSpec
    temperature: float = 20.0
    mode: str = REGRESSION_DISTILL
    base: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.temperature < 1.0:
            raise ValueError(f"temperature must be >= 1, got {self.temperature}")
        if self.mode not in (REGRESSION_DISTILL, SOFTMAX_T):
            raise ValueError(f"unknown distillation mode {self.mode!r}")


def adversarial_train(model: MlpModel, dataset: Dataset,
                      cfg: AdvTrainConfig) -> MlpModel:
    """Robustify a model by retraining on clean plus adversarial rows.

    For each budget and each attack kind, adversarial inputs are regenerated
    against the current model, appended to the clean training rows with their
    original labels, and the model is retrained for ``epochs_per_round``.
    """
    X, Y = dataset.train_rows()
    current = model
    for eps in cfg.epsilons:
        for kind in cfg.attacks:
            attack_cfg = AttackConfig(
                kind=kind, epsilon=eps, steps=cfg.attack_steps,
                random_start=(kind == "PGD"), clip_lo=cfg.clip_lo,
                clip_hi=cfg.clip_hi, seed=cfg.base.seed)
            try:
                result = attack_batch(current, X, Y, attack_cfg)
            except Exception as exc:
                raise RuntimeError(
                    f"adversarial training failed generating {kind} "
                    f"at epsilon={eps}: {exc}") from exc
            X_aug = np.vstack([X, result.x_adv])
            Y_aug = np.vstack([Y, Y])
            round_cfg = replace(cfg.base, epochs=cfg.epochs_per_round)
            current, _ = fit(current, X_aug, Y_aug, round_cfg)
    return current


def softmax_with_temperature(z: np.ndarray, temperature: float) -> np.ndarray:
    """Row-wise softened softmax: exp(z_i/T) / sum_j exp(z_j/T), stably."""
    if temperature <= 0.0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    if not np.all(np.isfinite(z)):
        raise ValueError("non-finite logits")
    s = z / temperature
    s = s - s.max(axis=1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=1, keepdims=True)


def distill(dataset: Dataset, cfg: DistillConfig) -> tuple[MlpModel, MlpModel]:
    """Train a teacher, transfer its soft labels to a student; returns both.

    regression-distill: teacher fits the true labels, student fits the
    teacher's predicted beam vectors. softmax-T: teacher and student carry a
    temperature-softmax output at cfg.temperature during training; the student
    predicts at T=1 afterwards.
    """
    X, Y = dataset.train_rows()
    teacher_spec, student_spec = cfg.teacher_spec, cfg.student_spec
    if cfg.mode == SOFTMAX_T:
        teacher_spec = replace(teacher_spec, output=OUTPUT_SOFTMAX_T,
                               temperature=cfg.temperature)
        student_spec = replace(student_spec, output=OUTPUT_SOFTMAX_T,
                               temperature=cfg.temperature)
        # softmax outputs live on the probability simplex
        target = Y / Y.sum(axis=1, keepdims=True)
    else:
        target = Y

    teacher = init_model(teacher_spec, seed=cfg.base.seed)
    try:
        teacher, _ = fit(teacher, X, target, cfg.base)
    except Exception as exc:
        raise RuntimeError(f"teacher training diverged: {exc}") from exc

    if cfg.mode == SOFTMAX_T:
        soft = predict(teacher, X, temperature=cfg.temperature)
    else:
        soft = predict(teacher, X)

    student = init_model(student_spec, seed=cfg.base.seed + 1)
    student, _ = fit(student, X, soft, cfg.base)
    return student, teacher
