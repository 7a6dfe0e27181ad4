"""Gradient-based evasion attacks (FGSM, BIM, PGD, MIM) in the real feature domain.

All attacks are infinity-norm bounded: every output coordinate stays within
epsilon of the clean input and inside the valid feature range. sign(0) is 0,
so a vanishing gradient leaves the input untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .metrics import mse
from .model import MlpModel, deployed_prediction, loss_gradient_wrt_input

KINDS = ("FGSM", "BIM", "PGD", "MIM")


@dataclass(frozen=True)
class AttackConfig:
    kind: str
    epsilon: float
    steps: int = 10
    alpha: float | None = None      # defaults to epsilon / steps
    momentum: float = 1.0           # MIM decay mu
    random_start: bool = False      # PGD only
    clip_lo: float = -1.0
    clip_hi: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.alpha is not None and self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.momentum < 0:
            raise ValueError(f"momentum must be >= 0, got {self.momentum}")
        if self.clip_lo >= self.clip_hi:
            raise ValueError("clip_lo must be below clip_hi")

    @property
    def step_size(self) -> float:
        return self.epsilon / self.steps if self.alpha is None else self.alpha


@dataclass
class AttackResult:
    x_adv: np.ndarray
    perturbation: np.ndarray
    config: AttackConfig
    per_sample_mse: np.ndarray
    mean_mse: float


def _clip(x_adv: np.ndarray, x0: np.ndarray, cfg: AttackConfig) -> np.ndarray:
    """Project onto the epsilon ball around x0 intersected with the clip range."""
    out = np.clip(x_adv, x0 - cfg.epsilon, x0 + cfg.epsilon)
    return np.clip(out, cfg.clip_lo, cfg.clip_hi)


def _grad_sign(model, x, y):
    return np.sign(loss_gradient_wrt_input(model, np.atleast_2d(x), np.atleast_2d(y)))


def fgsm(model: MlpModel, x: np.ndarray, y: np.ndarray,
         cfg: AttackConfig) -> np.ndarray:
    """Single-step sign attack: clip(x + epsilon * sign(grad))."""
    x = np.asarray(x, dtype=np.float64)
    x2 = np.atleast_2d(x)
    adv = _clip(x2 + cfg.epsilon * _grad_sign(model, x2, y), x2, cfg)
    return adv if x.ndim > 1 else adv[0]


def bim(model: MlpModel, x: np.ndarray, y: np.ndarray,
        cfg: AttackConfig) -> np.ndarray:
    """Iterated sign steps of size alpha, projected onto the epsilon ball."""
    x = np.asarray(x, dtype=np.float64)
    x0 = np.atleast_2d(x)
    adv = x0
    for _ in range(cfg.steps):
        adv = _clip(adv + cfg.step_size * _grad_sign(model, adv, y), x0, cfg)
    return adv if x.ndim > 1 else adv[0]


def pgd(model: MlpModel, x: np.ndarray, y: np.ndarray, cfg: AttackConfig,
        row_seeds: np.ndarray | None = None) -> np.ndarray:
    """BIM with an optional uniform random start inside the epsilon ball.

    ``row_seeds`` carries one derived seed per row so batch results do not
    depend on row grouping; a single sample defaults to row seed cfg.seed.
    """
    x = np.asarray(x, dtype=np.float64)
    x0 = np.atleast_2d(x)
    adv = x0
    if cfg.random_start and cfg.epsilon > 0:
        if row_seeds is None:
            row_seeds = np.array([_row_seed(cfg.seed, i) for i in range(x0.shape[0])])
        noise = np.empty_like(x0)
        for i, s in enumerate(row_seeds):
            rng = np.random.default_rng(s)
            noise[i] = rng.uniform(-cfg.epsilon, cfg.epsilon, x0.shape[1])
        adv = _clip(x0 + noise, x0, cfg)
    for _ in range(cfg.steps):
        adv = _clip(adv + cfg.step_size * _grad_sign(model, adv, y), x0, cfg)
    return adv if x.ndim > 1 else adv[0]


def mim(model: MlpModel, x: np.ndarray, y: np.ndarray,
        cfg: AttackConfig) -> np.ndarray:
    """Momentum attack: accumulate L1-normalized gradients, step by sign."""
    x = np.asarray(x, dtype=np.float64)
    x0 = np.atleast_2d(x)
    adv = x0
    g_acc = np.zeros_like(x0)
    for _ in range(cfg.steps):
        g = loss_gradient_wrt_input(model, adv, np.atleast_2d(y))
        norms = np.abs(g).sum(axis=1, keepdims=True)
        g_norm = np.divide(g, norms, out=np.zeros_like(g), where=norms > 0)
        g_acc = cfg.momentum * g_acc + g_norm
        adv = _clip(adv + cfg.step_size * np.sign(g_acc), x0, cfg)
    return adv if x.ndim > 1 else adv[0]


_ATTACKS = {"FGSM": fgsm, "BIM": bim, "PGD": pgd, "MIM": mim}


def _row_seed(seed: int, row: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(0xA77AC4, row))


def attack_batch(model: MlpModel, X: np.ndarray, Y: np.ndarray,
                 cfg: AttackConfig) -> AttackResult:
    """Run the configured attack on every row and score the result.

    Per-row randomness (PGD starts) is derived from (cfg.seed, row index), so
    the output is independent of batching and scheduling.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if X.shape[0] == 0:
        raise ValueError("attack_batch requires at least one row")
    if cfg.kind == "PGD":
        seeds = [_row_seed(cfg.seed, i) for i in range(X.shape[0])]
        x_adv = pgd(model, X, Y, cfg, row_seeds=seeds)
    else:
        x_adv = _ATTACKS[cfg.kind](model, X, Y, cfg)
    mean, per_sample = mse(Y, deployed_prediction(model, x_adv))
    return AttackResult(x_adv=x_adv, perturbation=x_adv - X, config=cfg,
                        per_sample_mse=per_sample, mean_mse=mean)
