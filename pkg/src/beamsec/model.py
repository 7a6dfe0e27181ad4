"""Multi-output regression MLP: definition, training, serialization, gradients."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .autodiff import Graph

MODEL_SCHEMA_VERSION = 1

OUTPUT_LINEAR = "linear"
OUTPUT_SOFTMAX_T = "temperature-softmax"


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss becomes non-finite."""


class ModelFormatError(ValueError):
    """Raised for corrupt or incompatible model files."""


HIDDEN_ACTIVATIONS = ("relu", "tanh")


@dataclass(frozen=True)
class ModelSpec:
    input_dim: int
    hidden_dims: tuple[int, ...]
    output_dim: int
    output: str = OUTPUT_LINEAR
    temperature: float = 1.0
    hidden_activations: tuple[str, ...] = ()  # () -> relu everywhere

    def __post_init__(self):
        if self.output not in (OUTPUT_LINEAR, OUTPUT_SOFTMAX_T):
            raise ValueError(f"unknown output mode {self.output!r}")
        if self.temperature < 1.0:
            raise ValueError(f"temperature must be >= 1, got {self.temperature}")
        acts = self.resolved_activations()
        for a in acts:
            if a not in HIDDEN_ACTIVATIONS:
                raise ValueError(f"unknown hidden activation {a!r}")
        if self.hidden_activations and len(acts) != len(self.hidden_dims):
            raise ValueError(
                f"{len(self.hidden_activations)} activation tags for "
                f"{len(self.hidden_dims)} hidden layers")

    def resolved_activations(self) -> tuple[str, ...]:
        """One tag per hidden layer, defaulting to relu."""
        if self.hidden_activations:
            return tuple(self.hidden_activations)
        return ("relu",) * len(self.hidden_dims)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 128
    learning_rate: float = 1e-3
    optimizer: str = "adam"  # or "sgd"
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate < 0:
            raise ValueError("epochs/batch_size must be >= 1 and learning_rate >= 0")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class MlpModel:
    """Trained model state; treat as immutable once built."""

    layer_dims: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    output: str = OUTPUT_LINEAR
    temperature: float = 1.0
    activations: tuple[str, ...] = ()  # per hidden layer; () -> relu
    train_meta: dict = field(default_factory=dict)

    @property
    def spec(self) -> ModelSpec:
        return ModelSpec(self.layer_dims[0], tuple(self.layer_dims[1:-1]),
                         self.layer_dims[-1], self.output, self.temperature,
                         hidden_activations=self.activations)


def init_model(spec: ModelSpec, seed: int = 0) -> MlpModel:
    """Seeded uniform fan-in initialization."""
    dims = [spec.input_dim, *spec.hidden_dims, spec.output_dim]
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0x1417,)))
    weights, biases = [], []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(d_in)
        weights.append(rng.uniform(-bound, bound, (d_in, d_out)))
        biases.append(np.zeros((1, d_out)))
    return MlpModel(layer_dims=dims, weights=weights, biases=biases,
                    output=spec.output, temperature=spec.temperature,
                    activations=spec.resolved_activations())


def _forward(model: MlpModel, X: np.ndarray, Y: np.ndarray | None,
             temperature: float):
    """Build the forward graph; returns (graph, input, output, loss, params)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.layer_dims[0]:
        raise ValueError(
            f"feature width {X.shape[1]} does not match model input "
            f"dimension {model.layer_dims[0]}")
    g = Graph()
    x_in = g.leaf(X, "input")
    h = x_in
    params = []
    n_layers = len(model.weights)
    acts = model.activations or ("relu",) * (n_layers - 1)
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        Wn, bn = g.leaf(W, f"W{i}"), g.leaf(b, f"b{i}")
        params.append((Wn, bn))
        h = g.add_bias(g.matmul(h, Wn), bn)
        if i < n_layers - 1:
            h = g.tanh(h) if acts[i] == "tanh" else g.relu(h)
    if model.output == OUTPUT_SOFTMAX_T:
        h = g.softmax_t(h, temperature)
    loss = None
    if Y is not None:
        Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
        loss = g.mse(h, g.leaf(Y, "target"))
    return g, x_in, h, loss, params


def predict(model: MlpModel, X: np.ndarray,
            temperature: float | None = None) -> np.ndarray:
    """Pure forward pass; softmax-output models predict at T=1 unless overridden."""
    t = 1.0 if temperature is None else temperature
    _, _, out, _, _ = _forward(model, X, None, t)
    return out.value


def deployed_prediction(model: MlpModel, X: np.ndarray) -> np.ndarray:
    """Model output mapped into the max-normalized label space.

    Linear-output models already predict in label space. Softmax-output
    models predict probability vectors; since max-normalizing a softmax at
    temperature T equals raising the T=1 softmax's max-normalized output to
    the power 1/T, this is a fixed monotone calibration of the deployed T=1
    predictor back onto the rate scale the labels use.
    """
    if model.output != OUTPUT_SOFTMAX_T:
        return predict(model, X)
    p = predict(model, X, temperature=model.temperature)
    return p / p.max(axis=1, keepdims=True)


def loss_gradient_wrt_input(model: MlpModel, x: np.ndarray, y: np.ndarray,
                            temperature: float | None = None) -> np.ndarray:
    """Exact reverse-mode gradient of MSE(predict(model, x), y) w.r.t. x.

    Accepts a single sample or a batch; for a batch the loss is the mean over
    all elements, so each row's gradient is its per-sample gradient scaled by
    a common positive constant.
    """
    t = 1.0 if temperature is None else temperature
    g, x_in, _, loss, _ = _forward(model, x, y, t)
    g.backward(loss)
    grad = x_in.grad
    return grad if np.asarray(x).ndim > 1 else grad[0]


def loss_and_gradients(model: MlpModel, X, Y, temperature: float | None = None):
    """Scalar MSE loss plus parameter gradients (used by the training loop)."""
    t = model.temperature if temperature is None else temperature
    if model.output != OUTPUT_SOFTMAX_T:
        t = 1.0
    g, _, _, loss, params = _forward(model, X, Y, t)
    g.backward(loss)
    grads = [(Wn.grad, bn.grad) for Wn, bn in params]
    return float(loss.value[0, 0]), grads


def fit(model: MlpModel, X: np.ndarray, Y: np.ndarray,
        cfg: TrainConfig) -> tuple[MlpModel, list[float]]:
    """Mini-batch training; returns a new model and the per-epoch loss history.

    Deterministic given cfg.seed: shuffling, and nothing else, consumes
    randomness. Softmax-output models train at the model's stored temperature.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    n = X.shape[0]
    weights = [W.copy() for W in model.weights]
    biases = [b.copy() for b in model.biases]
    work = replace(model, weights=weights, biases=biases)

    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=cfg.seed, spawn_key=(0x5817FF,)))
    adam_m = [np.zeros_like(p) for p in weights + biases]
    adam_v = [np.zeros_like(p) for p in weights + biases]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0

    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        epoch_losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, grads = loss_and_gradients(work, X[idx], Y[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"loss became non-finite at epoch {epoch} "
                    f"(learning_rate={cfg.learning_rate})")
            epoch_losses.append(loss)
            flat_params = weights + biases
            flat_grads = [gw for gw, _ in grads] + [gb for _, gb in grads]
            step += 1
            for i, (p, gr) in enumerate(zip(flat_params, flat_grads)):
                if cfg.optimizer == "sgd":
                    p -= cfg.learning_rate * gr
                else:
                    adam_m[i] = beta1 * adam_m[i] + (1 - beta1) * gr
                    adam_v[i] = beta2 * adam_v[i] + (1 - beta2) * gr * gr
                    m_hat = adam_m[i] / (1 - beta1 ** step)
                    v_hat = adam_v[i] / (1 - beta2 ** step)
                    p -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
        history.append(float(np.mean(epoch_losses)))

    work.train_meta = dict(model.train_meta)
    work.train_meta.update({
        "seed": cfg.seed, "epochs": cfg.epochs, "batch_size": cfg.batch_size,
        "learning_rate": cfg.learning_rate, "optimizer": cfg.optimizer,
        "initial_loss": history[0], "final_loss": history[-1],
    })
    return work, history


def train(spec: ModelSpec, dataset, cfg: TrainConfig) -> tuple[MlpModel, list[float]]:
    """Initialize from ``spec`` and fit on the dataset's training split."""
    if dataset.train_idx.size == 0:
        raise ValueError("dataset has no training split; call split_dataset first")
    model = init_model(spec, seed=cfg.seed)
    X, Y = dataset.train_rows()
    return fit(model, X, Y, cfg)


def save_model(model: MlpModel, path) -> None:
    doc = {
        "schema_version": MODEL_SCHEMA_VERSION,
        "layer_dims": model.layer_dims,
        "activations": list(model.activations
                            or ("relu",) * (len(model.layer_dims) - 2)),
        "output": model.output,
        "temperature": model.temperature,
        "weights": [W.tolist() for W in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "train_meta": model.train_meta,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path) -> MlpModel:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid model JSON ({exc})") from None
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise ModelFormatError(f"{path}: missing schema_version")
    if doc["schema_version"] != MODEL_SCHEMA_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported schema version {doc['schema_version']!r} "
            f"(expected {MODEL_SCHEMA_VERSION})")
    try:
        return MlpModel(
            layer_dims=list(doc["layer_dims"]),
            weights=[np.asarray(W, dtype=np.float64) for W in doc["weights"]],
            biases=[np.asarray(b, dtype=np.float64) for b in doc["biases"]],
            output=doc["output"],
            temperature=float(doc["temperature"]),
            activations=tuple(doc.get("activations", ())),
            train_meta=dict(doc.get("train_meta", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: malformed model document ({exc})") from None
