"""Multi-output MLP regressor trained with mini-batch Adam.

Plain numpy implementation: tanh hidden layers, linear output, mean
squared error.  Supports early stopping on a held-out validation split
with best-weight restoration.  Everything is deterministic given the
config seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class TrainingError(RuntimeError):
    """Training diverged (non-finite loss); carries the offending epoch."""

    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch


@dataclass(frozen=True)
class RegressorConfig:
    hidden_layers: tuple[int, ...] = (32, 32)
    epochs: int = 500
    learning_rate: float = 0.01
    batch_size: int = 500
    validation_fraction: float = 0.1
    patience: int = 20
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(w) for w in self.hidden_layers))
        if self.epochs < 1 or self.batch_size < 1 or self.patience < 1:
            raise ValueError("epochs, batch_size and patience must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if not (0.0 < self.validation_fraction < 1.0):
            raise ValueError("validation fraction must lie in (0, 1)")
        if any(w < 1 for w in self.hidden_layers):
            raise ValueError("hidden layer widths must be positive")


@dataclass(frozen=True)
class FittedRegressor:
    layers: tuple[tuple[np.ndarray, np.ndarray], ...]  # (weights, bias) per layer
    input_dim: int
    output_dim: int
    training_loss_trace: tuple[float, ...] = ()
    validation_loss_trace: tuple[float, ...] = ()
    best_epoch: int = 0
    best_validation_loss: float = float("nan")


def init_params(rng: np.random.Generator, dims: list[int]):
    """Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases."""
    params = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        W = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        b = np.zeros(fan_out)
        params.append([W, b])
    return params


def forward(params, X: np.ndarray) -> np.ndarray:
    """tanh hidden layers, linear output layer."""
    h = X
    for W, b in params[:-1]:
        h = np.tanh(h @ W + b)
    W, b = params[-1]
    return h @ W + b


def loss_and_grads(params, X: np.ndarray, Y: np.ndarray):
    """MSE averaged over all entries plus its gradient via backprop."""
    acts = [X]
    h = X
    for W, b in params[:-1]:
        h = np.tanh(h @ W + b)
        acts.append(h)
    W, b = params[-1]
    pred = h @ W + b

    diff = pred - Y
    loss = float(np.mean(diff**2))
    grads = [None] * len(params)
    delta = 2.0 * diff / diff.size
    for layer in range(len(params) - 1, -1, -1):
        a = acts[layer]
        grads[layer] = (a.T @ delta, delta.sum(axis=0))
        if layer > 0:
            delta = (delta @ params[layer][0].T) * (1.0 - a * a)  # tanh'
    return loss, grads


def validation_split(n: int, cfg: RegressorConfig):
    """Seeded permutation split; validation takes the leading slice."""
    n_val = int(round(cfg.validation_fraction * n))
    if n_val < 1 or n - n_val < 1:
        raise ValueError(
            f"n={n} too small for validation fraction {cfg.validation_fraction}"
        )
    perm = np.random.default_rng(cfg.seed).permutation(n)
    return perm[:n_val], perm[n_val:]


def fit(X: np.ndarray, Y: np.ndarray, cfg: RegressorConfig | None = None) -> FittedRegressor:
    cfg = cfg or RegressorConfig()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"row-count mismatch: {X.shape[0]} vs {Y.shape[0]}")
    n = X.shape[0]
    if n < 10:
        raise ValueError(f"need at least 10 rows to fit, got {n}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise ValueError("non-finite training data")

    val_idx, train_idx = validation_split(n, cfg)
    X_tr, Y_tr = X[train_idx], Y[train_idx]
    X_val, Y_val = X[val_idx], Y[val_idx]
    n_tr = X_tr.shape[0]
    batch = min(cfg.batch_size, n_tr)

    rng = np.random.default_rng(cfg.seed)
    dims = [X.shape[1], *cfg.hidden_layers, Y.shape[1]]
    params = init_params(rng, dims)

    # Adam state
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    m = [[np.zeros_like(W), np.zeros_like(b)] for W, b in params]
    v = [[np.zeros_like(W), np.zeros_like(b)] for W, b in params]
    t = 0

    train_trace: list[float] = []
    val_trace: list[float] = []
    best_val = np.inf
    best_epoch = 0
    best_params = [[W.copy(), b.copy()] for W, b in params]
    since_best = 0

    for epoch in range(cfg.epochs):
        order = rng.permutation(n_tr)
        for start in range(0, n_tr, batch):
            idx = order[start : start + batch]
            loss, grads = loss_and_grads(params, X_tr[idx], Y_tr[idx])
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}", epoch)
            t += 1
            corr1 = 1.0 - beta1**t
            corr2 = 1.0 - beta2**t
            for layer, (gW, gb) in enumerate(grads):
                for slot, g in enumerate((gW, gb)):
                    m[layer][slot] = beta1 * m[layer][slot] + (1 - beta1) * g
                    v[layer][slot] = beta2 * v[layer][slot] + (1 - beta2) * g * g
                    step = (
                        cfg.learning_rate
                        * (m[layer][slot] / corr1)
                        / (np.sqrt(v[layer][slot] / corr2) + eps)
                    )
                    params[layer][slot] = params[layer][slot] - step

        train_loss = float(np.mean((forward(params, X_tr) - Y_tr) ** 2))
        val_loss = float(np.mean((forward(params, X_val) - Y_val) ** 2))
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise TrainingError(f"non-finite loss at epoch {epoch}", epoch)
        train_trace.append(train_loss)
        val_trace.append(val_loss)

        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_params = [[W.copy(), b.copy()] for W, b in params]
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.patience:
                break

    frozen = []
    for W, b in best_params:
        W = W.copy()
        b = b.copy()
        W.flags.writeable = False
        b.flags.writeable = False
        frozen.append((W, b))
    return FittedRegressor(
        layers=tuple(frozen),
        input_dim=X.shape[1],
        output_dim=Y.shape[1],
        training_loss_trace=tuple(train_trace),
        validation_loss_trace=tuple(val_trace),
        best_epoch=best_epoch,
        best_validation_loss=float(best_val),
    )


def predict(model: FittedRegressor, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.input_dim:
        raise ValueError(f"expected {model.input_dim} columns, got {X.shape[1]}")
    return forward(model.layers, X)


def residuals(model: FittedRegressor, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    pred = predict(model, X)
    if Y.shape != pred.shape:
        raise ValueError(f"response shape {Y.shape} does not match {pred.shape}")
    return Y - pred
