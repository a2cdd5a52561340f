"""Feed-forward regression network initialized from a pretrained stack.

Sigmoid hidden layers (weights copied from the DBN), a linear output head
with one unit per HMM state, and minibatch SGD fine-tuning on mean squared
error plus weight decay and a KL sparsity penalty. The cross-validation loss
drives a halving learning-rate schedule; the best-cv snapshot is returned.
Targets are z-scored log-F0 values; the stats live in the model so
prediction can denormalize.
"""

import math
from dataclasses import dataclass

import numpy as np

from .contour import STATES_PER_PHONEME
from .numerics import Rng, sigmoid

_RHO_CLAMP = 1e-8


@dataclass
class DnnModel:
    hidden_layers: list  # [(weights, bias), ...] with sigmoid activations
    output_weights: np.ndarray
    output_bias: np.ndarray
    target_mean: float = None
    target_std: float = None

    def __post_init__(self):
        dims = [w.shape for w, _ in self.hidden_layers] + [self.output_weights.shape]
        for (_, cols), (rows, _) in zip(dims, dims[1:]):
            if cols != rows:
                raise ValueError("layer dimensions do not chain")
        if self.target_std is not None and self.target_std <= 0:
            raise ValueError("target_std must be positive")

    @property
    def input_dim(self):
        return self.hidden_layers[0][0].shape[0] if self.hidden_layers \
            else self.output_weights.shape[0]

    @property
    def output_dim(self):
        return self.output_weights.shape[1]

    def copy(self):
        return DnnModel([(w.copy(), b.copy()) for w, b in self.hidden_layers],
                        self.output_weights.copy(), self.output_bias.copy(),
                        self.target_mean, self.target_std)


@dataclass
class FinetuneConfig:
    initial_learning_rate: float = 0.01
    minibatch_phonemes: int = 20  # 20 phoneme samples = 100 states
    weight_decay: float = 0.002
    sparsity_target: float = 0.05
    sparsity_weight: float = 0.001
    patience_epochs: int = 10
    lr_decay_factor: float = 0.5
    max_epochs: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.initial_learning_rate <= 0 or self.minibatch_phonemes < 1:
            raise ValueError("learning rate and minibatch size must be positive")
        if self.weight_decay < 0 or self.sparsity_weight < 0:
            raise ValueError("penalty weights must be non-negative")
        if not 0.0 < self.sparsity_target < 1.0:
            raise ValueError("sparsity_target must lie in (0, 1)")
        if not 0.0 < self.lr_decay_factor < 1.0:
            raise ValueError("lr_decay_factor must lie in (0, 1)")
        if self.patience_epochs < 1 or self.max_epochs < 0:
            raise ValueError("patience_epochs >= 1 and max_epochs >= 0 required")


@dataclass
class TrainSample:
    features: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if self.targets.shape != (STATES_PER_PHONEME,):
            raise ValueError(f"targets must hold {STATES_PER_PHONEME} values")
        if not np.all(np.isfinite(self.targets)):
            raise ValueError("targets must be finite")


def init_from_dbn(dbn, output_dim=STATES_PER_PHONEME, seed=0):
    """Copy the stack's weights into sigmoid hidden layers; small-random head."""
    if not dbn.layers:
        raise ValueError("cannot initialize from an empty stack")
    if output_dim != STATES_PER_PHONEME:
        raise ValueError(f"output head is fixed at {STATES_PER_PHONEME} states")
    hidden = [(p.weights.copy(), p.hidden_bias.copy()) for p in dbn.layers]
    rng = Rng(seed)
    out_w = rng.normal((dbn.layers[-1].n_hidden, output_dim), scale=0.01)
    return DnnModel(hidden, out_w, np.zeros(output_dim))


def _batch_arrays(batch):
    if isinstance(batch, tuple):
        return batch
    x = np.stack([s.features for s in batch])
    y = np.stack([s.targets for s in batch])
    return x, y


def _forward_batch(model, x):
    """Returns (activations per hidden layer, output)."""
    acts = []
    a = x
    for w, b in model.hidden_layers:
        a = sigmoid(a @ w + b)
        acts.append(a)
    out = a @ model.output_weights + model.output_bias
    return acts, out


def forward(model, features):
    """Forward pass for one feature vector (normalized-output space)."""
    x = np.asarray(features, dtype=np.float64)
    if x.shape[0] != model.input_dim:
        raise ValueError("feature length does not match the model input")
    _, out = _forward_batch(model, x.reshape(1, -1))
    return out[0]


def predict_states(model, features):
    """Denormalized per-state log-F0 prediction (log-Hz)."""
    if model.target_mean is None or model.target_std is None:
        raise ValueError("model has no target normalization stats; finetune first")
    return forward(model, features) * model.target_std + model.target_mean


def loss_components(model, batch, config):
    """(mse, weight_decay_term, sparsity_term) of the fine-tuning loss."""
    x, y = _batch_arrays(batch)
    if x.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    acts, out = _forward_batch(model, x)
    mse = float(np.mean((out - y) ** 2))

    wd = sum(float(np.sum(w ** 2)) for w, _ in model.hidden_layers)
    wd += float(np.sum(model.output_weights ** 2))
    wd *= config.weight_decay

    rho = config.sparsity_target
    kl = 0.0
    for a in acts:
        rho_hat = np.clip(np.mean(a, axis=0), _RHO_CLAMP, 1.0 - _RHO_CLAMP)
        kl += float(np.sum(rho * np.log(rho / rho_hat)
                    + (1.0 - rho) * np.log((1.0 - rho) / (1.0 - rho_hat))))
    return mse, wd, config.sparsity_weight * kl


def loss(model, batch, config):
    """Full fine-tuning objective: MSE + weight decay + sparsity KL."""
    return float(sum(loss_components(model, batch, config)))


@dataclass
class DnnGradients:
    hidden: list  # [(d_weights, d_bias), ...]
    output_weights: np.ndarray
    output_bias: np.ndarray


def gradient(model, batch, config):
    """Exact gradient of loss() including both penalty terms.

    The per-unit mean activation in the sparsity term is treated as a
    function of the parameters (backpropagated through the batch mean).
    """
    x, y = _batch_arrays(batch)
    if x.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    n = x.shape[0]
    acts, out = _forward_batch(model, x)

    d_out = 2.0 * (out - y) / (n * y.shape[1])
    last_hidden = acts[-1] if acts else x
    g_out_w = last_hidden.T @ d_out + 2.0 * config.weight_decay * model.output_weights
    g_out_b = np.sum(d_out, axis=0)

    rho = config.sparsity_target
    hidden_grads = [None] * len(model.hidden_layers)
    delta = d_out @ model.output_weights.T
    for k in range(len(model.hidden_layers) - 1, -1, -1):
        a = acts[k]
        rho_hat = np.mean(a, axis=0)
        clipped = np.clip(rho_hat, _RHO_CLAMP, 1.0 - _RHO_CLAMP)
        d_kl = np.where((rho_hat > _RHO_CLAMP) & (rho_hat < 1.0 - _RHO_CLAMP),
                        -rho / clipped + (1.0 - rho) / (1.0 - clipped), 0.0)
        delta = (delta + config.sparsity_weight * d_kl / n) * a * (1.0 - a)
        below = acts[k - 1] if k > 0 else x
        w, _ = model.hidden_layers[k]
        hidden_grads[k] = (below.T @ delta + 2.0 * config.weight_decay * w,
                           np.sum(delta, axis=0))
        delta = delta @ w.T
    return DnnGradients(hidden_grads, g_out_w, g_out_b)


def _sgd_step(model, grads, lr):
    for (w, b), (gw, gb) in zip(model.hidden_layers, grads.hidden):
        w -= lr * gw
        b -= lr * gb
    model.output_weights -= lr * grads.output_weights
    model.output_bias -= lr * grads.output_bias


def _normalize(samples, mean, std):
    return (np.stack([s.features for s in samples]),
            (np.stack([s.targets for s in samples]) - mean) / std)


def finetune(model, train, cv, config, epoch_callback=None):
    """Minibatch SGD with a cv-driven halving learning-rate schedule.

    Target normalization stats are computed from `train` (raw log-F0) and
    stored in the model; optimization runs in normalized space. Every
    `patience_epochs` epochs the mean cv loss of the window is compared with
    the previous window's, and the learning rate is halved when it increased.
    Returns (best-cv snapshot, history); history holds per-epoch records,
    lr events, and the pre-training cv baseline.
    """
    if not train or not cv:
        raise ValueError("train and cv sets must be non-empty")
    targets = np.stack([s.targets for s in train])
    mean = float(np.mean(targets))
    std = float(np.std(targets))
    if std <= 0.0:
        raise ValueError("training targets are constant; cannot normalize")

    model = model.copy()
    model.target_mean, model.target_std = mean, std
    x_tr, y_tr = _normalize(train, mean, std)
    cv_batch = _normalize(cv, mean, std)

    rng = Rng(config.seed)
    lr = config.initial_learning_rate
    n = x_tr.shape[0]
    mb = config.minibatch_phonemes

    cv_mse0, cv_wd0, cv_sp0 = loss_components(model, cv_batch, config)
    history = {
        "initial_cv_loss": cv_mse0 + cv_wd0 + cv_sp0,
        "initial_cv_mse": cv_mse0,
        "epochs": [],
        "lr_events": [],
    }
    best = model.copy()
    best_cv = math.inf
    window_losses = []
    prev_window_mean = None

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n)
        train_losses = []
        for start in range(0, n, mb):
            sel = order[start:start + mb]
            batch = (x_tr[sel], y_tr[sel])
            train_losses.append(loss(model, batch, config))
            _sgd_step(model, gradient(model, batch, config), lr)

        cv_mse, cv_wd, cv_sp = loss_components(model, cv_batch, config)
        cv_loss = cv_mse + cv_wd + cv_sp
        record = {
            "epoch": epoch,
            "train_loss": float(np.mean(train_losses)),
            "cv_loss": cv_loss,
            "cv_mse": cv_mse,
            "lr": lr,
        }
        history["epochs"].append(record)
        if epoch_callback is not None:
            epoch_callback(record)

        if cv_loss < best_cv:
            best_cv = cv_loss
            best = model.copy()

        window_losses.append(cv_loss)
        if epoch % config.patience_epochs == 0:
            window_mean = float(np.mean(window_losses))
            if prev_window_mean is not None and window_mean > prev_window_mean:
                new_lr = lr * config.lr_decay_factor
                history["lr_events"].append(
                    {"epoch": epoch, "lr_before": lr, "lr_after": new_lr})
                lr = new_lr
            prev_window_mean = window_mean
            window_losses = []

    if config.max_epochs == 0:
        return model, history
    return best, history
