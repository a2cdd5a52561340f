"""Bernoulli-Bernoulli restricted Boltzmann machine.

Energy model, factorial conditionals, CD-k training with momentum, and exact
enumeration oracles for small models. Training follows the likelihood-ascent
orientation: positive statistics come from the data with hidden
probabilities, the chain is driven by sampled hidden states, reconstructions
and negative statistics use probabilities.
"""

from dataclasses import dataclass, field

import numpy as np

from .numerics import Rng, logsumexp, sigmoid, softplus

MAX_EXACT_UNITS = 24  # enumeration guard for the exact oracles


def _check_binary(x, name):
    if not np.all((x == 0.0) | (x == 1.0)):
        raise ValueError(f"{name} must be binary (0/1 entries)")


@dataclass
class RbmParams:
    """Weights (V x H) and biases of one RBM layer."""

    weights: np.ndarray
    visible_bias: np.ndarray
    hidden_bias: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.visible_bias = np.asarray(self.visible_bias, dtype=np.float64)
        self.hidden_bias = np.asarray(self.hidden_bias, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ValueError("weights must be 2-D (V x H)")
        if self.weights.shape != (self.visible_bias.shape[0], self.hidden_bias.shape[0]):
            raise ValueError(
                f"inconsistent shapes: weights {self.weights.shape}, "
                f"visible_bias {self.visible_bias.shape}, hidden_bias {self.hidden_bias.shape}"
            )
        for arr in (self.weights, self.visible_bias, self.hidden_bias):
            if not np.all(np.isfinite(arr)):
                raise ValueError("parameters must be finite")

    @property
    def n_visible(self):
        return self.weights.shape[0]

    @property
    def n_hidden(self):
        return self.weights.shape[1]

    def copy(self):
        return RbmParams(self.weights.copy(), self.visible_bias.copy(),
                         self.hidden_bias.copy())


@dataclass
class RbmTrainConfig:
    learning_rate: float = 0.002
    momentum: float = 0.95
    epochs: int = 50
    minibatch_size: int = 10
    cd_steps: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.minibatch_size < 1:
            raise ValueError("minibatch_size must be >= 1")
        if self.cd_steps < 1:
            raise ValueError("cd_steps must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


@dataclass
class RbmGradient:
    d_weights: np.ndarray
    d_visible_bias: np.ndarray
    d_hidden_bias: np.ndarray


@dataclass
class RbmVelocity:
    d_weights: np.ndarray
    d_visible_bias: np.ndarray
    d_hidden_bias: np.ndarray

    @classmethod
    def zeros(cls, v_dim, h_dim):
        return cls(np.zeros((v_dim, h_dim)), np.zeros(v_dim), np.zeros(h_dim))


def energy(params, v, h):
    """Joint energy -v'Wh - b'v - a'h of a binary configuration."""
    v = np.asarray(v, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    _check_binary(v, "v")
    _check_binary(h, "h")
    if v.shape[0] != params.n_visible or h.shape[0] != params.n_hidden:
        raise ValueError("configuration does not match parameter shapes")
    return float(-(v @ params.weights @ h)
                 - params.visible_bias @ v
                 - params.hidden_bias @ h)


def hidden_conditional(params, v):
    """p(h_j = 1 | v) for each hidden unit."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[0] != params.n_visible:
        raise ValueError("v does not match the visible dimension")
    return sigmoid(v @ params.weights + params.hidden_bias)


def visible_conditional(params, h):
    """p(v_i = 1 | h) for each visible unit."""
    h = np.asarray(h, dtype=np.float64)
    if h.shape[0] != params.n_hidden:
        raise ValueError("h does not match the hidden dimension")
    return sigmoid(params.weights @ h + params.visible_bias)


def _hidden_probs(params, vb):
    return sigmoid(vb @ params.weights + params.hidden_bias)


def _visible_probs(params, hb):
    return sigmoid(hb @ params.weights.T + params.visible_bias)


def _cd_stats(params, vb, rng, cd_steps):
    batch = vb.shape[0]
    h_pos = _hidden_probs(params, vb)
    h_drive = rng.bernoulli(h_pos)
    for step in range(cd_steps):
        v_neg = _visible_probs(params, h_drive)
        h_neg = _hidden_probs(params, v_neg)
        if step + 1 < cd_steps:
            h_drive = rng.bernoulli(h_neg)

    d_w = (vb.T @ h_pos - v_neg.T @ h_neg) / batch
    d_b = np.mean(vb - v_neg, axis=0)
    d_a = np.mean(h_pos - h_neg, axis=0)
    recon_sq_err = float(np.sum((vb - v_neg) ** 2))
    return RbmGradient(d_w, d_b, d_a), recon_sq_err


def cd_gradient(params, minibatch, rng, cd_steps=1):
    """CD-k likelihood-gradient estimate averaged over a minibatch.

    Returns the ascent direction: positive statistics minus the k-step
    reconstruction statistics, for weights and both biases. Consumes
    cd_steps * B * H Bernoulli draws from `rng` (one per hidden unit per
    chain-driving sample).
    """
    vb = np.atleast_2d(np.asarray(minibatch, dtype=np.float64))
    if vb.shape[0] == 0:
        raise ValueError("minibatch must be non-empty")
    _check_binary(vb, "minibatch")
    if vb.shape[1] != params.n_visible:
        raise ValueError("minibatch width does not match the visible dimension")
    grad, _ = _cd_stats(params, vb, rng, cd_steps)
    return grad


def apply_update(params, grad, velocity, config):
    """One momentum step, ascending the likelihood gradient estimate."""
    m, lr = config.momentum, config.learning_rate
    new_vel = RbmVelocity(
        m * velocity.d_weights + lr * grad.d_weights,
        m * velocity.d_visible_bias + lr * grad.d_visible_bias,
        m * velocity.d_hidden_bias + lr * grad.d_hidden_bias,
    )
    new_params = RbmParams(
        params.weights + new_vel.d_weights,
        params.visible_bias + new_vel.d_visible_bias,
        params.hidden_bias + new_vel.d_hidden_bias,
    )
    return new_params, new_vel


def init_params(v_dim, h_dim, rng):
    """Fresh parameters: weights ~ N(0, 0.01^2), biases zero."""
    return RbmParams(rng.normal((v_dim, h_dim), scale=0.01),
                     np.zeros(v_dim), np.zeros(h_dim))


def train_rbm(data, v_dim, h_dim, config, epoch_callback=None):
    """Train one RBM with CD and momentum over seeded shuffled minibatches.

    Draw order per run: weight init, then per epoch one shuffle followed by
    the per-minibatch CD draws. `epoch_callback(epoch, recon_rmse)` reports
    the mean reconstruction RMSE of each epoch when given.
    """
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if data.shape[0] == 0:
        raise ValueError("training data must be non-empty")
    _check_binary(data, "data")
    if data.shape[1] != v_dim:
        raise ValueError("data width does not match v_dim")

    rng = Rng(config.seed)
    params = init_params(v_dim, h_dim, rng)
    velocity = RbmVelocity.zeros(v_dim, h_dim)
    n = data.shape[0]

    for epoch in range(config.epochs):
        order = rng.permutation(n)
        sq_err = 0.0
        for start in range(0, n, config.minibatch_size):
            batch = data[order[start:start + config.minibatch_size]]
            grad, batch_err = _cd_stats(params, batch, rng, config.cd_steps)
            sq_err += batch_err
            params, velocity = apply_update(params, grad, velocity, config)
        if epoch_callback is not None:
            epoch_callback(epoch, float(np.sqrt(sq_err / (n * v_dim))))
    return params


def free_energy_terms(params, vb):
    """Unnormalized log p(v) (= -free energy) for each row of `vb`."""
    vb = np.atleast_2d(np.asarray(vb, dtype=np.float64))
    return vb @ params.visible_bias + np.sum(
        softplus(vb @ params.weights + params.hidden_bias), axis=1)


def _enumerate_binary(n):
    """(2^n, n) float64 matrix of all binary vectors, counting order."""
    codes = np.arange(2 ** n, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n)) & 1).astype(np.float64)


def exact_log_partition(params):
    """log Z with hidden units marginalized analytically.

    Enumerates the smaller of the two layers (log Z is invariant under
    swapping visible/hidden roles with the transposed weights). Guarded to
    V + H <= 24 units.
    """
    if params.n_visible + params.n_hidden > MAX_EXACT_UNITS:
        raise ValueError(
            f"model too large for exact enumeration (V+H > {MAX_EXACT_UNITS})")
    if params.n_hidden < params.n_visible:
        side = RbmParams(params.weights.T, params.hidden_bias, params.visible_bias)
    else:
        side = params
    configs = _enumerate_binary(side.n_visible)
    return float(logsumexp(free_energy_terms(side, configs)))


def exact_log_likelihood(params, data):
    """Mean log p(v) over `data` by exact enumeration (small models only)."""
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if data.shape[0] == 0:
        raise ValueError("data must be non-empty")
    _check_binary(data, "data")
    log_z = exact_log_partition(params)
    return float(np.mean(free_energy_terms(params, data)) - log_z)
