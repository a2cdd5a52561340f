"""Greedy layer-wise RBM stacking and AIS-based stack evaluation.

A stack is trained bottom-up: each layer is an RBM trained on the previous
layer's hidden activation probabilities, binarized once per layer transition
with a seeded draw so upper-layer training stays deterministic. AIS estimates
the top layer's log-partition along a weight-scaling path whose base is the
zero-weight RBM with the target's biases (analytic log Z).
"""

from dataclasses import dataclass, replace

import numpy as np

from .backend import kernels
from .numerics import (Rng, derive_seed, logsumexp, multi_stream_states,
                       sigmoid, softplus)
from .rbm import RbmParams, free_energy_terms, train_rbm

# stream purposes derived from the run seed; offsets keep purposes disjoint
_LAYER_SEED_OFFSET = 1 << 20
_BINARIZE_SEED_OFFSET = 1 << 21
_POSTERIOR_SEED_OFFSET = 1 << 22


@dataclass
class DbnModel:
    layers: list

    def __post_init__(self):
        if len(self.layers) < 1:
            raise ValueError("a DBN needs at least one layer")
        for lower, upper in zip(self.layers, self.layers[1:]):
            if lower.n_hidden != upper.n_visible:
                raise ValueError(
                    f"layer dimension mismatch: {lower.n_hidden} hidden feeds "
                    f"{upper.n_visible} visible")

    @property
    def layer_sizes(self):
        return [self.layers[0].n_visible] + [p.n_hidden for p in self.layers]


@dataclass
class AisConfig:
    num_temperatures: int = 1000
    num_runs: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.num_temperatures < 2:
            raise ValueError("num_temperatures must be >= 2")
        if self.num_runs < 1:
            raise ValueError("num_runs must be >= 1")


def propagate(model, v, upto_layer=None):
    """Push an input through `upto_layer` layers of hidden conditionals.

    Intermediate layers pass activation probabilities (not samples) upward;
    upto_layer=0 returns the input unchanged.
    """
    if upto_layer is None:
        upto_layer = len(model.layers)
    if not 0 <= upto_layer <= len(model.layers):
        raise ValueError("upto_layer out of range")
    x = np.asarray(v, dtype=np.float64)
    if x.shape[-1] != model.layer_sizes[0]:
        raise ValueError("input does not match the stack's visible dimension")
    for params in model.layers[:upto_layer]:
        x = sigmoid(x @ params.weights + params.hidden_bias)
    return x


def greedy_train(data, layer_sizes, config, layer_callback=None):
    """Train a stack bottom-up, one RBM per adjacent size pair.

    Layer k trains with a seed derived only from (config.seed, k), and each
    layer transition binarizes the propagated probabilities with one fixed
    seeded draw, so stacks sharing a prefix of layer_sizes are bitwise equal
    on that prefix. A single hidden layer reproduces train_rbm exactly.
    `layer_callback(layer_index)` returns an optional per-epoch callback for
    progress logging.
    """
    if len(layer_sizes) < 2:
        raise ValueError("layer_sizes must name the visible dim and >= 1 hidden dim")
    x = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if x.shape[1] != layer_sizes[0]:
        raise ValueError("data width does not match layer_sizes[0]")

    layers = []
    for k, (v_dim, h_dim) in enumerate(zip(layer_sizes, layer_sizes[1:])):
        seed_k = config.seed if k == 0 else derive_seed(config.seed, _LAYER_SEED_OFFSET + k)
        cfg_k = replace(config, seed=seed_k)
        cb = layer_callback(k) if layer_callback is not None else None
        params = train_rbm(x, v_dim, h_dim, cfg_k, epoch_callback=cb)
        layers.append(params)
        if k + 1 < len(layer_sizes) - 1:
            probs = sigmoid(x @ params.weights + params.hidden_bias)
            bin_rng = Rng.derived(config.seed, _BINARIZE_SEED_OFFSET + k)
            x = bin_rng.bernoulli(probs)
    return DbnModel(layers)


def _base_log_partition(params):
    # zero-weight RBM with the target's biases: units are independent
    return float(np.sum(softplus(params.visible_bias))
                 + np.sum(softplus(params.hidden_bias)))


def ais_log_partition(params, config):
    """Annealed importance sampling estimate of log Z.

    Path: weights scaled by beta on a uniform schedule from the zero-weight
    base to the target; biases held fixed. Returns (estimate, stderr) where
    stderr is the delta-method standard error over independent runs (each run
    draws from its own stream keyed by (seed, run index)).
    """
    n_temps, n_runs = config.num_temperatures, config.num_runs
    betas = np.linspace(0.0, 1.0, n_temps)
    w, b, a = params.weights, params.visible_bias, params.hidden_bias

    states = multi_stream_states(config.seed, n_runs)
    p_base = np.tile(sigmoid(b), (n_runs, 1))
    v = np.empty_like(p_base)
    kernels.fill_bernoulli(states, p_base, v)

    vw = v @ w
    logw = np.zeros(n_runs)
    hid_prev = np.sum(softplus(betas[0] * vw + a), axis=1)
    for k in range(1, n_temps):
        beta = betas[k]
        hid_k = np.sum(softplus(beta * vw + a), axis=1)
        logw += hid_k - hid_prev
        if k < n_temps - 1:
            h_probs = sigmoid(beta * vw + a)
            h = np.empty_like(h_probs)
            kernels.fill_bernoulli(states, h_probs, h)
            v_probs = sigmoid(beta * (h @ w.T) + b)
            kernels.fill_bernoulli(states, v_probs, v)
            vw = v @ w
            hid_prev = np.sum(softplus(beta * vw + a), axis=1)
        # visible-bias term of log f cancels in the ratio: v is shared

    estimate = _base_log_partition(params) + logsumexp(logw) - np.log(n_runs)
    if n_runs < 2:
        return float(estimate), float("inf")
    shift = np.max(logw)
    lin = np.exp(logw - shift)
    sem = float(np.std(lin, ddof=1) / np.sqrt(n_runs))
    stderr = sem / float(np.mean(lin))
    return float(estimate), stderr


def _log_bernoulli(x, p):
    # safe elementwise log pmf; p==0/1 only occur with the matching x
    with np.errstate(divide="ignore"):
        return np.where(x == 1.0, np.log(p), np.log1p(-p))


def stack_lower_bound(model, data, ais, posterior_samples=100):
    """Variational lower bound on the mean data log-likelihood of the stack.

    Factorial posteriors are sampled layer-by-layer (Monte-Carlo over
    `posterior_samples` chains per datapoint); the top RBM's log-partition
    comes from AIS. A one-layer stack reduces to the exact RBM
    log-likelihood up to AIS error.
    """
    x_data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if x_data.shape[0] == 0:
        raise ValueError("data must be non-empty")
    top = model.layers[-1]
    log_z_top, _ = ais_log_partition(top, ais)

    if len(model.layers) == 1:
        return float(np.mean(free_energy_terms(top, x_data)) - log_z_top)

    post_seed = derive_seed(ais.seed, _POSTERIOR_SEED_OFFSET)
    m = posterior_samples
    bounds = []
    for i, v in enumerate(x_data):
        states = multi_stream_states(derive_seed(post_seed, i), m)
        x = np.tile(v, (m, 1))
        value = np.zeros(m)
        for params in model.layers[:-1]:
            probs = sigmoid(x @ params.weights + params.hidden_bias)
            nxt = np.empty_like(probs)
            kernels.fill_bernoulli(states, probs, nxt)
            value -= np.sum(_log_bernoulli(nxt, probs), axis=1)  # -log q
            recon = sigmoid(nxt @ params.weights.T + params.visible_bias)
            value += np.sum(_log_bernoulli(x, recon), axis=1)  # top-down term
            x = nxt
        value += free_energy_terms(top, x)
        bounds.append(float(np.mean(value)))
    return float(np.mean(bounds) - log_z_top)
