"""Dense feed-forward networks with exact reverse-mode gradients and Adam.

No autodiff framework: parameters live in one flat float64 vector per
network (weights and biases are reshaped views into it), the backward pass
is hand-written, and the optimizer updates the flat vector in place. Batch
math goes through NumPy/BLAS; single-sample inference dispatches to the
kernel backend.

Heads:
    linear    one affine output layer
    tanh      affine output squashed elementwise to (-1, 1)
    gaussian  two parallel affine layers on the last hidden activation,
              producing a mean vector and a log-std vector clamped to
              [LOG_STD_MIN, LOG_STD_MAX]
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels
from ._kernels import HEAD_GAUSSIAN, HEAD_LINEAR, HEAD_TANH, LOG_STD_MAX, LOG_STD_MIN
from .errors import ShapeMismatch

_HEAD_CODES = {"linear": HEAD_LINEAR, "tanh": HEAD_TANH, "gaussian": HEAD_GAUSSIAN}

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
TANH_CORRECTION_EPS = 1e-6


class DenseNet:
    """Fully connected net over float64 with ReLU hidden activations.

    layer_sizes includes input and output dims, e.g. [23, 256, 256, 2].
    All transitions except the last use ReLU; the last is the head. The
    gaussian head duplicates the final affine layer (mean and log-std).
    """

    def __init__(self, layer_sizes, head: str = "linear", rng: np.random.Generator | None = None,
                 final_scale: float = 0.01):
        if len(layer_sizes) < 2:
            raise ValueError("need at least input and output sizes")
        if head not in _HEAD_CODES:
            raise ValueError(f"unknown head {head!r}")
        self.layer_sizes = tuple(int(n) for n in layer_sizes)
        self.head = head
        self.head_code = _HEAD_CODES[head]

        pairs = list(zip(self.layer_sizes[:-1], self.layer_sizes[1:]))
        self.n_hidden = len(pairs) - 1
        self.shapes = pairs[:-1] + [pairs[-1]] * (2 if head == "gaussian" else 1)
        self.param_count = sum((n_in + 1) * n_out for n_in, n_out in self.shapes)

        self.params = np.zeros(self.param_count, dtype=np.float64)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        offset = 0
        for n_in, n_out in self.shapes:
            self.weights.append(self.params[offset : offset + n_in * n_out].reshape(n_in, n_out))
            offset += n_in * n_out
            self.biases.append(self.params[offset : offset + n_out])
            offset += n_out
        assert offset == self.param_count

        if rng is not None:
            self.init_params(rng, final_scale)

    def init_params(self, rng: np.random.Generator, final_scale: float = 0.01) -> None:
        """Uniform fan-in init; head layers scaled down for a tame initial output."""
        for i, ((n_in, n_out), w, b) in enumerate(zip(self.shapes, self.weights, self.biases)):
            bound = 1.0 / math.sqrt(n_in)
            if i >= self.n_hidden:
                bound *= final_scale
            w[...] = rng.uniform(-bound, bound, size=(n_in, n_out))
            b[...] = rng.uniform(-bound, bound, size=n_out)

    def _check_input(self, x: np.ndarray) -> None:
        if x.shape[-1] != self.layer_sizes[0]:
            raise ShapeMismatch(
                f"input has {x.shape[-1]} features, net expects {self.layer_sizes[0]}"
            )

    # -- inference -----------------------------------------------------------

    def forward(self, x: np.ndarray):
        """Head output(s) for one sample (1-D input) or a batch (2-D input)."""
        x = np.asarray(x, dtype=np.float64)
        self._check_input(x)
        if x.ndim == 1:
            outs = _kernels.mlp_forward1(x, self.weights, self.biases, self.head_code)
            return outs[0] if self.head != "gaussian" else (outs[0], outs[1])
        out, _ = self.forward_cached(x)
        return out

    def forward_cached(self, x: np.ndarray):
        """Batch forward keeping the activations needed by backward()."""
        x = np.asarray(x, dtype=np.float64)
        self._check_input(x)
        squeeze = x.ndim == 1
        a = np.atleast_2d(x)
        pre: list[np.ndarray] = []
        acts: list[np.ndarray] = [a]
        for w, b in zip(self.weights[: self.n_hidden], self.biases[: self.n_hidden]):
            z = a @ w + b
            a = np.maximum(z, 0.0)
            pre.append(z)
            acts.append(a)

        if self.head == "gaussian":
            mean = a @ self.weights[-2] + self.biases[-2]
            raw = a @ self.weights[-1] + self.biases[-1]
            log_std = np.clip(raw, LOG_STD_MIN, LOG_STD_MAX)
            out = (mean[0], log_std[0]) if squeeze else (mean, log_std)
            return out, _Cache(pre, acts, head_raw=raw, squeeze=squeeze)
        y = a @ self.weights[-1] + self.biases[-1]
        if self.head == "tanh":
            y = np.tanh(y)
        out = y[0] if squeeze else y
        return out, _Cache(pre, acts, head_raw=y, squeeze=squeeze)

    # -- gradients -------------------------------------------------------------

    def backward(self, cache: "_Cache", upstream):
        """Exact gradients of sum(upstream * output) w.r.t. params and input.

        upstream matches the forward output structure: an array for linear
        and tanh heads, a (d_mean, d_log_std) pair for the gaussian head.
        Returns (flat parameter gradient, input gradient).
        """
        grad = np.zeros_like(self.params)
        g_w: list[np.ndarray] = []
        g_b: list[np.ndarray] = []
        offset = 0
        for n_in, n_out in self.shapes:
            g_w.append(grad[offset : offset + n_in * n_out].reshape(n_in, n_out))
            offset += n_in * n_out
            g_b.append(grad[offset : offset + n_out])
            offset += n_out

        a_last = cache.acts[-1]
        if self.head == "gaussian":
            d_mean, d_log = upstream
            d_mean = np.atleast_2d(np.asarray(d_mean, dtype=np.float64))
            d_log = np.atleast_2d(np.asarray(d_log, dtype=np.float64))
            # clamp: no gradient where the raw log-std left the window
            d_log = d_log * ((cache.head_raw > LOG_STD_MIN) & (cache.head_raw < LOG_STD_MAX))
            g_w[-2][...] = a_last.T @ d_mean
            g_b[-2][...] = d_mean.sum(axis=0)
            g_w[-1][...] = a_last.T @ d_log
            g_b[-1][...] = d_log.sum(axis=0)
            d_a = d_mean @ self.weights[-2].T + d_log @ self.weights[-1].T
        else:
            d_y = np.atleast_2d(np.asarray(upstream, dtype=np.float64))
            if self.head == "tanh":
                d_y = d_y * (1.0 - cache.head_raw**2)
            g_w[-1][...] = a_last.T @ d_y
            g_b[-1][...] = d_y.sum(axis=0)
            d_a = d_y @ self.weights[-1].T

        for i in range(self.n_hidden - 1, -1, -1):
            d_z = d_a * (cache.pre[i] > 0.0)
            g_w[i][...] = cache.acts[i].T @ d_z
            g_b[i][...] = d_z.sum(axis=0)
            d_a = d_z @ self.weights[i].T

        return grad, (d_a[0] if cache.squeeze else d_a)

    # -- parameter transport ----------------------------------------------------

    def copy_params_from(self, other: "DenseNet") -> None:
        if other.param_count != self.param_count or other.shapes != self.shapes:
            raise ShapeMismatch("parameter layout mismatch")
        self.params[...] = other.params


class _Cache:
    __slots__ = ("pre", "acts", "head_raw", "squeeze")

    def __init__(self, pre, acts, head_raw, squeeze):
        self.pre = pre
        self.acts = acts
        self.head_raw = head_raw
        self.squeeze = squeeze


class Adam:
    """Bias-corrected Adam over a flat parameter vector, updated in place."""

    def __init__(self, param_count: int, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr = float(lr)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(param_count, dtype=np.float64)
        self.v = np.zeros(param_count, dtype=np.float64)
        self.t = 0

    def step(self, params: np.ndarray, grads: np.ndarray) -> None:
        if params.shape != self.m.shape or grads.shape != self.m.shape:
            raise ShapeMismatch("optimizer state does not match parameter shape")
        self.t += 1
        _kernels.adam_update(params, grads, self.m, self.v, self.t, self.lr, self.beta1, self.beta2, self.eps)

    def state_dict(self) -> dict:
        return {"lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps, "t": self.t}

    def load_state(self, meta: dict, m: np.ndarray, v: np.ndarray) -> None:
        self.lr = float(meta["lr"])
        self.beta1 = float(meta["beta1"])
        self.beta2 = float(meta["beta2"])
        self.eps = float(meta["eps"])
        self.t = int(meta["t"])
        self.m[...] = m
        self.v[...] = v


# -- squashed gaussian sampling ------------------------------------------------
#
# u = mean + std * noise,  a = tanh(u)
# log p(a) = sum_i [ -noise_i^2 / 2 - log_std_i - log sqrt(2 pi)
#                    - log(1 - a_i^2 + eps) ]
# The eps term keeps log p finite as |a| -> 1.


_ACTION_LIMIT = 1.0 - 1e-12  # float tanh saturates to exactly 1.0 for |u| > ~19


def squashed_gaussian_sample(mean: np.ndarray, log_std: np.ndarray, noise: np.ndarray):
    """Map unit-normal noise through the squashed gaussian; returns (action, log_prob)."""
    std = np.exp(log_std)
    a = np.clip(np.tanh(mean + std * noise), -_ACTION_LIMIT, _ACTION_LIMIT)
    logp = (-0.5 * noise**2 - log_std - _LOG_SQRT_2PI).sum(axis=-1)
    logp -= np.log(1.0 - a**2 + TANH_CORRECTION_EPS).sum(axis=-1)
    return a, logp


def squashed_gaussian_grads(action, noise, log_std, grad_action, grad_logp):
    """Backward through sampling: gradients w.r.t. mean and log_std.

    grad_action has the action's shape; grad_logp has one entry per sample.
    With noise held fixed (reparameterization):
        da/dmean      = 1 - a^2
        da/dlog_std   = (1 - a^2) * std * noise
        dlogp/da      = 2a / (1 - a^2 + eps)
        dlogp/dlog_std(direct) = -1
    """
    std = np.exp(log_std)
    one_m_a2 = 1.0 - action**2
    corr = 2.0 * action * one_m_a2 / (one_m_a2 + TANH_CORRECTION_EPS)
    gl = np.asarray(grad_logp)[..., None]
    common = grad_action * one_m_a2 + gl * corr
    return common, common * std * noise - gl


def deterministic_action(mean: np.ndarray) -> np.ndarray:
    return np.tanh(mean)
