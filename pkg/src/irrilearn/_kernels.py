"""Hot numeric kernels for the policy network.

Single-source functions written in the numpy subset numba compiles:
by default they run jitted; setting IRRILEARN_NUMBA=0 (or a missing
numba install) selects the same functions as plain numpy, which is the
reference path for debugging. benchmarks/bench_backends.py compares the
two.

All kernels operate on a flat float64 parameter vector laid out
layer-by-layer: weights row-major as (n_out, n_in), then that layer's
bias when present. The first hidden layer carries a bias only when
bias_first is nonzero; a network with no hidden layers always has an
output bias. Kernels return a status int: -1 on success, otherwise the
index of the first layer that produced a non-finite value (the caller
raises with context, since jitted code cannot).
"""

from __future__ import annotations

import os

import numpy as np


def _numba_requested() -> bool:
    return os.environ.get("IRRILEARN_NUMBA", "1").strip().lower() not in (
        "0", "false", "no", "off",
    )


try:
    import numba as _numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via env flag instead
    _HAVE_NUMBA = False

NUMBA_ENABLED = _HAVE_NUMBA and _numba_requested()
BACKEND = "numba" if NUMBA_ENABLED else "numpy"


def _jit(fn):
    if NUMBA_ENABLED:
        return _numba.njit(cache=True)(fn)
    return fn


def _has_bias(layer: int, n_affine: int, bias_first: int) -> bool:
    return layer > 0 or n_affine == 1 or bias_first == 1


@_jit
def forward_probs(theta, dims, bias_first, x):
    """Affine+ReLU stack then shift-stable softmax. Returns (probs, status)."""
    n_affine = dims.shape[0] - 1
    a = x.astype(np.float64)
    t_off = 0
    for layer in range(n_affine):
        n_in = dims[layer]
        n_out = dims[layer + 1]
        w = theta[t_off:t_off + n_out * n_in].reshape(n_out, n_in)
        t_off += n_out * n_in
        z = np.dot(w, a)
        if layer > 0 or n_affine == 1 or bias_first == 1:
            z = z + theta[t_off:t_off + n_out]
            t_off += n_out
        if not np.isfinite(z).all():
            return np.full(dims[dims.shape[0] - 1], np.nan), layer
        if layer < n_affine - 1:
            a = np.maximum(z, 0.0)
        else:
            m = z.max()
            e = np.exp(z - m)
            return e / e.sum(), -1
    return np.full(dims[dims.shape[0] - 1], np.nan), 0  # unreachable: n_affine >= 1


@_jit
def grad_log_prob_kernel(theta, dims, bias_first, x, action):
    """Exact d log probs[action] / d theta by backprop.

    Returns (grad, probs, status); grad shares theta's layout.
    """
    n_layers = dims.shape[0]
    n_affine = n_layers - 1
    grad = np.zeros(theta.shape[0])

    total_act = 0
    for i in range(n_layers):
        total_act += dims[i]
    act = np.empty(total_act)        # a_0 (input) .. a_L (probs)
    pre = np.empty(total_act - dims[0])  # pre-activation z per affine map

    act[: dims[0]] = x
    a_off = 0
    z_off = 0
    t_off = 0
    for layer in range(n_affine):
        n_in = dims[layer]
        n_out = dims[layer + 1]
        a = act[a_off:a_off + n_in]
        w = theta[t_off:t_off + n_out * n_in].reshape(n_out, n_in)
        t_off += n_out * n_in
        z = np.dot(w, a)
        if layer > 0 or n_affine == 1 or bias_first == 1:
            z = z + theta[t_off:t_off + n_out]
            t_off += n_out
        if not np.isfinite(z).all():
            return grad, np.full(dims[n_layers - 1], np.nan), layer
        pre[z_off:z_off + n_out] = z
        a_off += n_in
        if layer < n_affine - 1:
            act[a_off:a_off + n_out] = np.maximum(z, 0.0)
        else:
            m = z.max()
            e = np.exp(z - m)
            act[a_off:a_off + n_out] = e / e.sum()
        z_off += n_out

    probs = act[total_act - dims[n_layers - 1]:].copy()
    g = -probs.copy()
    g[action] += 1.0  # d log p_a / d logits = onehot_a - probs

    for layer in range(n_affine - 1, -1, -1):
        n_in = dims[layer]
        n_out = dims[layer + 1]
        t0 = 0
        for k in range(layer):
            t0 += dims[k] * dims[k + 1]
            if k > 0 or n_affine == 1 or bias_first == 1:
                t0 += dims[k + 1]
        a0 = 0
        for k in range(layer):
            a0 += dims[k]
        a = act[a0:a0 + n_in]
        w = theta[t0:t0 + n_out * n_in].reshape(n_out, n_in)
        gw = np.outer(g, a)
        grad[t0:t0 + n_out * n_in] = gw.ravel()
        if layer > 0 or n_affine == 1 or bias_first == 1:
            grad[t0 + n_out * n_in:t0 + n_out * n_in + n_out] = g
        if layer > 0:
            back = np.dot(g, w)  # = W^T g
            z0 = 0
            for k in range(layer - 1):
                z0 += dims[k + 1]
            zprev = pre[z0:z0 + n_in]
            g = back * (zprev > 0.0)
    return grad, probs, -1


@_jit
def update_params(theta, scale, grad):
    """theta += scale * grad in place; False when any entry went non-finite."""
    theta += scale * grad
    return np.isfinite(theta).all()
