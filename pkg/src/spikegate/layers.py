"""Forward/backward kernels for the fixed layer vocabulary.

Every kernel is a pure function: forward returns ``(output, cache)``,
backward consumes the upstream gradient plus that cache and returns the
input gradient and any parameter gradients. No implicit broadcasting —
shape adaptation is explicit so failures stay local. All math is float64.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ShapeError, SpikeGateError
from .tensor import require_finite


def out_extent(n: int, k: int, stride: int, pad: int) -> int:
    """Spatial output extent: floor((n + 2p - k)/s) + 1."""
    return (n + 2 * pad - k) // stride + 1


# ---------------------------------------------------------------------------
# affine


def affine_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """y = x @ w + b. Inputs with >2 dims are flattened per sample."""
    orig_shape = x.shape
    x2 = x.reshape(x.shape[0], -1)
    if x2.shape[1] != w.shape[0]:
        raise ShapeError("affine", (w.shape[0],), (x2.shape[1],), what="feature")
    y = x2 @ w + b
    return y, (x2, orig_shape)


def affine_backward(g: np.ndarray, cache, w: np.ndarray):
    x2, orig_shape = cache
    dx = (g @ w.T).reshape(orig_shape)
    dw = x2.T @ g
    db = g.sum(axis=0)
    return dx, dw, db


# ---------------------------------------------------------------------------
# conv2d (im2col + GEMM; col2im scatter via the kernel-offset loop)


def _im2col(x: np.ndarray, kh: int, kw: int, stride: int, pad: int):
    n, c, h, w = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    ho = out_extent(h, kh, stride, pad)
    wo = out_extent(w, kw, stride, pad)
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    # win: [n, c, ho, wo, kh, kw] -> cols [n*ho*wo, c*kh*kw]
    cols = np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(
        n * ho * wo, c * kh * kw
    )
    return cols, xp.shape, ho, wo


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int, pad: int):
    if x.ndim != 4:
        raise ShapeError("conv", ("N", "C", "H", "W"), x.shape)
    n, c, h, wd = x.shape
    cout, cin, kh, kw = w.shape
    if cin != c:
        raise ShapeError("conv", (cin,), (c,), what="channel")
    cols, padded_shape, ho, wo = _im2col(x, kh, kw, stride, pad)
    y = cols @ w.reshape(cout, -1).T
    y = y.reshape(n, ho, wo, cout).transpose(0, 3, 1, 2) + b[None, :, None, None]
    cache = (cols, x.shape, padded_shape, ho, wo, stride, pad)
    return np.ascontiguousarray(y), cache


def conv2d_backward(g: np.ndarray, cache, w: np.ndarray):
    cols, x_shape, padded_shape, ho, wo, stride, pad = cache
    n, c, h, wd = x_shape
    cout, cin, kh, kw = w.shape
    g2 = np.ascontiguousarray(g.transpose(0, 2, 3, 1)).reshape(n * ho * wo, cout)
    dw = (g2.T @ cols).reshape(w.shape)
    db = g2.sum(axis=0)
    dcols = (g2 @ w.reshape(cout, -1)).reshape(n, ho, wo, c, kh, kw)
    dxp = np.zeros(padded_shape)
    for ki in range(kh):
        for kj in range(kw):
            dxp[:, :, ki : ki + stride * ho : stride, kj : kj + stride * wo : stride] += (
                dcols[:, :, :, :, ki, kj].transpose(0, 3, 1, 2)
            )
    dx = dxp[:, :, pad : pad + h, pad : pad + wd] if pad else dxp
    return np.ascontiguousarray(dx), dw, db


# ---------------------------------------------------------------------------
# pooling


def _pool_windows(x: np.ndarray, k: int, stride: int):
    n, c, h, w = x.shape
    ho = out_extent(h, k, stride, 0)
    wo = out_extent(w, k, stride, 0)
    win = sliding_window_view(x, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    return win.reshape(n, c, ho, wo, k * k), ho, wo


def maxpool_forward(x: np.ndarray, k: int, stride: int):
    win, ho, wo = _pool_windows(x, k, stride)
    idx = win.argmax(axis=-1)
    y = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
    cache = (idx, x.shape, k, stride, ho, wo)
    return np.ascontiguousarray(y), cache


def maxpool_backward(g: np.ndarray, cache):
    idx, x_shape, k, stride, ho, wo = cache
    dx = np.zeros(x_shape)
    for m in range(k * k):
        ki, kj = divmod(m, k)
        contrib = np.where(idx == m, g, 0.0)
        dx[:, :, ki : ki + stride * ho : stride, kj : kj + stride * wo : stride] += contrib
    return dx


def avgpool_forward(x: np.ndarray, k: int, stride: int):
    win, ho, wo = _pool_windows(x, k, stride)
    y = win.mean(axis=-1)
    cache = (x.shape, k, stride, ho, wo)
    return np.ascontiguousarray(y), cache


def avgpool_backward(g: np.ndarray, cache):
    x_shape, k, stride, ho, wo = cache
    dx = np.zeros(x_shape)
    share = g / (k * k)
    for m in range(k * k):
        ki, kj = divmod(m, k)
        dx[:, :, ki : ki + stride * ho : stride, kj : kj + stride * wo : stride] += share
    return dx


# ---------------------------------------------------------------------------
# activations


def relu_forward(x: np.ndarray):
    mask = x > 0
    return np.where(mask, x, 0.0), mask


def relu_backward(g: np.ndarray, mask: np.ndarray):
    return np.where(mask, g, 0.0)


def sigmoid_forward(x: np.ndarray):
    y = 1.0 / (1.0 + np.exp(-x))
    return y, y


def sigmoid_backward(g: np.ndarray, y: np.ndarray):
    return g * y * (1.0 - y)


# ---------------------------------------------------------------------------
# dropout
#
# Training applies a seeded Bernoulli keep-mask (no rescale); inference
# multiplies by the keep probability. ``mask_shape`` lets the spiking engine
# share one mask across timesteps: a mask of shape [N, ...] is tiled over the
# merged [T*N, ...] batch.


def dropout_forward(x: np.ndarray, p_drop: float, train: bool,
                    rng: np.random.Generator | None, tile: int = 1):
    keep = 1.0 - p_drop
    if not train:
        return x * keep, None
    if rng is None:
        raise SpikeGateError("dropout in training mode requires a seeded rng")
    base_shape = (x.shape[0] // tile,) + x.shape[1:]
    mask = rng.random(base_shape) < keep
    if tile > 1:
        mask = np.tile(mask, (tile,) + (1,) * (mask.ndim - 1))
    return x * mask, mask


def dropout_backward(g: np.ndarray, mask, p_drop: float):
    if mask is None:
        return g * (1.0 - p_drop)
    return g * mask


# ---------------------------------------------------------------------------
# batchnorm (per-channel over batch + spatial axes)


def batchnorm_forward(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray,
                      running_mean: np.ndarray, running_var: np.ndarray,
                      train: bool, momentum: float = 0.1, eps: float = 1e-5):
    axes = (0,) if x.ndim == 2 else (0, 2, 3)
    shape = (1, -1) if x.ndim == 2 else (1, -1, 1, 1)
    if train:
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)
        running_mean *= 1.0 - momentum
        running_mean += momentum * mean
        running_var *= 1.0 - momentum
        running_var += momentum * var
    else:
        mean, var = running_mean, running_var
    istd = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean.reshape(shape)) * istd.reshape(shape)
    y = gamma.reshape(shape) * xhat + beta.reshape(shape)
    cache = (xhat, istd, shape, axes, train)
    return y, cache


def batchnorm_backward(g: np.ndarray, cache, gamma: np.ndarray):
    xhat, istd, shape, axes, train = cache
    dgamma = (g * xhat).sum(axis=axes)
    dbeta = g.sum(axis=axes)
    if not train:
        dx = g * gamma.reshape(shape) * istd.reshape(shape)
        return dx, dgamma, dbeta
    dxhat = g * gamma.reshape(shape)
    dx = (
        dxhat
        - dxhat.mean(axis=axes).reshape(shape)
        - xhat * (dxhat * xhat).mean(axis=axes).reshape(shape)
    ) * istd.reshape(shape)
    return dx, dgamma, dbeta


def check_input(x: np.ndarray, layer_id: str) -> np.ndarray:
    return require_finite(np.asarray(x, dtype=np.float64), f"layer {layer_id} input")
