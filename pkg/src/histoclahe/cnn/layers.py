"""Forward and backward passes for the network's layer types.

Spatial layers take ``(C, H, W)`` or batched ``(N, C, H, W)`` arrays and
return outputs with the same batching.  Everything runs in float64.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "conv2d_forward",
    "conv2d_backward",
    "maxpool2_forward",
    "maxpool2_backward",
    "relu_forward",
    "relu_backward",
    "fc_forward",
    "fc_backward",
    "softmax",
    "softmax_cross_entropy",
    "zero_pad",
    "zero_pad_backward",
]


def _batched(x: np.ndarray, ndim: int):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == ndim - 1:
        return x[np.newaxis], True
    if x.ndim != ndim:
        raise ValueError(f"expected {ndim - 1}-D or {ndim}-D input, got shape {x.shape}")
    return x, False


def conv2d_forward(x, kernels, bias) -> np.ndarray:
    """Stride-1 valid cross-correlation: ``out[o,y,x] = b[o] + sum x[c,y+i,x+j] k[o,c,i,j]``."""
    xb, single = _batched(x, 4)
    kernels = np.asarray(kernels, dtype=np.float64)
    c_out, c_in, k, k2 = kernels.shape
    if k != k2 or xb.shape[1] != c_in:
        raise ValueError(f"kernel shape {kernels.shape} incompatible with input {xb.shape}")
    if k > xb.shape[2] or k > xb.shape[3]:
        raise ValueError(f"kernel size {k} exceeds input {xb.shape[2]}x{xb.shape[3]}")
    if np.shape(bias) != (c_out,):
        raise ValueError(f"bias shape {np.shape(bias)} does not match {c_out} output channels")
    windows = sliding_window_view(xb, (k, k), axis=(2, 3))  # N,C,H',W',k,k
    out = np.tensordot(windows, kernels, axes=([1, 4, 5], [1, 2, 3]))  # N,H',W',O
    out = out.transpose(0, 3, 1, 2) + np.asarray(bias, dtype=np.float64)[:, None, None]
    return out[0] if single else out


def conv2d_backward(dout, x, kernels):
    """Gradients ``(dx, dkernels, dbias)`` of a valid convolution."""
    xb, single = _batched(x, 4)
    db_, _ = _batched(dout, 4)
    kernels = np.asarray(kernels, dtype=np.float64)
    k = kernels.shape[2]
    windows = sliding_window_view(xb, (k, k), axis=(2, 3))
    dk = np.tensordot(db_, windows, axes=([0, 2, 3], [0, 2, 3]))  # O,C,k,k
    dbias = db_.sum(axis=(0, 2, 3))
    padded = np.pad(db_, ((0, 0), (0, 0), (k - 1, k - 1), (k - 1, k - 1)))
    dwin = sliding_window_view(padded, (k, k), axis=(2, 3))  # N,O,H,W,k,k
    dx = np.tensordot(dwin, kernels[:, :, ::-1, ::-1], axes=([1, 4, 5], [0, 2, 3]))  # N,H,W,C
    dx = dx.transpose(0, 3, 1, 2)
    return (dx[0] if single else dx), dk, dbias


def _pool_windows(xb: np.ndarray) -> np.ndarray:
    n, c, h, w = xb.shape
    if h % 2 or w % 2:
        raise ValueError(f"2x2 pooling needs even spatial dimensions, got {h}x{w}")
    return xb.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h // 2, w // 2, 4)


def maxpool2_forward(x) -> np.ndarray:
    xb, single = _batched(x, 4)
    out = _pool_windows(xb).max(axis=-1)
    return out[0] if single else out


def maxpool2_backward(dout, x) -> np.ndarray:
    """Route each upstream gradient to its window's first maximum (row-major)."""
    xb, single = _batched(x, 4)
    db_, _ = _batched(dout, 4)
    n, c, h, w = xb.shape
    arg = _pool_windows(xb).argmax(axis=-1)
    routed = np.zeros(arg.shape + (4,))
    np.put_along_axis(routed, arg[..., None], db_[..., None], axis=-1)
    dx = routed.reshape(n, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h, w)
    return dx[0] if single else dx


def relu_forward(x) -> np.ndarray:
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def relu_backward(dout, x) -> np.ndarray:
    return np.where(np.asarray(x) > 0, dout, 0.0)


def fc_forward(x, weights, bias) -> np.ndarray:
    """``W @ x + b`` for ``x`` of shape ``(n,)`` or ``(N, n)``."""
    x = np.asarray(x, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 2 or x.shape[-1] != weights.shape[1] or np.shape(bias) != (weights.shape[0],):
        raise ValueError(f"fully connected shapes disagree: x{x.shape}, W{weights.shape}, b{np.shape(bias)}")
    return x @ weights.T + bias


def fc_backward(dout, x, weights):
    dout = np.asarray(dout, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    dx = dout @ weights
    if x.ndim == 1:
        return dx, np.outer(dout, x), dout.copy()
    return dx, dout.T @ x, dout.sum(axis=0)


def zero_pad(x, pad: int) -> np.ndarray:
    xb, single = _batched(x, 4)
    out = np.pad(xb, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    return out[0] if single else out


def zero_pad_backward(dout, pad: int) -> np.ndarray:
    d = np.asarray(dout)
    return d[..., pad:d.shape[-2] - pad, pad:d.shape[-1] - pad]


def softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits, true_class):
    """Cross-entropy of a softmax and its gradient with respect to the logits.

    For a batch (``logits`` of shape ``(N, K)``) the loss is the batch mean and
    the gradient is scaled accordingly.
    """
    z = np.asarray(logits, dtype=np.float64)
    single = z.ndim == 1
    zb = z[np.newaxis] if single else z
    labels = np.atleast_1d(np.asarray(true_class, dtype=np.int64))
    k = zb.shape[1]
    if k < 2:
        raise ValueError("softmax needs at least two classes")
    if labels.shape != (zb.shape[0],):
        raise ValueError("one label per row of logits required")
    if (labels < 0).any() or (labels >= k).any():
        raise IndexError(f"class index out of range for {k} classes")
    shifted = zb - zb.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(zb.shape[0])
    losses = log_norm - shifted[rows, labels]
    grad = np.exp(shifted - log_norm[:, None])
    grad[rows, labels] -= 1.0
    if single:
        return float(losses[0]), grad[0]
    return float(losses.mean()), grad / zb.shape[0]
