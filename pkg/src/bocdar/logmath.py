"""Log-domain helpers shared by the engines, oracle and evaluation code."""

import numpy as np

NEG_INF = -np.inf


def lse(a, axis=None):
    """Numerically stable ``log(sum(exp(a)))`` that tolerates all ``-inf`` input.

    Empty input (along ``axis``) and all ``-inf`` input both give ``-inf``.
    """
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        if axis is None:
            return NEG_INF
        shape = list(a.shape)
        del shape[axis]
        return np.full(shape, NEG_INF)
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    if axis is None:
        return float(out.reshape(()))
    return np.squeeze(out, axis=axis)


def normalize(log_w):
    """Turn log weights into probabilities summing to one."""
    log_w = np.asarray(log_w, dtype=float)
    total = lse(log_w)
    if total == NEG_INF:
        raise ValueError("cannot normalize: all weights are zero")
    return np.exp(log_w - total)


def ratio(log_num, log_den):
    """``exp(log_num - log_den)`` clipped to [0, 1]; 0 when the numerator is empty."""
    if log_num == NEG_INF:
        return 0.0
    return float(min(1.0, max(0.0, np.exp(log_num - log_den))))


def argmax_first(values):
    """Index of the maximum with ties resolved towards the smallest index."""
    return int(np.argmax(np.asarray(values)))
