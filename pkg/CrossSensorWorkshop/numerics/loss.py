# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


"""
Adversarial and segmentation objectives.

The adversarial value of a generator/discriminator pair is
    V(D, G) = E[log D(x_T)] + E[log(1 - D(G(x_S)))].
The discriminator ascends V, written here as descent on loss_d = -V; the generator minimises
the non-saturating loss_g = -E[log D(G(x_S))].
"""


from typing import Optional, Sequence, Tuple

import numpy as np

from ..definition import LABEL_NODATA, EmptyInputError, NumericsError, RangeError
from .tensor import Tensor, as_tensor, record


__all__ = [
    'gan_terms',
    'adversarial_value',
    'discriminator_accuracy',
    'softmax_xent',
    'log_softmax',
]


def _check_probability(x: Tensor, name: str) -> None:
    values = x.values
    if not np.all(np.isfinite(values)):
        raise NumericsError(f'Parameter <{name}> holds a non-finite value.')
    if values.size == 0:
        raise EmptyInputError(f'Parameter <{name}> is empty.')
    if np.any(values <= 0) or np.any(values >= 1):
        raise RangeError(f'Parameter <{name}> should be strictly inside (0, 1).')


def gan_terms(d_real: Tensor, d_fake: Tensor) -> Tuple[Tensor, Tensor]:
    """
    :param d_real: discriminator scores of real target-domain tiles, in (0, 1).
    :param d_fake: discriminator scores of generated tiles, in (0, 1).
    :return: (loss_d, loss_g), both scalars.
    """
    d_real, d_fake = as_tensor(d_real), as_tensor(d_fake)
    _check_probability(d_real, 'd_real')
    _check_probability(d_fake, 'd_fake')
    real, fake = d_real.values, d_fake.values
    n_real, n_fake = real.size, fake.size

    loss_d_value = -(np.mean(np.log(real)) + np.mean(np.log1p(-fake)))
    loss_d = record(
        np.asarray(loss_d_value, dtype=real.dtype),
        [d_real, d_fake],
        lambda g: [-g / (n_real * real), g / (n_fake * (1 - fake))],
    )
    loss_g = record(
        np.asarray(-np.mean(np.log(fake)), dtype=fake.dtype),
        [d_fake],
        lambda g: [-g / (n_fake * fake)],
    )
    return loss_d, loss_g


def adversarial_value(d_real: np.ndarray, d_fake: np.ndarray) -> float:
    """Value of the adversarial objective, for logging."""
    real = np.asarray(d_real, dtype=np.float64)
    fake = np.asarray(d_fake, dtype=np.float64)
    return float(np.mean(np.log(real)) + np.mean(np.log1p(-fake)))


def discriminator_accuracy(d_real: np.ndarray, d_fake: np.ndarray) -> float:
    """Share of patch scores on the right side of 0.5, real and fake weighted equally."""
    real = np.asarray(d_real)
    fake = np.asarray(d_fake)
    return 0.5 * (float(np.mean(real > 0.5)) + float(np.mean(fake < 0.5)))


def log_softmax(logits: np.ndarray, axis: int = 1) -> np.ndarray:
    shifted = logits - logits.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


def softmax_xent(logits: Tensor, targets: np.ndarray, ignore_code: int = LABEL_NODATA) -> Tensor:
    """
    Mean per-pixel cross-entropy over the pixels whose target is not <ignore_code>.
    :param logits: (N, K, H, W).
    :param targets: (N, H, W) class indices in [0, K) or <ignore_code>.
    """
    logits = as_tensor(logits)
    targets = np.asarray(targets)
    if logits.values.ndim != 4:
        raise NumericsError(f'Parameter <logits> should be 4-D, got shape {logits.shape}.')
    n, k, h, w = logits.shape
    if targets.shape != (n, h, w):
        raise NumericsError(f'Parameter <targets> should have shape {(n, h, w)}, got {targets.shape}.')
    valid = targets != ignore_code
    count = int(valid.sum())
    if count == 0:
        raise EmptyInputError('Every pixel of the batch is ignored.')
    index = targets.astype(np.int64)
    if np.any((index[valid] < 0) | (index[valid] >= k)):
        raise RangeError(f'Targets should be class indices in [0, {k}) or {ignore_code}.')
    index = np.where(valid, index, 0)

    log_p = log_softmax(logits.values, axis=1)
    picked = np.take_along_axis(log_p, index[:, None, :, :], axis=1)[:, 0]
    loss = np.asarray(-(picked * valid).sum() / count, dtype=logits.dtype)

    def _backward(g: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        grad = np.exp(log_p)
        np.put_along_axis(grad, index[:, None, :, :], np.take_along_axis(grad, index[:, None, :, :], axis=1) - 1, axis=1)
        grad *= valid[:, None, :, :]
        return [(grad * (g / count)).astype(logits.dtype, copy=False)]

    return record(loss, [logits], _backward)
