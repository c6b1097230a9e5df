# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


"""
Differentiable ops used by the generator, the discriminator and the segmenter.

Every op takes Tensors, computes its output with numpy in the dtype of its inputs and, when
an input lives on a tape, records a closure that maps the output gradient back to the inputs.
No op broadcasts: elementwise operands must have equal shapes.
"""


from typing import Optional, Sequence, Tuple
from enum import Enum

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from ..definition import NumericsError
from .tensor import Tensor, as_tensor, record


__all__ = [
    'INSTANCE_EPS',
    'LEAKY_SLOPE',
    'SIGMOID_EPS',
    'ActivationEnum',
    'conv2d',
    'conv_output_size',
    'upsample2x',
    'activation',
    'instance_mean',
    'instance_std',
    'instance_stats',
    'adain_apply',
    'add',
    'mul',
    'scale',
    'reduce_sum',
    'reduce_mean',
    'linear',
]


INSTANCE_EPS: float = 1e-5
LEAKY_SLOPE: float = 0.2
# Keeps Sigmoid strictly inside (0, 1) in float32 as well.
SIGMOID_EPS: float = 1e-7


def _dtype(*items: Tensor) -> np.dtype:
    return np.result_type(*[item.values.dtype for item in items])


def _check_rank(x: Tensor, rank: int, name: str) -> None:
    if x.values.ndim != rank:
        raise NumericsError(f'Parameter <{name}> should be {rank}-D, got shape {x.shape}.')


def _check_same_shape(a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise NumericsError(f'Operand shapes differ: {a.shape} and {b.shape}.')


def conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel) // stride + 1


def conv2d(x: Tensor, weights: Tensor, bias: Optional[Tensor] = None, stride: int = 1, padding: int = 0) -> Tensor:
    """
    2-D cross-correlation.
    :param x: (N, Cin, H, W).
    :param weights: (Cout, Cin, kH, kW).
    :param bias: (Cout,) or None.
    :return: (N, Cout, Ho, Wo) with Ho = floor((H + 2 * padding - kH) / stride) + 1.
    """
    x, weights = as_tensor(x), as_tensor(weights)
    _check_rank(x, 4, 'x')
    _check_rank(weights, 4, 'weights')
    n, c, h, w = x.shape
    c_out, c_in, kh, kw = weights.shape
    if c != c_in:
        raise NumericsError(f'Input has {c} channels, kernel expects {c_in}.')
    if stride < 1:
        raise NumericsError(f'Parameter <stride> should be at least 1, got {stride}.')
    if padding < 0:
        raise NumericsError(f'Parameter <padding> should be non-negative, got {padding}.')
    inputs = [x, weights]
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (c_out,):
            raise NumericsError(f'Bias shape should be ({c_out},), got {bias.shape}.')
        inputs.append(bias)
    ho = conv_output_size(h, kh, stride, padding)
    wo = conv_output_size(w, kw, stride, padding)
    if ho < 1 or wo < 1:
        raise NumericsError(f'Kernel {kh}x{kw} does not fit input {h}x{w} with padding {padding}.')

    dtype = _dtype(*inputs)
    xp = np.pad(x.values.astype(dtype, copy=False), ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    # (N, Cin, Ho, Wo, kH, kW)
    windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride][:, :, :ho, :wo]
    w_values = weights.values.astype(dtype, copy=False)
    out = np.tensordot(windows, w_values, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    if bias is not None:
        out = out + bias.values.astype(dtype, copy=False)[None, :, None, None]
    out = np.ascontiguousarray(out, dtype=dtype)

    def _backward(g: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        d_weights = np.tensordot(g, windows, axes=([0, 2, 3], [0, 2, 3]))
        # (N, Ho, Wo, Cin, kH, kW)
        d_cols = np.tensordot(g, w_values, axes=([1], [0]))
        d_xp = np.zeros_like(xp)
        for i in range(kh):
            for j in range(kw):
                d_xp[:, :, i:i + stride * (ho - 1) + 1:stride, j:j + stride * (wo - 1) + 1:stride] += \
                    d_cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        d_x = d_xp[:, :, padding:padding + h, padding:padding + w]
        result = [d_x, d_weights]
        if bias is not None:
            result.append(g.sum(axis=(0, 2, 3)))
        return result

    return record(out, inputs, _backward)


def upsample2x(x: Tensor) -> Tensor:
    """Nearest-neighbour duplication, (N, C, H, W) -> (N, C, 2H, 2W)."""
    x = as_tensor(x)
    _check_rank(x, 4, 'x')
    n, c, h, w = x.shape
    out = x.values.repeat(2, axis=2).repeat(2, axis=3)

    def _backward(g: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        return [g.reshape(n, c, h, 2, w, 2).sum(axis=(3, 5))]

    return record(out, [x], _backward)


class ActivationEnum(Enum):
    ReLU = 'relu'
    LeakyReLU = 'leaky_relu'
    Sigmoid = 'sigmoid'
    Tanh = 'tanh'

    def forward(self, values: np.ndarray) -> np.ndarray:
        if self == ActivationEnum.ReLU:
            return np.maximum(values, 0)
        elif self == ActivationEnum.LeakyReLU:
            return np.where(values > 0, values, values * LEAKY_SLOPE)
        elif self == ActivationEnum.Sigmoid:
            return np.clip(expit(values), SIGMOID_EPS, 1.0 - SIGMOID_EPS)
        else:
            return np.tanh(values)

    def derivative(self, values: np.ndarray, output: np.ndarray) -> np.ndarray:
        if self == ActivationEnum.ReLU:
            return (values > 0).astype(values.dtype)
        elif self == ActivationEnum.LeakyReLU:
            return np.where(values > 0, 1.0, LEAKY_SLOPE).astype(values.dtype)
        elif self == ActivationEnum.Sigmoid:
            return output * (1 - output)
        else:
            return 1 - output * output


def activation(x: Tensor, kind: ActivationEnum) -> Tensor:
    x = as_tensor(x)
    kind = ActivationEnum(kind)
    out = kind.forward(x.values).astype(x.dtype, copy=False)

    def _backward(g: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        return [g * kind.derivative(x.values, out)]

    return record(out, [x], _backward)


def instance_mean(x: Tensor) -> Tensor:
    """Per (sample, channel) spatial mean, (N, C, H, W) -> (N, C)."""
    x = as_tensor(x)
    _check_rank(x, 4, 'x')
    n, c, h, w = x.shape
    if h * w < 1:
        raise NumericsError('Instance statistics need at least one pixel.')
    out = x.values.mean(axis=(2, 3))

    def _backward(g: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        return [np.broadcast_to(g[:, :, None, None] / (h * w), x.shape).astype(x.dtype)]

    return record(out, [x], _backward)


def instance_std(x: Tensor, eps: float = INSTANCE_EPS) -> Tensor:
    """Per (sample, channel) population std with <eps> under the square root."""
    x = as_tensor(x)
    _check_rank(x, 4, 'x')
    n, c, h, w = x.shape
    if h * w < 1:
        raise NumericsError('Instance statistics need at least one pixel.')
    mu = x.values.mean(axis=(2, 3), keepdims=True)
    centered = x.values - mu
    sigma = np.sqrt(np.mean(centered * centered, axis=(2, 3)) + eps).astype(x.dtype)

    def _backward(g: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        return [g[:, :, None, None] * centered / (h * w * sigma[:, :, None, None])]

    return record(sigma, [x], _backward)


def instance_stats(x: Tensor, eps: float = INSTANCE_EPS) -> Tuple[Tensor, Tensor]:
    return instance_mean(x), instance_std(x, eps)


def adain_apply(content: Tensor, style_mu: Tensor, style_sigma: Tensor, eps: float = INSTANCE_EPS) -> Tensor:
    """
    Adaptive instance normalization: sigma_s * (x - mu_x) / sigma_x + mu_s, per (sample, channel).
    :param content: (N, C, H, W).
    :param style_mu: (N, C).
    :param style_sigma: (N, C).
    """
    content, style_mu, style_sigma = as_tensor(content), as_tensor(style_mu), as_tensor(style_sigma)
    _check_rank(content, 4, 'content')
    n, c, h, w = content.shape
    for name, item in [('style_mu', style_mu), ('style_sigma', style_sigma)]:
        if item.shape != (n, c):
            raise NumericsError(f'Parameter <{name}> should have shape {(n, c)}, got {item.shape}.')
    dtype = _dtype(content, style_mu, style_sigma)
    x = content.values.astype(dtype, copy=False)
    mu = x.mean(axis=(2, 3), keepdims=True)
    sigma = np.sqrt(np.mean((x - mu) ** 2, axis=(2, 3), keepdims=True) + eps).astype(dtype)
    normalized = (x - mu) / sigma
    s = style_sigma.values.astype(dtype, copy=False)[:, :, None, None]
    m = style_mu.values.astype(dtype, copy=False)[:, :, None, None]
    out = (s * normalized + m).astype(dtype, copy=False)

    def _backward(g: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        gs = g * s
        d_x = (gs - gs.mean(axis=(2, 3), keepdims=True)
               - normalized * (gs * normalized).mean(axis=(2, 3), keepdims=True)) / sigma
        d_mu = g.sum(axis=(2, 3))
        d_sigma = (g * normalized).sum(axis=(2, 3))
        return [d_x, d_mu, d_sigma]

    return record(out, [content, style_mu, style_sigma], _backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_same_shape(a, b)
    out = (a.values + b.values).astype(_dtype(a, b), copy=False)
    return record(out, [a, b], lambda g: [g, g])


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_same_shape(a, b)
    out = (a.values * b.values).astype(_dtype(a, b), copy=False)
    return record(out, [a, b], lambda g: [g * b.values, g * a.values])


def scale(x: Tensor, factor: float) -> Tensor:
    x = as_tensor(x)
    out = (x.values * factor).astype(x.dtype, copy=False)
    return record(out, [x], lambda g: [g * factor])


def reduce_sum(x: Tensor) -> Tensor:
    x = as_tensor(x)
    out = np.asarray(x.values.sum(), dtype=x.dtype)

    def _backward(g: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        return [np.full(x.shape, g, dtype=x.dtype)]

    return record(out, [x], _backward)


def reduce_mean(x: Tensor) -> Tensor:
    x = as_tensor(x)
    count = max(x.size, 1)
    out = np.asarray(x.values.mean(), dtype=x.dtype)

    def _backward(g: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        return [np.full(x.shape, g / count, dtype=x.dtype)]

    return record(out, [x], _backward)


def linear(x: Tensor, weights: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """
    Dense layer.
    :param x: (N, in).
    :param weights: (out, in).
    :param bias: (out,) or None.
    """
    x, weights = as_tensor(x), as_tensor(weights)
    _check_rank(x, 2, 'x')
    _check_rank(weights, 2, 'weights')
    if x.shape[1] != weights.shape[1]:
        raise NumericsError(f'Input has {x.shape[1]} features, weights expect {weights.shape[1]}.')
    inputs = [x, weights]
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (weights.shape[0],):
            raise NumericsError(f'Bias shape should be ({weights.shape[0]},), got {bias.shape}.')
        inputs.append(bias)
    dtype = _dtype(*inputs)
    out = x.values.astype(dtype, copy=False) @ weights.values.astype(dtype, copy=False).T
    if bias is not None:
        out = out + bias.values.astype(dtype, copy=False)[None, :]
    out = out.astype(dtype, copy=False)

    def _backward(g: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        result = [g @ weights.values, g.T @ x.values]
        if bias is not None:
            result.append(g.sum(axis=0))
        return result

    return record(out, inputs, _backward)
