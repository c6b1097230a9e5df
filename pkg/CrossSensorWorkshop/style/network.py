# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


"""
Style generator and patch discriminator.

Generator:
    encoder     conv 3x3 stride 2: 6 -> 32 -> 64 -> 128 (ReLU after the first two)
    bottleneck  AdaIN with (mu, sigma) mapped from the 12-value target style code
    decoder     upsample + conv 3x3: 128 -> 64 -> 32 -> 6 (ReLU after the first two)
    output      tanh(atanh(x) + decoder output)

The last decoder conv starts at zero, so an untrained generator returns (almost exactly) its input.

Discriminator:
    conv 4x4 stride 2: 6 -> 32 -> 64 -> 128 -> 1, LeakyReLU(0.2) between, Sigmoid head.
    A 64 x 64 tile gets a 4 x 4 map of patch scores.
"""


from typing import Any, Dict, List, Optional, Tuple, Union
from dataclasses import dataclass

import numpy as np

from ..definition import Raster, DimensionError, RangeError
from ..numerics import (
    Tensor,
    ActivationEnum,
    ParameterSpec,
    ParameterSet,
    conv2d,
    upsample2x,
    activation,
    adain_apply,
    linear,
    add,
    scale,
)


__all__ = [
    'STYLE_BANDS',
    'DomainStyle',
    'GeneratorParams',
    'DiscriminatorParams',
    'generator_apply',
    'discriminator_apply',
    'generator_forward',
    'discriminator_forward',
]


STYLE_BANDS: int = 6
_INPUT_CLIP: float = 0.999
# Keeps the Tanh output strictly inside (-1, 1) in float32.
_OUTPUT_SCALE: float = 1.0 - 1e-6


@dataclass(frozen=True)
class DomainStyle(object):
    """Per-band mean and std of a domain, over all valid pixels, in [-1, 1] space."""
    mean: Tuple[float, ...]
    std: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, 'mean', tuple(float(v) for v in self.mean))
        object.__setattr__(self, 'std', tuple(float(v) for v in self.std))
        if len(self.mean) != STYLE_BANDS or len(self.std) != STYLE_BANDS:
            raise DimensionError(
                f'DomainStyle should have {STYLE_BANDS} bands, got {len(self.mean)} means and {len(self.std)} stds.'
            )
        if any(v < 0 or not np.isfinite(v) for v in self.std):
            raise RangeError(f'DomainStyle stds should be finite and non-negative, got {self.std}.')
        if any(not np.isfinite(v) for v in self.mean):
            raise RangeError(f'DomainStyle means should be finite, got {self.mean}.')

    def __repr__(self) -> str:
        return f'<DomainStyle(mean={[round(v, 4) for v in self.mean]}, std={[round(v, 4) for v in self.std]})>'

    @property
    def bands(self) -> int:
        return len(self.mean)

    def code(self) -> np.ndarray:
        """The 12-value style code fed to the generator: means followed by stds."""
        return np.asarray(self.mean + self.std, dtype=np.float32)

    def to_dict(self) -> Dict[str, Any]:
        return {'mean': list(self.mean), 'std': list(self.std)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DomainStyle':
        return cls(mean=tuple(data['mean']), std=tuple(data['std']))


def _conv(name: str, c_out: int, c_in: int, k: int, zero_init: bool = False) -> List[ParameterSpec]:
    fan_in = c_in * k * k
    return [
        ParameterSpec(f'{name}_w', (c_out, c_in, k, k), fan_in, zero_init),
        ParameterSpec(f'{name}_b', (c_out,), fan_in, zero_init),
    ]


class GeneratorParams(ParameterSet):
    kind = 'generator'

    def layout(self) -> List[ParameterSpec]:
        code = 2 * STYLE_BANDS
        return (
            _conv('enc1', 32, STYLE_BANDS, 3)
            + _conv('enc2', 64, 32, 3)
            + _conv('enc3', 128, 64, 3)
            + [
                ParameterSpec('style_mu_w', (128, code), code),
                ParameterSpec('style_mu_b', (128,), code),
                ParameterSpec('style_sigma_w', (128, code), code),
                ParameterSpec('style_sigma_b', (128,), code),
            ]
            + _conv('dec1', 64, 128, 3)
            + _conv('dec2', 32, 64, 3)
            + _conv('dec3', STYLE_BANDS, 32, 3, zero_init=True)
        )


class DiscriminatorParams(ParameterSet):
    kind = 'discriminator'

    def layout(self) -> List[ParameterSpec]:
        return (
            _conv('d1', 32, STYLE_BANDS, 4)
            + _conv('d2', 64, 32, 4)
            + _conv('d3', 128, 64, 4)
            + _conv('d4', 1, 128, 4)
        )


def _check_batch(x: np.ndarray, multiple: int, name: str) -> None:
    if x.ndim != 4 or x.shape[1] != STYLE_BANDS:
        raise DimensionError(f'{name} input should be (N, {STYLE_BANDS}, H, W), got {x.shape}.')
    if x.shape[2] % multiple or x.shape[3] % multiple or x.shape[2] < multiple or x.shape[3] < multiple:
        raise DimensionError(f'{name} input size {x.shape[2]}x{x.shape[3]} should be a multiple of {multiple}.')


def generator_apply(
        p: Dict[str, Tensor],
        x: np.ndarray,
        style_code: np.ndarray,
        internals: Optional[Dict[str, np.ndarray]] = None,
) -> Tensor:
    """
    Forward pass on parameter tensors (watched or constant).
    :param x: (N, 6, H, W) in [-1, 1], H and W multiples of 8.
    :param style_code: (12,) or (N, 12).
    :param internals: when given, receives 'content', 'bottleneck', 'style_mu' and 'style_sigma'.
    """
    _check_batch(x, 8, 'Generator')
    n = x.shape[0]
    code = np.asarray(style_code, dtype=x.dtype)
    if code.ndim == 1:
        code = np.broadcast_to(code, (n, code.size)).copy()
    if code.shape != (n, 2 * STYLE_BANDS):
        raise DimensionError(f'Style code should be (N, {2 * STYLE_BANDS}), got {code.shape}.')
    code_t = Tensor(code)

    h = activation(conv2d(Tensor(x), p['enc1_w'], p['enc1_b'], stride=2, padding=1), ActivationEnum.ReLU)
    h = activation(conv2d(h, p['enc2_w'], p['enc2_b'], stride=2, padding=1), ActivationEnum.ReLU)
    h = conv2d(h, p['enc3_w'], p['enc3_b'], stride=2, padding=1)
    style_mu = linear(code_t, p['style_mu_w'], p['style_mu_b'])
    style_sigma = scale(activation(linear(code_t, p['style_sigma_w'], p['style_sigma_b']), ActivationEnum.Sigmoid), 2.0)
    z = adain_apply(h, style_mu, style_sigma)
    if internals is not None:
        internals['content'] = h.values
        internals['bottleneck'] = z.values
        internals['style_mu'] = style_mu.values
        internals['style_sigma'] = style_sigma.values

    d = activation(conv2d(upsample2x(z), p['dec1_w'], p['dec1_b'], padding=1), ActivationEnum.ReLU)
    d = activation(conv2d(upsample2x(d), p['dec2_w'], p['dec2_b'], padding=1), ActivationEnum.ReLU)
    d = conv2d(upsample2x(d), p['dec3_w'], p['dec3_b'], padding=1)
    base = np.arctanh(np.clip(x, -_INPUT_CLIP, _INPUT_CLIP)).astype(x.dtype)
    return scale(activation(add(Tensor(base), d), ActivationEnum.Tanh), _OUTPUT_SCALE)


def discriminator_apply(p: Dict[str, Tensor], x: Union[np.ndarray, Tensor]) -> Tensor:
    """
    :param x: (N, 6, H, W), H and W multiples of 16.
    :return: (N, 1, H / 16, W / 16) patch scores in (0, 1).
    """
    x = x if isinstance(x, Tensor) else Tensor(x)
    _check_batch(x.values, 16, 'Discriminator')
    h = activation(conv2d(x, p['d1_w'], p['d1_b'], stride=2, padding=1), ActivationEnum.LeakyReLU)
    h = activation(conv2d(h, p['d2_w'], p['d2_b'], stride=2, padding=1), ActivationEnum.LeakyReLU)
    h = activation(conv2d(h, p['d3_w'], p['d3_b'], stride=2, padding=1), ActivationEnum.LeakyReLU)
    return activation(conv2d(h, p['d4_w'], p['d4_b'], stride=2, padding=1), ActivationEnum.Sigmoid)


def _as_batch(tile: Union[Raster, np.ndarray]) -> Tuple[np.ndarray, bool]:
    values = tile.samples if isinstance(tile, Raster) else np.asarray(tile)
    single = values.ndim == 3
    values = values[None] if single else values
    return np.nan_to_num(values.astype(np.float32)), single


def generator_forward(
        params: GeneratorParams,
        tile: Union[Raster, np.ndarray],
        target_style: DomainStyle,
        internals: Optional[Dict[str, np.ndarray]] = None,
) -> Union[Raster, np.ndarray]:
    """
    Stylize one F32 tile (6, H, W), or a batch (N, 6, H, W), toward <target_style>.
    A Raster comes back as a Raster with the same validmask; invalid samples are kept.
    """
    x, single = _as_batch(tile)
    out = generator_apply(params.constants(), x, target_style.code(), internals).values
    out = out[0] if single else out
    if isinstance(tile, Raster):
        samples = np.where(tile.validmask[None], out, tile.samples).astype(np.float32)
        return tile.replace(samples=samples, validmask=tile.validmask.copy())
    return out


def discriminator_forward(params: DiscriminatorParams, tiles: Union[Raster, np.ndarray]) -> np.ndarray:
    x, _ = _as_batch(tiles)
    return discriminator_apply(params.constants(), x).values

