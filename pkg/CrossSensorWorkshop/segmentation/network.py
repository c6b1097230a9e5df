# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


"""
Encoder-decoder segmenter, 6 input bands -> K class logits.

    level   encoder                          decoder
    H       stem   conv 3x3  6 -> 32         up + conv 32 -> 32    + stem
    H/2     e1     conv s2  32 -> 32         up + conv 64 -> 32    + e1
    H/4     e2     conv s2  32 -> 64         up + conv 128 -> 64   + e2
    H/8     e3     conv s2  64 -> 128        up + conv 256 -> 128  + e3
    H/16    e4     conv s2 128 -> 256

Skips are added before the ReLU; a 1x1 head maps 32 channels to K logits.
"""


from typing import Any, Dict, List, Optional

import numpy as np

from ..definition import DimensionError
from ..numerics import (
    Tensor,
    ActivationEnum,
    ParameterSpec,
    ParameterSet,
    conv2d,
    upsample2x,
    activation,
    add,
)


__all__ = ['SEG_BANDS', 'SEG_CLASSES', 'SegmenterParams', 'segmenter_apply', 'segmenter_forward']


SEG_BANDS: int = 6
SEG_CLASSES: int = 8
_DOWNSAMPLING: int = 16


def _conv(name: str, c_out: int, c_in: int, k: int) -> List[ParameterSpec]:
    fan_in = c_in * k * k
    return [
        ParameterSpec(f'{name}_w', (c_out, c_in, k, k), fan_in),
        ParameterSpec(f'{name}_b', (c_out,), fan_in),
    ]


class SegmenterParams(ParameterSet):
    kind = 'segmenter'

    def __init__(self, values: Optional[Dict[str, np.ndarray]] = None, seed: int = 0, dtype: Any = np.float32,
                 classes: int = SEG_CLASSES):
        if classes < 2:
            raise ValueError(f'Parameter <classes> should be at least 2, got {classes}.')
        self.classes: int = int(classes)
        super().__init__(values=values, seed=seed, dtype=dtype)

    def config(self) -> Dict[str, Any]:
        return {'classes': self.classes}

    def layout(self) -> List[ParameterSpec]:
        return (
            _conv('stem', 32, SEG_BANDS, 3)
            + _conv('e1', 32, 32, 3)
            + _conv('e2', 64, 32, 3)
            + _conv('e3', 128, 64, 3)
            + _conv('e4', 256, 128, 3)
            + _conv('d4', 128, 256, 3)
            + _conv('d3', 64, 128, 3)
            + _conv('d2', 32, 64, 3)
            + _conv('d1', 32, 32, 3)
            + _conv('head', self.classes, 32, 1)
        )


def _relu(x: Tensor) -> Tensor:
    return activation(x, ActivationEnum.ReLU)


def segmenter_apply(p: Dict[str, Tensor], x: np.ndarray) -> Tensor:
    """
    :param x: (N, 6, H, W), H and W multiples of 16.
    :return: logits (N, K, H, W).
    """
    if x.ndim != 4 or x.shape[1] != SEG_BANDS:
        raise DimensionError(f'Segmenter input should be (N, {SEG_BANDS}, H, W), got {x.shape}.')
    if x.shape[2] % _DOWNSAMPLING or x.shape[3] % _DOWNSAMPLING or min(x.shape[2:]) < _DOWNSAMPLING:
        raise DimensionError(f'Segmenter input size {x.shape[2]}x{x.shape[3]} should be a multiple of {_DOWNSAMPLING}.')

    stem = _relu(conv2d(Tensor(x), p['stem_w'], p['stem_b'], padding=1))
    e1 = _relu(conv2d(stem, p['e1_w'], p['e1_b'], stride=2, padding=1))
    e2 = _relu(conv2d(e1, p['e2_w'], p['e2_b'], stride=2, padding=1))
    e3 = _relu(conv2d(e2, p['e3_w'], p['e3_b'], stride=2, padding=1))
    e4 = _relu(conv2d(e3, p['e4_w'], p['e4_b'], stride=2, padding=1))

    d = _relu(add(conv2d(upsample2x(e4), p['d4_w'], p['d4_b'], padding=1), e3))
    d = _relu(add(conv2d(upsample2x(d), p['d3_w'], p['d3_b'], padding=1), e2))
    d = _relu(add(conv2d(upsample2x(d), p['d2_w'], p['d2_b'], padding=1), e1))
    d = _relu(add(conv2d(upsample2x(d), p['d1_w'], p['d1_b'], padding=1), stem))
    return conv2d(d, p['head_w'], p['head_b'])


def segmenter_forward(params: SegmenterParams, x: np.ndarray) -> np.ndarray:
    return segmenter_apply(params.constants(), np.asarray(x, dtype=np.float32)).values
