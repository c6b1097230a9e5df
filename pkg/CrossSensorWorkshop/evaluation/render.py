# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


from typing import Union
from pathlib import Path

import numpy as np

from ..definition import LabelScheme, Raster, DimensionError, SchemeError


__all__ = ['ppm_bytes', 'render_labelmap']


def ppm_bytes(labels: Raster, scheme: LabelScheme) -> bytes:
    """Binary PPM (P6) of a label raster in scheme colors; nodata and invalid pixels are black."""
    if labels.bands != 1:
        raise DimensionError(f'Label raster should have 1 band, got {labels.bands}.')
    palette = np.zeros((256, 3), dtype=np.uint8)
    known = np.zeros(256, dtype=bool)
    for entry in scheme.entries:
        palette[entry.code] = entry.color
        known[entry.code] = True
    values = labels.samples[0].astype(np.int64)
    unknown = labels.validmask & ~known[values]
    if unknown.any():
        code = int(values[unknown][0])
        raise SchemeError(f'Code <{code}> is not a member of scheme <{scheme.scheme_id}>.')
    rgb = np.where(labels.validmask[:, :, None], palette[values], 0).astype(np.uint8)
    header = f'P6\n{labels.width} {labels.height}\n255\n'.encode('ascii')
    return header + rgb.tobytes()


def render_labelmap(labels: Raster, scheme: LabelScheme, path: Union[str, Path]) -> None:
    data = ppm_bytes(labels, scheme)
    with open(path, mode='wb') as f:
        f.write(data)
