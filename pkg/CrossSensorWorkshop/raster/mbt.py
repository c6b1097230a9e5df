# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


"""
Read and write MBT containers.

Layout, little-endian:
    magic       4 bytes     b'MBT1'
    width       u32
    height      u32
    bands       u16
    dtype       u16         0=U8, 1=U16, 2=F32
    flags       u16         bit 0: validmask present
    reserved    u16         always 0
    geotransform 6 x f64    origin_x, origin_y, pixel_size_x, pixel_size_y, 0, 0
    payload     band-sequential samples, bands x height x width
    validmask   width x height bytes (0=invalid, 1=valid), only when flag bit 0 is set

A file without the mask flag reads as fully valid.
"""


from typing import Union
from pathlib import Path
import struct

import numpy as np

from ..definition import (
    DTypeEnum,
    Raster,
    RasterFormatError,
    RasterCorruptionError,
    UnsupportedFormatError,
)


__all__ = ['MAGIC', 'HEADER_SIZE', 'encode_raster', 'decode_raster', 'raster_read', 'raster_write']


MAGIC: bytes = b'MBT1'
_HEADER = struct.Struct('<4sIIHHHH6d')
HEADER_SIZE: int = _HEADER.size
_FLAG_MASK: int = 0x0001


def encode_raster(r: Raster) -> bytes:
    flags: int = _FLAG_MASK if r.mask_stored else 0
    if not r.mask_stored and not bool(r.validmask.all()):
        # An invalid pixel cannot be expressed without the mask section.
        flags = _FLAG_MASK
    header = _HEADER.pack(
        MAGIC,
        r.width,
        r.height,
        r.bands,
        r.dtype.value,
        flags,
        0,
        r.geotransform[0], r.geotransform[1], r.geotransform[2], r.geotransform[3], 0.0, 0.0,
    )
    payload = np.ascontiguousarray(r.samples, dtype=r.dtype.to_numpy()).tobytes()
    parts = [header, payload]
    if flags & _FLAG_MASK:
        parts.append(np.ascontiguousarray(r.validmask, dtype=np.uint8).tobytes())
    return b''.join(parts)


def decode_raster(data: bytes) -> Raster:
    if len(data) < 4 or data[:4] != MAGIC:
        raise RasterFormatError(f'Bad magic {data[:4]!r}, expected {MAGIC!r}.')
    if len(data) < HEADER_SIZE:
        raise RasterCorruptionError(
            f'Header truncated: {len(data)} bytes, expected at least {HEADER_SIZE}.'
        )
    (_, width, height, bands, dtype_code, flags, reserved,
     origin_x, origin_y, px_x, px_y, _, _) = _HEADER.unpack_from(data, 0)

    try:
        dtype = DTypeEnum(dtype_code)
    except ValueError:
        raise UnsupportedFormatError(f'Unknown dtype code <{dtype_code}>.')
    if reserved != 0:
        raise RasterFormatError(f'Reserved header field should be 0, got {reserved}.')
    if flags & ~_FLAG_MASK:
        raise RasterFormatError(f'Unknown header flags 0x{flags:04x}.')
    if data[HEADER_SIZE - 16:HEADER_SIZE] != bytes(16):
        raise RasterFormatError('Rotation terms of the geotransform should be 0.')
    if px_x == 0.0 or px_y == 0.0:
        raise RasterFormatError('Pixel sizes of the geotransform should be nonzero.')
    if bands < 1:
        raise RasterFormatError('Band count should be at least 1.')

    payload_size: int = width * height * bands * dtype.item_size()
    mask_size: int = width * height if flags & _FLAG_MASK else 0
    expected: int = HEADER_SIZE + payload_size + mask_size
    if len(data) < expected:
        raise RasterCorruptionError(f'Payload truncated: {len(data)} bytes, expected {expected}.')
    if len(data) > expected:
        raise RasterCorruptionError(f'Trailing bytes: {len(data)} bytes, expected {expected}.')

    samples = np.frombuffer(data, dtype=dtype.to_numpy(), count=width * height * bands, offset=HEADER_SIZE)
    samples = samples.reshape(bands, height, width).copy()
    if mask_size:
        raw_mask = np.frombuffer(data, dtype=np.uint8, count=mask_size, offset=HEADER_SIZE + payload_size)
        if np.any(raw_mask > 1):
            raise RasterCorruptionError('Validmask bytes should be 0 or 1.')
        validmask = raw_mask.reshape(height, width).astype(bool)
    else:
        validmask = np.ones((height, width), dtype=bool)

    return Raster(
        samples=samples,
        validmask=validmask,
        geotransform=(origin_x, origin_y, px_x, px_y),
        mask_stored=bool(flags & _FLAG_MASK),
    )


def raster_read(path: Union[str, Path]) -> Raster:
    with open(path, mode='rb') as f:
        data = f.read()
    return decode_raster(data)


def raster_write(r: Raster, path: Union[str, Path]) -> None:
    data = encode_raster(r)
    with open(path, mode='wb') as f:
        f.write(data)
