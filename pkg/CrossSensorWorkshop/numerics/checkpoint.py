# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


"""
Parameter checkpoints.

Layout, little-endian:
    magic           4 bytes     b'CKP1'
    manifest size   u32
    manifest        UTF-8 JSON  {"names": [...], "shapes": [[...], ...], "meta": {...}}
    payload         f32 values of every parameter, in manifest order, C order
"""


from typing import Any, Dict, Optional, Tuple, Union
from pathlib import Path
import json
import struct

import numpy as np

from ..definition import CheckpointError


__all__ = ['CHECKPOINT_MAGIC', 'encode_checkpoint', 'decode_checkpoint', 'save_checkpoint', 'load_checkpoint']


CHECKPOINT_MAGIC: bytes = b'CKP1'
_PREFIX = struct.Struct('<4sI')
_F32 = np.dtype('<f4')


def encode_checkpoint(params: Dict[str, np.ndarray], meta: Optional[Dict[str, Any]] = None) -> bytes:
    names = list(params)
    manifest = {
        'names': names,
        'shapes': [list(params[name].shape) for name in names],
        'meta': meta or {},
    }
    text = json.dumps(manifest, ensure_ascii=False, sort_keys=True).encode('utf-8')
    parts = [_PREFIX.pack(CHECKPOINT_MAGIC, len(text)), text]
    for name in names:
        values = np.asarray(params[name])
        if not np.all(np.isfinite(values)) and not (meta or {}).get('diagnostic', False):
            raise CheckpointError(f'Parameter <{name}> holds a non-finite value.')
        parts.append(np.ascontiguousarray(values, dtype=_F32).tobytes())
    return b''.join(parts)


def decode_checkpoint(data: bytes) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    if len(data) < _PREFIX.size:
        raise CheckpointError(f'Checkpoint truncated: {len(data)} bytes.')
    magic, size = _PREFIX.unpack_from(data, 0)
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointError(f'Bad magic {magic!r}, expected {CHECKPOINT_MAGIC!r}.')
    end = _PREFIX.size + size
    if len(data) < end:
        raise CheckpointError('Checkpoint manifest truncated.')
    try:
        manifest = json.loads(data[_PREFIX.size:end].decode('utf-8'))
        names = [str(item) for item in manifest['names']]
        shapes = [tuple(int(x) for x in item) for item in manifest['shapes']]
        meta = dict(manifest.get('meta', {}))
    except (ValueError, KeyError, TypeError) as e:
        raise CheckpointError(f'Checkpoint manifest is malformed: {e}')
    if len(names) != len(shapes):
        raise CheckpointError('Checkpoint manifest lists names and shapes of different lengths.')

    params: Dict[str, np.ndarray] = {}
    offset = end
    for name, shape in zip(names, shapes):
        count = int(np.prod(shape, dtype=np.int64))
        if offset + count * _F32.itemsize > len(data):
            raise CheckpointError(f'Checkpoint payload truncated at parameter <{name}>.')
        params[name] = np.frombuffer(data, dtype=_F32, count=count, offset=offset).reshape(shape).astype(np.float32)
        offset += count * _F32.itemsize
    if offset != len(data):
        raise CheckpointError(f'Checkpoint has {len(data) - offset} trailing bytes.')
    return params, meta


def save_checkpoint(path: Union[str, Path], params: Dict[str, np.ndarray], meta: Optional[Dict[str, Any]] = None) -> Path:
    path = Path(path)
    data = encode_checkpoint(params, meta)
    with open(path, mode='wb') as f:
        f.write(data)
    return path


def load_checkpoint(path: Union[str, Path]) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f'Checkpoint <{path}> does not exist.')
    with open(path, mode='rb') as f:
        data = f.read()
    return decode_checkpoint(data)
