# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


from typing import Any, Dict, List, Tuple
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .error import DimensionError, DTypeError, RangeError


__all__ = [
    'DTypeEnum',
    'LABEL_NODATA',
    'GeoTransform',
    'Raster',
    'BandStatistic',
    'BandStats',
    'TileSpec',
    'TileRecord',
]


# Nodata value of U8 label rasters.
LABEL_NODATA: int = 255

# (origin_x, origin_y, pixel_size_x, pixel_size_y), map units.
GeoTransform = Tuple[float, float, float, float]


class DTypeEnum(Enum):
    U8 = 0
    U16 = 1
    F32 = 2

    def to_numpy(self) -> np.dtype:
        if self.value == 0:
            return np.dtype('<u1')
        elif self.value == 1:
            return np.dtype('<u2')
        elif self.value == 2:
            return np.dtype('<f4')

    def item_size(self) -> int:
        return self.to_numpy().itemsize

    @classmethod
    def from_numpy(cls, dtype: np.dtype) -> 'DTypeEnum':
        for item in cls:
            if item.to_numpy() == np.dtype(dtype).newbyteorder('<'):
                return item
        raise DTypeError(f'Numpy dtype <{dtype}> has no raster dtype counterpart.')


@dataclass(eq=False)
class Raster(object):
    """
    Multiband grid. `samples` is band-sequential with shape (bands, height, width),
    `validmask` has shape (height, width).
    """
    samples: np.ndarray
    validmask: np.ndarray
    geotransform: GeoTransform = (0.0, 0.0, 1.0, 1.0)
    # Whether the MBT container carried an explicit mask; only affects byte layout on disk.
    mask_stored: bool = True

    def __post_init__(self):
        if self.samples.ndim != 3:
            raise DimensionError(
                f'Parameter <samples> should be 3-dimensional (bands, height, width), '
                f'got shape {self.samples.shape}.'
            )
        DTypeEnum.from_numpy(self.samples.dtype)
        self.validmask = np.asarray(self.validmask, dtype=bool)
        if self.validmask.shape != self.samples.shape[1:]:
            raise DimensionError(
                f'Parameter <validmask> shape {self.validmask.shape} does not match '
                f'raster shape {self.samples.shape[1:]}.'
            )
        self.geotransform = tuple(float(v) for v in self.geotransform)
        if len(self.geotransform) != 4:
            raise DimensionError('Parameter <geotransform> should have 4 entries.')
        if self.geotransform[2] == 0.0 or self.geotransform[3] == 0.0:
            raise RangeError('Pixel sizes of <geotransform> should be nonzero.')

    @property
    def bands(self) -> int:
        return self.samples.shape[0]

    @property
    def height(self) -> int:
        return self.samples.shape[1]

    @property
    def width(self) -> int:
        return self.samples.shape[2]

    @property
    def dtype(self) -> DTypeEnum:
        return DTypeEnum.from_numpy(self.samples.dtype)

    def valid_count(self) -> int:
        return int(self.validmask.sum())

    def band(self, index: int) -> np.ndarray:
        return self.samples[index]

    def replace(self, **changes: Any) -> 'Raster':
        values: Dict[str, Any] = {
            'samples': self.samples,
            'validmask': self.validmask,
            'geotransform': self.geotransform,
            'mask_stored': self.mask_stored,
        }
        values.update(changes)
        return Raster(**values)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Raster):
            return NotImplemented
        return (
            self.samples.dtype == other.samples.dtype and
            self.samples.shape == other.samples.shape and
            self.geotransform == other.geotransform and
            np.array_equal(self.validmask, other.validmask) and
            self.samples.tobytes() == other.samples.tobytes()
        )

    def __repr__(self) -> str:
        return f'<Raster(width={self.width}, height={self.height}, ' \
               f'bands={self.bands}, dtype={self.dtype.name})>'


@dataclass
class BandStatistic(object):
    minimum: float
    maximum: float
    mean: float
    std: float
    hist_lower: float
    hist_width: float
    counts: np.ndarray

    def valid_count(self) -> int:
        return int(self.counts.sum())

    def to_dict(self) -> Dict[str, Any]:
        return {
            'min': self.minimum,
            'max': self.maximum,
            'mean': self.mean,
            'std': self.std,
            'hist_lower': self.hist_lower,
            'hist_width': self.hist_width,
            'counts': [int(c) for c in self.counts],
        }


@dataclass
class BandStats(object):
    bands: List[BandStatistic] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.bands)

    def __getitem__(self, index: int) -> BandStatistic:
        return self.bands[index]

    def to_dict(self) -> Dict[str, Any]:
        return {'bands': [b.to_dict() for b in self.bands]}


@dataclass(frozen=True)
class TileSpec(object):
    tile_size: int = 512
    stride: int = 0     # 0 means stride = tile_size
    min_valid_fraction: float = 0.5

    def __post_init__(self):
        if self.tile_size <= 0:
            raise RangeError(f'Parameter <tile_size> should be positive, got {self.tile_size}.')
        if self.stride == 0:
            object.__setattr__(self, 'stride', self.tile_size)
        if not 0 < self.stride <= self.tile_size:
            raise RangeError(
                f'Parameter <stride> should be in (0, {self.tile_size}], got {self.stride}.'
            )
        if not 0.0 <= self.min_valid_fraction <= 1.0:
            raise RangeError(
                f'Parameter <min_valid_fraction> should be in [0, 1], got {self.min_valid_fraction}.'
            )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'tile_size': self.tile_size,
            'stride': self.stride,
            'min_valid_fraction': self.min_valid_fraction,
        }


@dataclass(frozen=True)
class TileRecord(object):
    index: int
    x_offset: int
    y_offset: int
    tile_size: int
    valid_fraction: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'index': self.index,
            'x_offset': self.x_offset,
            'y_offset': self.y_offset,
            'tile_size': self.tile_size,
            'valid_fraction': self.valid_fraction,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TileRecord':
        return cls(
            index=int(data['index']),
            x_offset=int(data['x_offset']),
            y_offset=int(data['y_offset']),
            tile_size=int(data['tile_size']),
            valid_fraction=float(data['valid_fraction']),
        )

    @classmethod
    def fields(cls) -> List[str]:
        return ['index', 'x_offset', 'y_offset', 'tile_size', 'valid_fraction']
