# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


"""
Raster preprocessing: band compositing, statistics, value shifting, nodata masking,
tiling and 16-bit <-> [-1, 1] rescaling.

All functions are pure; they return new rasters and never modify their inputs.
"""


from typing import List, Optional, Sequence, Tuple, Union
from pathlib import Path
import math

import numpy as np

from ..definition import (
    DTypeEnum,
    LABEL_NODATA,
    GeoTransform,
    Raster,
    BandStatistic,
    BandStats,
    TileSpec,
    TileRecord,
    DimensionError,
    DTypeError,
    EmptyInputError,
    RangeError,
)
from .mbt import raster_read


__all__ = [
    'RESCALE_HALF_RANGE',
    'RESCALE_TOLERANCE',
    'composite_bands',
    'band_stats',
    'shift_values',
    'estimate_shift_offsets',
    'set_nodata_mask',
    'read_mask',
    'tile_dataset',
    'rescale_unit',
    'rescale_back',
    'to_unit',
    'mosaic_tiles',
    'label_raster',
]


# 65535 / 2: maps [0, 65535] onto [-1, 1].
RESCALE_HALF_RANGE: float = 32767.5
RESCALE_TOLERANCE: float = 1e-6


def composite_bands(inputs: Sequence[Raster]) -> Raster:
    """
    Stack rasters band-wise, in the given order.
    :param inputs: rasters sharing width, height, dtype and geotransform.
    :return: a raster whose bands are the input bands in order; validmask is the AND of inputs.
    """
    if not inputs:
        raise EmptyInputError('Parameter <inputs> should contain at least one raster.')
    first = inputs[0]
    for i, item in enumerate(inputs[1:], start=1):
        if (item.width, item.height) != (first.width, first.height):
            raise DimensionError(
                f'Input {i} is {item.width}x{item.height}, expected {first.width}x{first.height}.'
            )
        if item.dtype != first.dtype:
            raise DTypeError(f'Input {i} has dtype {item.dtype.name}, expected {first.dtype.name}.')
        if item.geotransform != first.geotransform:
            raise DimensionError(f'Input {i} geotransform differs from input 0.')
    if len(inputs) == 1:
        return first.replace(samples=first.samples.copy(), validmask=first.validmask.copy())
    samples = np.concatenate([item.samples for item in inputs], axis=0)
    validmask = np.logical_and.reduce([item.validmask for item in inputs])
    return Raster(samples=samples, validmask=validmask, geotransform=first.geotransform)


def band_stats(r: Raster, bins: int = 1000) -> BandStats:
    """
    Per-band statistics over valid pixels. Histograms use `bins` uniform bins over [min, max];
    a constant band gets a zero-width histogram with every count in bin 0.
    """
    if bins < 1:
        raise RangeError(f'Parameter <bins> should be positive, got {bins}.')
    if r.valid_count() == 0:
        raise EmptyInputError('Raster has no valid pixel.')
    result = BandStats()
    for b in range(r.bands):
        values = r.samples[b][r.validmask].astype(np.float64)
        minimum = float(values.min())
        maximum = float(values.max())
        mean = float(values.mean())
        std = float(np.sqrt(np.mean((values - mean) ** 2)))
        if maximum > minimum:
            counts, _ = np.histogram(values, bins=bins, range=(minimum, maximum))
            width = (maximum - minimum) / bins
        else:
            counts = np.zeros(bins, dtype=np.int64)
            counts[0] = values.size
            width = 0.0
        result.bands.append(
            BandStatistic(
                minimum=minimum,
                maximum=maximum,
                mean=min(max(mean, minimum), maximum),
                std=std,
                hist_lower=minimum,
                hist_width=width,
                counts=counts.astype(np.int64),
            )
        )
    return result


def shift_values(r: Raster, offsets: Sequence[int]) -> Raster:
    """
    Subtract one offset per band from the valid samples of a U16 raster, clamping to [0, 65535].
    Invalid pixels keep their original value.
    """
    if r.dtype != DTypeEnum.U16:
        raise DTypeError(f'shift_values requires a U16 raster, got {r.dtype.name}.')
    if len(offsets) != r.bands:
        raise DimensionError(f'Parameter <offsets> has {len(offsets)} entries, raster has {r.bands} bands.')
    shifted = r.samples.astype(np.int64) - np.asarray(offsets, dtype=np.int64)[:, None, None]
    shifted = np.clip(shifted, 0, 65535).astype(np.uint16)
    samples = np.where(r.validmask[None, :, :], shifted, r.samples)
    return r.replace(samples=samples, validmask=r.validmask.copy())


def estimate_shift_offsets(stats: BandStats, percentile: float = 0.005) -> List[int]:
    """
    Offset per band = value at the given lower percentile of the band histogram, rounded down.
    The percentile position is interpolated linearly inside its bin.
    """
    if not 0.0 <= percentile <= 1.0:
        raise RangeError(f'Parameter <percentile> should be in [0, 1], got {percentile}.')
    if len(stats) == 0:
        raise EmptyInputError('Parameter <stats> holds no band.')
    result: List[int] = []
    for item in stats.bands:
        total = item.valid_count()
        if total == 0:
            raise EmptyInputError('Band histogram is empty.')
        if item.hist_width == 0.0:
            result.append(int(math.floor(item.minimum)))
            continue
        target = percentile * total
        cumulative = np.cumsum(item.counts)
        i = int(np.searchsorted(cumulative, target, side='left'))
        i = min(i, len(item.counts) - 1)
        before = float(cumulative[i - 1]) if i > 0 else 0.0
        inside = float(item.counts[i])
        fraction = (target - before) / inside if inside > 0 else 0.0
        value = item.hist_lower + (i + fraction) * item.hist_width
        result.append(int(math.floor(min(max(value, item.minimum), item.maximum))))
    return result


def set_nodata_mask(r: Raster, mask: np.ndarray) -> Raster:
    """
    Mark the pixels where <mask> is True as invalid.
    :param mask: boolean, width x height elements (flat or 2-D).
    """
    mask = np.asarray(mask)
    if mask.size != r.width * r.height:
        raise DimensionError(
            f'Parameter <mask> has {mask.size} elements, raster has {r.width * r.height} pixels.'
        )
    mask = mask.reshape(r.height, r.width).astype(bool)
    return r.replace(samples=r.samples.copy(), validmask=r.validmask & ~mask)


def read_mask(path: Union[str, Path]) -> np.ndarray:
    """Read a 1-band MBT mask raster; nonzero valid pixels are masked."""
    r = raster_read(path)
    if r.bands != 1:
        raise DimensionError(f'Mask raster <{path}> should have 1 band, got {r.bands}.')
    return (r.samples[0] != 0) & r.validmask


def _tile_geotransform(geotransform: GeoTransform, x: int, y: int) -> GeoTransform:
    origin_x, origin_y, px_x, px_y = geotransform
    return origin_x + x * px_x, origin_y + y * px_y, px_x, px_y


def tile_dataset(image: Raster, labels: Raster, spec: TileSpec) -> List[Tuple[Raster, Raster, TileRecord]]:
    """
    Cut pixel-aligned image/label windows, row-major by window offset.

    A window is kept when the fraction of pixels valid in both the image and the labels is at
    least spec.min_valid_fraction. A raster smaller than the tile yields no tile.
    """
    if (image.width, image.height) != (labels.width, labels.height):
        raise DimensionError(
            f'Labels are {labels.width}x{labels.height}, image is {image.width}x{image.height}.'
        )
    if labels.bands != 1:
        raise DimensionError(f'Label raster should have 1 band, got {labels.bands}.')

    size: int = spec.tile_size
    joint = image.validmask & labels.validmask
    result: List[Tuple[Raster, Raster, TileRecord]] = []
    if size > image.width or size > image.height:
        return result
    for y in range(0, image.height - size + 1, spec.stride):
        for x in range(0, image.width - size + 1, spec.stride):
            window = joint[y:y + size, x:x + size]
            fraction = float(window.sum()) / float(size * size)
            if fraction < spec.min_valid_fraction:
                continue
            record = TileRecord(
                index=len(result),
                x_offset=x,
                y_offset=y,
                tile_size=size,
                valid_fraction=fraction,
            )
            image_tile = Raster(
                samples=image.samples[:, y:y + size, x:x + size].copy(),
                validmask=image.validmask[y:y + size, x:x + size].copy(),
                geotransform=_tile_geotransform(image.geotransform, x, y),
            )
            label_tile = Raster(
                samples=labels.samples[:, y:y + size, x:x + size].copy(),
                validmask=labels.validmask[y:y + size, x:x + size].copy(),
                geotransform=_tile_geotransform(labels.geotransform, x, y),
            )
            result.append((image_tile, label_tile, record))
    return result


def rescale_unit(r: Raster) -> Raster:
    """U16 -> F32 with v / 32767.5 - 1 over the fixed range [0, 65535]."""
    if r.dtype != DTypeEnum.U16:
        raise DTypeError(f'rescale_unit requires a U16 raster, got {r.dtype.name}.')
    samples = (r.samples.astype(np.float64) / RESCALE_HALF_RANGE - 1.0).astype(np.float32)
    return r.replace(samples=samples, validmask=r.validmask.copy())


def rescale_back(r: Raster) -> Raster:
    """
    F32 -> U16 with round((x + 1) * 32767.5), clamped to [0, 65535].
    Valid samples outside [-1 - 1e-6, 1 + 1e-6] raise RangeError; invalid ones are clamped.
    """
    if r.dtype != DTypeEnum.F32:
        raise DTypeError(f'rescale_back requires a F32 raster, got {r.dtype.name}.')
    values = r.samples.astype(np.float64)
    valid_values = values[:, r.validmask]
    limit = 1.0 + RESCALE_TOLERANCE
    if valid_values.size and not np.all(np.abs(valid_values) <= limit):
        bad = valid_values[~(np.abs(valid_values) <= limit)]
        raise RangeError(f'Sample {float(bad[0])} is outside [-1, 1].')
    values = np.nan_to_num(values, nan=-1.0, posinf=1.0, neginf=-1.0)
    samples = np.clip(np.rint((values + 1.0) * RESCALE_HALF_RANGE), 0, 65535).astype(np.uint16)
    return r.replace(samples=samples, validmask=r.validmask.copy())


def to_unit(r: Raster) -> Raster:
    """U16 rasters are rescaled to [-1, 1]; F32 rasters pass through."""
    if r.dtype == DTypeEnum.U16:
        return rescale_unit(r)
    if r.dtype == DTypeEnum.F32:
        return r
    raise DTypeError(f'Expected a U16 or F32 image raster, got {r.dtype.name}.')


def mosaic_tiles(
        tiles: Sequence[Raster],
        records: Sequence[TileRecord],
        width: int,
        height: int,
        geotransform: GeoTransform = (0.0, 0.0, 1.0, 1.0),
        nodata: Optional[int] = LABEL_NODATA,
) -> Raster:
    """
    Place tiles back at their recorded offsets. Uncovered pixels are invalid and, when
    <nodata> is given, filled with it. Later tiles overwrite earlier ones.
    """
    if len(tiles) != len(records):
        raise DimensionError(f'{len(tiles)} tiles but {len(records)} records.')
    if not tiles:
        raise EmptyInputError('Parameter <tiles> is empty.')
    bands = tiles[0].bands
    dtype = tiles[0].samples.dtype
    samples = np.zeros((bands, height, width), dtype=dtype)
    if nodata is not None:
        samples[...] = nodata
    validmask = np.zeros((height, width), dtype=bool)
    for tile, record in zip(tiles, records):
        if tile.bands != bands or tile.samples.dtype != dtype:
            raise DimensionError(f'Tile {record.index} does not match the first tile layout.')
        y, x = record.y_offset, record.x_offset
        if y + tile.height > height or x + tile.width > width:
            raise DimensionError(f'Tile {record.index} exceeds the {width}x{height} mosaic.')
        samples[:, y:y + tile.height, x:x + tile.width] = tile.samples
        validmask[y:y + tile.height, x:x + tile.width] = tile.validmask
    return Raster(samples=samples, validmask=validmask, geotransform=geotransform)


def label_raster(values: np.ndarray, geotransform: GeoTransform = (0.0, 0.0, 1.0, 1.0)) -> Raster:
    """Build a 1-band U8 label raster whose validmask is values != 255."""
    values = np.asarray(values)
    if values.ndim == 2:
        values = values[None, :, :]
    values = values.astype(np.uint8)
    return Raster(samples=values, validmask=values[0] != LABEL_NODATA, geotransform=geotransform)
