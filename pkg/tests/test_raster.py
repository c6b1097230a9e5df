# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


from typing import List
from pathlib import Path
import struct

import numpy as np
import pytest

from CrossSensorWorkshop.definition import (
    DTypeEnum,
    Raster,
    TileSpec,
    TileRecord,
    RasterFormatError,
    RasterCorruptionError,
    UnsupportedFormatError,
    DimensionError,
    DTypeError,
    EmptyInputError,
    RangeError,
)
from CrossSensorWorkshop.raster import (
    raster_read,
    raster_write,
    encode_raster,
    decode_raster,
    composite_bands,
    band_stats,
    shift_values,
    estimate_shift_offsets,
    set_nodata_mask,
    tile_dataset,
    rescale_unit,
    rescale_back,
    mosaic_tiles,
    label_raster,
)
from CrossSensorWorkshop.raster.mbt import MAGIC, HEADER_SIZE


def _u16(values: np.ndarray, validmask: np.ndarray = None) -> Raster:
    values = np.asarray(values, dtype=np.uint16)
    if values.ndim == 2:
        values = values[None]
    if validmask is None:
        validmask = np.ones(values.shape[1:], dtype=bool)
    return Raster(samples=values, validmask=validmask)


def _header(width: int, height: int, bands: int, dtype_code: int, flags: int = 0) -> bytes:
    return struct.pack('<4sIIHHHH6d', MAGIC, width, height, bands, dtype_code, flags, 0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0)


def test_read_minimal_file(tmp_path: Path):
    path = tmp_path.joinpath('one.mbt')
    path.write_bytes(_header(1, 1, 1, DTypeEnum.U16.value) + struct.pack('<H', 7))
    r = raster_read(path)
    assert (r.width, r.height, r.bands) == (1, 1, 1)
    assert r.dtype == DTypeEnum.U16
    assert r.samples.tolist() == [[[7]]]
    assert r.valid_count() == 1
    assert r.mask_stored is False


def test_write_size_arithmetic(tmp_path: Path):
    r = _u16(np.arange(24).reshape(6, 2, 2))
    path = tmp_path.joinpath('small.mbt')
    raster_write(r, path)
    assert HEADER_SIZE == 68
    assert path.stat().st_size == HEADER_SIZE + 2 * 2 * 6 * 2 + 2 * 2
    assert raster_read(path) == r


def test_write_read_is_byte_identical(tmp_path: Path):
    rng = np.random.default_rng(3)
    validmask = rng.random((5, 7)) > 0.3
    r = Raster(
        samples=rng.random((3, 5, 7)).astype(np.float32),
        validmask=validmask,
        geotransform=(500000.0, 4200000.0, 30.0, -30.0),
    )
    path = tmp_path.joinpath('f32.mbt')
    raster_write(r, path)
    data = path.read_bytes()
    again = raster_read(path)
    assert again == r
    assert encode_raster(again) == data


def test_read_errors():
    good = _header(1, 1, 1, DTypeEnum.U16.value) + struct.pack('<H', 7)
    with pytest.raises(RasterFormatError):
        decode_raster(b'XXXX' + good[4:])
    with pytest.raises(RasterCorruptionError):
        decode_raster(good[:-1])
    with pytest.raises(RasterCorruptionError):
        decode_raster(good + b'\x00')
    with pytest.raises(UnsupportedFormatError):
        decode_raster(_header(1, 1, 1, 9) + struct.pack('<H', 7))


def test_write_unwritable_path(tmp_path: Path):
    with pytest.raises(OSError):
        raster_write(_u16(np.zeros((2, 2))), tmp_path.joinpath('missing', 'x.mbt'))


def test_composite_bands():
    bands: List[Raster] = [_u16(np.full((10, 10), i)) for i in range(6)]
    r = composite_bands(bands)
    assert (r.width, r.height, r.bands) == (10, 10, 6)
    assert [int(r.samples[b, 0, 0]) for b in range(6)] == [0, 1, 2, 3, 4, 5]

    assert composite_bands(bands[:1]) == bands[0]

    with pytest.raises(DimensionError):
        composite_bands([bands[0], _u16(np.zeros((9, 10)))])
    with pytest.raises(DTypeError):
        composite_bands([bands[0], Raster(samples=np.zeros((1, 10, 10), dtype=np.float32), validmask=np.ones((10, 10)))])
    with pytest.raises(EmptyInputError):
        composite_bands([])


def test_composite_validmask_is_and():
    a = _u16(np.zeros((2, 2)), validmask=np.array([[True, False], [True, True]]))
    b = _u16(np.zeros((2, 2)), validmask=np.array([[True, True], [False, True]]))
    assert composite_bands([a, b]).validmask.tolist() == [[True, False], [False, True]]


def test_band_stats():
    stats = band_stats(_u16(np.full((2, 2), 2)))
    assert stats[0].mean == 2.0
    assert stats[0].std == 0.0

    stats = band_stats(_u16(np.array([[0, 10]])))
    assert stats[0].mean == pytest.approx(5.0)
    assert stats[0].std == pytest.approx(5.0)

    masked = _u16(np.array([[1, 2], [3, 4]]), validmask=np.array([[True, True], [True, False]]))
    stats = band_stats(masked)
    assert stats[0].mean == pytest.approx(2.0)
    assert stats[0].maximum == 3.0
    assert stats[0].valid_count() == 3

    with pytest.raises(EmptyInputError):
        band_stats(_u16(np.zeros((2, 2)), validmask=np.zeros((2, 2), dtype=bool)))


def test_shift_values():
    r = _u16(np.array([[12000, 3000]]))
    shifted = shift_values(r, [5000])
    assert shifted.samples.tolist() == [[[7000, 0]]]
    assert shift_values(r, [0]) == r

    masked = _u16(np.array([[12000, 3000]]), validmask=np.array([[True, False]]))
    assert shift_values(masked, [5000]).samples.tolist() == [[[7000, 3000]]]

    with pytest.raises(DimensionError):
        shift_values(r, [1, 2])


def test_estimate_shift_offsets():
    stats = band_stats(_u16(np.full((4, 4), 5000)))
    assert estimate_shift_offsets(stats, 0.005) == [5000]
    assert estimate_shift_offsets(stats, 0.9) == [5000]

    uniform = _u16(np.arange(5000, 6001).reshape(1, 1001))
    offset = estimate_shift_offsets(band_stats(uniform, bins=1000), 0.005)[0]
    assert abs(offset - 5005) <= 2

    with pytest.raises(RangeError):
        estimate_shift_offsets(stats, 1.2)


def test_set_nodata_mask():
    r = _u16(np.arange(6).reshape(2, 3))
    assert set_nodata_mask(r, np.zeros(6, dtype=bool)) == r
    assert set_nodata_mask(r, np.ones((2, 3), dtype=bool)).valid_count() == 0

    mask = np.array([[True, False, False], [False, False, True]])
    once = set_nodata_mask(r, mask)
    assert once.valid_count() == 4
    assert set_nodata_mask(once, mask) == once

    with pytest.raises(DimensionError):
        set_nodata_mask(r, np.zeros(5, dtype=bool))


def test_tile_dataset():
    image = _u16(np.zeros((1024, 1024)))
    labels = label_raster(np.zeros((1024, 1024)))
    spec = TileSpec(tile_size=512, stride=512, min_valid_fraction=0.5)

    tiles = tile_dataset(image, labels, spec)
    assert len(tiles) == 4
    offsets = [(record.x_offset, record.y_offset) for _, _, record in tiles]
    assert offsets == [(0, 0), (512, 0), (0, 512), (512, 512)]
    assert [record.index for _, _, record in tiles] == [0, 1, 2, 3]

    validmask = np.ones((1024, 1024), dtype=bool)
    validmask[512:, 512:] = False
    tiles = tile_dataset(_u16(np.zeros((1024, 1024)), validmask), labels, spec)
    assert len(tiles) == 3

    small = _u16(np.zeros((300, 300)))
    assert tile_dataset(small, label_raster(np.zeros((300, 300))), spec) == []

    with pytest.raises(DimensionError):
        tile_dataset(image, label_raster(np.zeros((1024, 1000))), spec)


def test_tile_geotransform_and_mosaic():
    values = np.arange(64, dtype=np.uint8).reshape(8, 8)
    image = Raster(samples=values[None].astype(np.uint16), validmask=np.ones((8, 8)), geotransform=(100.0, 200.0, 10.0, -10.0))
    labels = label_raster(values, geotransform=(100.0, 200.0, 10.0, -10.0))
    tiles = tile_dataset(image, labels, TileSpec(tile_size=4))
    assert len(tiles) == 4
    assert tiles[3][0].geotransform == (140.0, 160.0, 10.0, -10.0)

    mosaic = mosaic_tiles([t[1] for t in tiles], [t[2] for t in tiles], 8, 8, labels.geotransform)
    assert mosaic == labels


def test_tile_record_dict():
    record = TileRecord(index=2, x_offset=512, y_offset=0, tile_size=512, valid_fraction=0.75)
    assert TileRecord.from_dict(record.to_dict()) == record


def test_tile_spec_validation():
    assert TileSpec(tile_size=512).stride == 512
    with pytest.raises(RangeError):
        TileSpec(tile_size=0)
    with pytest.raises(RangeError):
        TileSpec(tile_size=512, min_valid_fraction=1.5)


def test_rescale():
    r = _u16(np.array([[0, 65535, 13107]]))
    unit = rescale_unit(r)
    assert unit.dtype == DTypeEnum.F32
    assert unit.samples[0, 0, 0] == -1.0
    assert unit.samples[0, 0, 1] == 1.0
    assert float(unit.samples[0, 0, 2]) == pytest.approx(-0.6, abs=1e-7)

    with pytest.raises(DTypeError):
        rescale_unit(unit)
    with pytest.raises(DTypeError):
        rescale_back(r)

    outside = Raster(samples=np.array([[[1.01]]], dtype=np.float32), validmask=np.ones((1, 1)))
    with pytest.raises(RangeError):
        rescale_back(outside)
    edge = Raster(samples=np.array([[[1.0000005]]], dtype=np.float32), validmask=np.ones((1, 1)))
    assert rescale_back(edge).samples.tolist() == [[[65535]]]


def test_rescale_round_trip_is_exact():
    r = _u16(np.arange(65536).reshape(256, 256))
    assert rescale_back(rescale_unit(r)) == r
