# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


from .mbt import raster_read, raster_write, encode_raster, decode_raster
from .preprocess import (
    composite_bands,
    band_stats,
    shift_values,
    estimate_shift_offsets,
    set_nodata_mask,
    read_mask,
    tile_dataset,
    rescale_unit,
    rescale_back,
    to_unit,
    mosaic_tiles,
    label_raster,
)


__all__ = [
    'raster_read',
    'raster_write',
    'encode_raster',
    'decode_raster',
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
