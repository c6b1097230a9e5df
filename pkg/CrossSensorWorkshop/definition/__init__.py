# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


from .error import *
from .raster import (
    DTypeEnum,
    LABEL_NODATA,
    GeoTransform,
    Raster,
    BandStatistic,
    BandStats,
    TileSpec,
    TileRecord,
)
from .label import (
    SchemeEntry,
    LabelScheme,
    UnknownPolicyEnum,
    RecodeMap,
    ClassDistribution,
    CrosswalkMatrix,
)
from .metric import ConfusionMatrix, IoUReport, PointSample
from .dataset import OriginEnum, DatasetRecord


__all__ = [
    'DTypeEnum',
    'LABEL_NODATA',
    'GeoTransform',
    'Raster',
    'BandStatistic',
    'BandStats',
    'TileSpec',
    'TileRecord',
    'SchemeEntry',
    'LabelScheme',
    'UnknownPolicyEnum',
    'RecodeMap',
    'ClassDistribution',
    'CrosswalkMatrix',
    'ConfusionMatrix',
    'IoUReport',
    'PointSample',
    'OriginEnum',
    'DatasetRecord',
] + error.__all__
