# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


from .network import SEG_BANDS, SEG_CLASSES, SegmenterParams, segmenter_apply, segmenter_forward
from .trainer import (
    SegTrainConfig,
    SegTrainResult,
    BandMeans,
    compute_band_means,
    normalize,
    augment,
    labels_for_training,
    train_seg,
    load_segmenter,
    infer,
)
