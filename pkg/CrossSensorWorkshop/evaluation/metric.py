# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


"""
Confusion matrices, per-class IoU, mIoU and random point validation.

IoU_c = tp_c / (row_c + col_c - tp_c). A class with an empty union scores 0 and is flagged
absent; mIoU averages all K classes, zeros included.
"""


from typing import List, Optional, Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..definition import (
    Raster,
    ConfusionMatrix,
    IoUReport,
    PointSample,
    DimensionError,
    EmptyInputError,
    RangeError,
)


__all__ = ['confusion', 'iou_from_confusion', 'mean_iou', 'relative_gain', 'random_point_validation']


def _check_pair(reference: Raster, prediction: Raster) -> None:
    for name, r in [('reference', reference), ('prediction', prediction)]:
        if r.bands != 1:
            raise DimensionError(f'Parameter <{name}> should have 1 band, got {r.bands}.')
    if (reference.width, reference.height) != (prediction.width, prediction.height):
        raise DimensionError(
            f'Reference is {reference.width}x{reference.height}, '
            f'prediction is {prediction.width}x{prediction.height}.'
        )


def _stripe_confusion(ref: np.ndarray, pred: np.ndarray, joint: np.ndarray, k: int) -> ConfusionMatrix:
    a = ref[joint].astype(np.int64)
    b = pred[joint].astype(np.int64)
    if a.size and (a.max() >= k or b.max() >= k):
        raise RangeError(f'Label codes should be below {k}, got {max(int(a.max()), int(b.max()))}.')
    counts = np.bincount(a * k + b, minlength=k * k).reshape(k, k)
    return ConfusionMatrix(counts=counts, ignored=int(joint.size - joint.sum()))


def confusion(reference: Raster, prediction: Raster, k: int, stripes: int = 1) -> ConfusionMatrix:
    """
    Count (reference, predicted) pairs over the pixels valid in both rasters; every other pixel
    is counted as ignored. Row stripes are counted in parallel and merged in stripe order.
    """
    _check_pair(reference, prediction)
    if k < 1:
        raise RangeError(f'Parameter <k> should be at least 1, got {k}.')
    joint = reference.validmask & prediction.validmask
    bounds = np.linspace(0, reference.height, max(1, stripes) + 1).astype(int)
    ref, pred = reference.samples[0], prediction.samples[0]
    jobs = [(ref[y0:y1], pred[y0:y1], joint[y0:y1]) for y0, y1 in zip(bounds[:-1], bounds[1:])]
    with ThreadPoolExecutor(max_workers=len(jobs)) as executor:
        parts = list(executor.map(lambda job: _stripe_confusion(*job, k), jobs))
    result = ConfusionMatrix(counts=np.zeros((k, k), dtype=np.int64), ignored=0)
    for part in parts:
        result = result.merge(part)
    return result


def iou_from_confusion(m: ConfusionMatrix, class_names: Optional[Sequence[str]] = None) -> IoUReport:
    k = m.classes
    names: List[str] = list(class_names) if class_names is not None else [str(i) for i in range(k)]
    if len(names) != k:
        raise DimensionError(f'{len(names)} class names for {k} classes.')
    counts = m.counts.astype(np.float64)
    tp = np.diag(counts)
    union = counts.sum(axis=1) + counts.sum(axis=0) - tp
    present = union > 0
    iou = np.where(present, tp / np.where(present, union, 1.0), 0.0) * 100.0
    total = counts.sum()
    return IoUReport(
        class_names=names,
        per_class=[float(v) for v in iou],
        present=[bool(v) for v in present],
        miou=mean_iou(iou),
        pixel_accuracy=float(tp.sum() / total) if total > 0 else 0.0,
    )


def mean_iou(values: Sequence[float]) -> float:
    """Unweighted mean, zero-valued classes included."""
    values = list(values)
    if not values:
        raise EmptyInputError('Parameter <values> is empty.')
    return float(np.mean(values))


def relative_gain(baseline: float, adapted: float) -> Optional[float]:
    """adapted / baseline - 1; None when the baseline is 0."""
    if baseline == 0:
        return None
    return adapted / baseline - 1.0


def random_point_validation(reference: Raster, prediction: Raster, n: int = 100, seed: int = 17) -> PointSample:
    """
    Draw <n> distinct jointly-valid pixels uniformly with a seeded generator and compare codes.
    """
    _check_pair(reference, prediction)
    if n < 1:
        raise RangeError(f'Parameter <n> should be positive, got {n}.')
    candidates = np.flatnonzero(reference.validmask & prediction.validmask)
    if candidates.size < n:
        raise EmptyInputError(f'Only {candidates.size} jointly valid pixels for {n} points.')
    rng = np.random.default_rng(seed)
    chosen = rng.choice(candidates, size=n, replace=False)
    ref, pred = reference.samples[0].ravel(), prediction.samples[0].ravel()
    width = reference.width
    points = [(int(i % width), int(i // width), int(ref[i]), int(pred[i])) for i in chosen]
    agreement = float(np.mean([p[2] == p[3] for p in points]))
    return PointSample(seed=seed, points=points, agreement=agreement)
