# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


"""
Segmentation training recipe and tile inference.

Training: band means subtracted from every sample, random rotation/flip, Adam with L2 weight
decay and a polynomial learning-rate decay, nodata pixels ignored by the loss.
Label tiles hold class indices 0..K-1 (255 for nodata).
"""


from typing import Any, Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict, fields
from pathlib import Path

import numpy as np
import pandas as pd

from ..definition import (
    LABEL_NODATA,
    Raster,
    DatasetRecord,
    DimensionError,
    EmptyInputError,
    NumericsError,
    RangeError,
    TrainingError,
)
from ..numerics import Tape, AdamState, adam_step, backward, softmax_xent, PolySchedule, poly_lr
from ..raster import raster_read, to_unit
from ..utility import get_logger, make_path_existed
from .network import SEG_BANDS, SEG_CLASSES, SegmenterParams, segmenter_apply, segmenter_forward


__all__ = [
    'SegTrainConfig',
    'SegTrainResult',
    'BandMeans',
    'compute_band_means',
    'normalize',
    'augment',
    'labels_for_training',
    'train_seg',
    'load_segmenter',
    'infer',
]


logger = get_logger('segmentation')


@dataclass(frozen=True)
class SegTrainConfig(object):
    batch_size: int = 8
    total_steps: int = 2000
    base_lr: float = 1e-4
    weight_decay: float = 5e-4
    power: float = 0.9
    augmentation: bool = True
    seed: int = 7
    log_interval: int = 50
    workers: int = 4
    classes: int = 8

    def __post_init__(self):
        if self.batch_size < 1:
            raise RangeError(f'Parameter <batch_size> should be at least 1, got {self.batch_size}.')
        if self.total_steps < 1:
            raise RangeError(f'Parameter <total_steps> should be at least 1, got {self.total_steps}.')
        if self.base_lr <= 0 or self.weight_decay < 0 or self.power <= 0:
            raise RangeError('Parameters <base_lr> and <power> should be positive, <weight_decay> non-negative.')
        if self.log_interval < 1 or self.workers < 1:
            raise RangeError('Parameters <log_interval> and <workers> should be at least 1.')
        if not 2 <= self.classes <= SEG_CLASSES:
            raise RangeError(f'Parameter <classes> should be in [2, {SEG_CLASSES}], got {self.classes}.')

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SegTrainConfig':
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})


class SegTrainResult(NamedTuple):
    params: SegmenterParams
    checkpoint: Path
    log_path: Path
    log: pd.DataFrame


@dataclass(frozen=True)
class BandMeans(object):
    means: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, 'means', tuple(float(v) for v in self.means))
        if len(self.means) != SEG_BANDS:
            raise DimensionError(f'BandMeans should have {SEG_BANDS} entries, got {len(self.means)}.')
        if not all(np.isfinite(self.means)):
            raise RangeError(f'BandMeans should be finite, got {self.means}.')

    def to_dict(self) -> Dict[str, Any]:
        return {'means': list(self.means)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'BandMeans':
        return cls(means=tuple(data['means']))

    def negated(self) -> 'BandMeans':
        return BandMeans(means=tuple(-v for v in self.means))


def compute_band_means(tile_sets: Sequence[Sequence[Raster]]) -> BandMeans:
    """Mean of every band over all valid pixels of all listed tile sets, in [-1, 1] space."""
    total = np.zeros(SEG_BANDS, dtype=np.float64)
    count = 0
    for tiles in tile_sets:
        for tile in tiles:
            if tile.bands != SEG_BANDS:
                raise DimensionError(f'Image tiles should have {SEG_BANDS} bands, got {tile.bands}.')
            unit = to_unit(tile)
            values = unit.samples[:, unit.validmask].astype(np.float64)
            total += values.sum(axis=1)
            count += values.shape[1]
    if count == 0:
        raise EmptyInputError('No valid pixel in the listed tile sets.')
    return BandMeans(means=tuple(total / count))


def normalize(tile: Raster, means: BandMeans) -> Raster:
    """Subtract means[b] from band b; the validmask is untouched."""
    if tile.bands != len(means.means):
        raise DimensionError(f'Tile has {tile.bands} bands, means have {len(means.means)}.')
    unit = to_unit(tile)
    samples = (unit.samples.astype(np.float64) - np.asarray(means.means)[:, None, None]).astype(np.float32)
    return unit.replace(samples=samples, validmask=unit.validmask.copy())


def augment(image: Raster, labels: Raster, rng: np.random.Generator) -> Tuple[Raster, Raster]:
    """
    Apply one transform drawn uniformly from {rot0, rot90, rot180, rot270} x {no flip, horizontal flip}
    to the image, the labels and both masks.
    """
    if (image.width, image.height) != (labels.width, labels.height):
        raise DimensionError(
            f'Labels are {labels.width}x{labels.height}, image is {image.width}x{image.height}.'
        )
    k = int(rng.integers(4))
    flip = bool(rng.integers(2))

    def _samples(values: np.ndarray) -> np.ndarray:
        values = np.rot90(values, k=k, axes=(1, 2))
        return np.ascontiguousarray(values[:, :, ::-1] if flip else values)

    def _mask(values: np.ndarray) -> np.ndarray:
        values = np.rot90(values, k=k, axes=(0, 1))
        return np.ascontiguousarray(values[:, ::-1] if flip else values)

    return (
        image.replace(samples=_samples(image.samples), validmask=_mask(image.validmask)),
        labels.replace(samples=_samples(labels.samples), validmask=_mask(labels.validmask)),
    )


def labels_for_training(labels: Raster, image_mask: np.ndarray) -> np.ndarray:
    """(H, W) class indices with 255 wherever the label or the image is invalid."""
    return np.where(labels.validmask & image_mask, labels.samples[0], LABEL_NODATA).astype(np.uint8)


def _batches(count: int, batch_size: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
    """Consecutive slices of successive seeded permutations."""
    pending: List[int] = []
    while True:
        while len(pending) < batch_size:
            pending.extend(rng.permutation(count).tolist())
        yield np.asarray(pending[:batch_size])
        pending = pending[batch_size:]


def _load_samples(records: Sequence[DatasetRecord], classes: int) -> List[Tuple[Raster, Raster]]:
    result: List[Tuple[Raster, Raster]] = []
    for record in records:
        image = raster_read(record.image_path)
        labels = raster_read(record.label_path)
        if image.bands != SEG_BANDS:
            raise DimensionError(f'Image <{record.image_path}> has {image.bands} bands, expected {SEG_BANDS}.')
        if (image.width, image.height) != (labels.width, labels.height) or labels.bands != 1:
            raise DimensionError(f'Label <{record.label_path}> does not match image <{record.image_path}>.')
        target = labels_for_training(labels, image.validmask)
        valid = target != LABEL_NODATA
        if np.any(target[valid] >= classes):
            raise RangeError(f'Label <{record.label_path}> holds a class index outside [0, {classes}).')
        if not valid.any():
            logger.warning('sample skipped, no valid label pixel', image=record.image_path)
            continue
        result.append((image, labels))
    return result


def _save(params: SegmenterParams, path: Path, config: SegTrainConfig, means: BandMeans, step: int,
          diagnostic: bool = False) -> Path:
    meta = {'means': means.to_dict(), 'train_config': config.to_dict(), 'step': step}
    return params.save(path, meta, diagnostic=diagnostic)


def train_seg(
        records: Sequence[DatasetRecord],
        config: SegTrainConfig,
        means: BandMeans,
        out_dir: Path,
        name: str = 'seg',
) -> SegTrainResult:
    """
    Train a segmenter on the manifest <records>. Writes <name>.ckpt and <name>_log.csv
    (columns step, lr, loss) into <out_dir>.
    """
    if not records:
        raise EmptyInputError('Training manifest is empty.')
    out_dir = Path(out_dir)
    make_path_existed(out_dir)
    samples = _load_samples(records, config.classes)
    if not samples:
        raise EmptyInputError('Training manifest has no sample with a valid label pixel.')

    params = SegmenterParams(seed=config.seed, classes=config.classes)
    state = AdamState(lr=config.base_lr, weight_decay=config.weight_decay)
    schedule = PolySchedule(base_lr=config.base_lr, total_steps=config.total_steps, power=config.power)
    order_rng = np.random.default_rng(config.seed)
    augment_rng = np.random.default_rng(config.seed + 1)
    batches = _batches(len(samples), config.batch_size, order_rng)
    logger.info(
        'segmentation training started',
        name=name, samples=len(samples), config=config.to_dict(), means=means.to_dict(),
    )

    rows: List[Dict[str, float]] = []
    for step in range(config.total_steps):
        lr = poly_lr(schedule, step)
        images: List[np.ndarray] = []
        targets: List[np.ndarray] = []
        for index in next(batches):
            image, labels = samples[int(index)]
            if config.augmentation:
                image, labels = augment(image, labels, augment_rng)
            image = normalize(image, means)
            images.append(np.where(image.validmask[None], image.samples, 0.0).astype(np.float32))
            targets.append(labels_for_training(labels, image.validmask))
        x = np.stack(images)
        y = np.stack(targets)

        error: Optional[NumericsError] = None
        try:
            tape = Tape()
            logits = segmenter_apply(params.on(tape), x)
            loss = softmax_xent(logits, y, LABEL_NODATA)
            grads = backward(tape, loss)
            loss_value = loss.item()
        except NumericsError as e:
            error = e
            loss_value = float('nan')
        rows.append({'step': step, 'lr': lr, 'loss': loss_value})
        if not np.isfinite(loss_value):
            path = _save(params, out_dir.joinpath(f'{name}_diagnostic.ckpt'), config, means, step, diagnostic=True)
            logger.error('non-finite segmentation loss', name=name, step=step, error=str(error) if error else None)
            raise TrainingError(f'Non-finite segmentation loss at step {step}.', path) from error

        values, state = adam_step(params.values, grads, state, lr=lr)
        params = params.replace(values)
        if step % config.log_interval == 0 or step == config.total_steps - 1:
            valid = y != LABEL_NODATA
            accuracy = float(np.mean(logits.values.argmax(axis=1)[valid] == y[valid]))
            logger.info('segmentation step', name=name, step=step, lr=lr, loss=round(loss_value, 6), pixel_accuracy=round(accuracy, 4))

    checkpoint = _save(params, out_dir.joinpath(f'{name}.ckpt'), config, means, config.total_steps)
    log = pd.DataFrame(rows, columns=['step', 'lr', 'loss'])
    log_path = out_dir.joinpath(f'{name}_log.csv')
    log.to_csv(log_path, index=False)
    logger.info('segmentation training finished', name=name, checkpoint=str(checkpoint))
    return SegTrainResult(params, checkpoint, log_path, log)


def load_segmenter(path: Path) -> Tuple[SegmenterParams, BandMeans]:
    params, meta = SegmenterParams.load(path)
    return params, BandMeans.from_dict(meta['means'])


def _infer_one(params: SegmenterParams, tile: Raster, means: BandMeans) -> Raster:
    if tile.bands != SEG_BANDS:
        raise DimensionError(f'Tile has {tile.bands} bands, the segmenter expects {SEG_BANDS}.')
    image = normalize(tile, means)
    x = np.where(image.validmask[None], image.samples, 0.0).astype(np.float32)[None]
    predicted = segmenter_forward(params, x)[0].argmax(axis=0)
    values = np.where(tile.validmask, predicted, LABEL_NODATA).astype(np.uint8)
    return Raster(samples=values[None], validmask=tile.validmask.copy(), geotransform=tile.geotransform)


def infer(params: SegmenterParams, tiles: Sequence[Raster], means: BandMeans, workers: int = 4) -> List[Raster]:
    """
    Per-pixel argmax label tiles (class indices, 255 where the input is invalid), in input order.
    Every tile is an independent forward pass.
    """
    if len(means.means) != SEG_BANDS:
        raise DimensionError(f'Band means have {len(means.means)} entries, expected {SEG_BANDS}.')
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        return list(executor.map(lambda t: _infer_one(params, t, means), tiles))
