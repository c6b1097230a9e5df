# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


from typing import List, Set, Tuple
from pathlib import Path

import numpy as np
import pytest

from CrossSensorWorkshop.definition import (
    LABEL_NODATA,
    DTypeEnum,
    Raster,
    DatasetRecord,
    DimensionError,
    EmptyInputError,
    NumericsError,
    RangeError,
    TrainingError,
)
from CrossSensorWorkshop.numerics import Tensor, gradient_check, mul, reduce_sum, poly_lr, PolySchedule
from CrossSensorWorkshop.raster import raster_write, label_raster
from CrossSensorWorkshop.segmentation import (
    SEG_CLASSES,
    SegmenterParams,
    segmenter_apply,
    segmenter_forward,
    SegTrainConfig,
    BandMeans,
    compute_band_means,
    normalize,
    augment,
    labels_for_training,
    train_seg,
    load_segmenter,
    infer,
)
from CrossSensorWorkshop.segmentation import trainer as seg_trainer


def _f32_tile(values: np.ndarray, validmask: np.ndarray = None) -> Raster:
    values = np.asarray(values, dtype=np.float32)
    if validmask is None:
        validmask = np.ones(values.shape[1:], dtype=bool)
    return Raster(samples=values, validmask=validmask)


def _write_samples(tmp_path: Path, count: int, size: int = 16) -> List[DatasetRecord]:
    rng = np.random.default_rng(21)
    records: List[DatasetRecord] = []
    for i in range(count):
        labels = rng.integers(0, 4, size=(size, size))
        labels[0, :] = LABEL_NODATA
        image = np.stack([labels * 8000 + 10000 + b * 500 for b in range(6)]).astype(np.uint16)
        image_path = tmp_path.joinpath(f'image_{i:05d}.mbt')
        label_path = tmp_path.joinpath(f'label_{i:05d}.mbt')
        raster_write(Raster(samples=image, validmask=np.ones((size, size))), image_path)
        raster_write(label_raster(labels), label_path)
        records.append(DatasetRecord(str(image_path), str(label_path)))
    return records


def test_band_means():
    means = BandMeans(means=(0.1, 0.2, 0.3, 0.4, 0.5, 0.6))
    assert BandMeans.from_dict(means.to_dict()) == means
    assert means.negated().means[0] == -0.1
    with pytest.raises(DimensionError):
        BandMeans(means=(0.0,) * 3)
    with pytest.raises(RangeError):
        BandMeans(means=(float('nan'),) * 6)


def test_compute_band_means():
    a = _f32_tile(np.full((6, 4, 4), 0.2))
    b = _f32_tile(np.full((6, 4, 4), -0.2))
    assert compute_band_means([[a], [b]]).means == pytest.approx((0.0,) * 6)

    masked = _f32_tile(np.full((6, 2, 2), 0.4), validmask=np.array([[True, False], [False, False]]))
    masked.samples[:, 0, 1] = -1.0
    assert compute_band_means([[masked]]).means == pytest.approx((0.4,) * 6)

    with pytest.raises(EmptyInputError):
        compute_band_means([[]])


def test_normalize_round_trip():
    tile = _f32_tile(np.random.default_rng(1).uniform(-1, 1, size=(6, 4, 4)))
    means = BandMeans(means=(0.1, -0.2, 0.3, 0.0, 0.05, -0.5))
    normalized = normalize(tile, means)
    assert normalized.samples[1, 0, 0] == pytest.approx(tile.samples[1, 0, 0] + 0.2, abs=1e-6)
    assert np.allclose(normalize(normalized, means.negated()).samples, tile.samples, atol=1e-6)


def test_augment_moves_image_and_labels_together():
    rng = np.random.default_rng(2)
    labels = rng.integers(0, 8, size=(5, 5))
    image = _f32_tile(np.stack([labels] * 6).astype(np.float32), validmask=labels != 3)
    label = label_raster(labels)
    transforms: Set[Tuple[int, ...]] = set()
    for _ in range(64):
        new_image, new_label = augment(image, label, rng)
        assert np.array_equal(new_image.samples[0].astype(np.uint8), new_label.samples[0])
        assert np.array_equal(new_image.validmask, new_label.samples[0] != 3)
        assert sorted(new_label.samples.ravel().tolist()) == sorted(labels.ravel().tolist())
        transforms.add(tuple(new_label.samples.ravel().tolist()))
    assert len(transforms) <= 8


def test_augment_is_deterministic():
    image = _f32_tile(np.random.default_rng(3).normal(size=(6, 4, 4)))
    label = label_raster(np.arange(16).reshape(4, 4))
    first = [augment(image, label, np.random.default_rng(9))[1] for _ in range(2)]
    assert first[0] == first[1]


def test_labels_for_training():
    labels = label_raster(np.array([[1, 2], [LABEL_NODATA, 3]]))
    image_mask = np.array([[True, False], [True, True]])
    assert labels_for_training(labels, image_mask).tolist() == [[1, LABEL_NODATA], [LABEL_NODATA, 3]]


def test_segmenter_shapes():
    params = SegmenterParams(seed=0)
    logits = segmenter_forward(params, np.zeros((2, 6, 16, 32)))
    assert logits.shape == (2, SEG_CLASSES, 16, 32)
    assert SegmenterParams(seed=0, classes=4).values['head_w'].shape == (4, 32, 1, 1)
    with pytest.raises(DimensionError):
        segmenter_forward(params, np.zeros((1, 6, 24, 24)))
    with pytest.raises(ValueError):
        SegmenterParams(classes=1)


def test_segmenter_gradients():
    rng = np.random.default_rng(4)
    values = SegmenterParams(seed=5, dtype=np.float64).values
    x = rng.uniform(-1, 1, size=(1, 6, 16, 16))
    weights = rng.normal(size=(1, SEG_CLASSES, 16, 16))

    def _loss(p):
        return reduce_sum(mul(segmenter_apply(p, x), Tensor(weights)))

    assert gradient_check(_loss, values, step=1e-6, samples=2, seed=3) < 1e-3


def test_train_seg(tmp_path: Path):
    records = _write_samples(tmp_path, 3)
    means = BandMeans(means=(-0.3,) * 6)
    config = SegTrainConfig(batch_size=2, total_steps=3, seed=4, log_interval=1, workers=1)
    result = train_seg(records, config, means, tmp_path.joinpath('a'), name='baseline')

    assert result.checkpoint.name == 'baseline.ckpt'
    assert result.log_path.name == 'baseline_log.csv'
    assert list(result.log.columns) == ['step', 'lr', 'loss']
    assert len(result.log) == 3
    assert np.all(np.isfinite(result.log['loss']))
    schedule = PolySchedule(base_lr=config.base_lr, total_steps=3, power=config.power)
    assert result.log['lr'].tolist() == pytest.approx([poly_lr(schedule, s) for s in range(3)])

    again = train_seg(records, config, means, tmp_path.joinpath('b'), name='baseline')
    assert again.checkpoint.read_bytes() == result.checkpoint.read_bytes()

    params, loaded_means = load_segmenter(result.checkpoint)
    assert loaded_means == means
    assert params.classes == SEG_CLASSES
    assert np.array_equal(params.values['head_w'], result.params.values['head_w'])


def test_train_seg_errors(tmp_path: Path):
    config = SegTrainConfig(batch_size=1, total_steps=1, workers=1)
    means = BandMeans(means=(0.0,) * 6)
    with pytest.raises(EmptyInputError):
        train_seg([], config, means, tmp_path)

    records = _write_samples(tmp_path, 1)
    with pytest.raises(RangeError):
        train_seg(records, SegTrainConfig(batch_size=1, total_steps=1, workers=1, classes=2), means, tmp_path)
    for classes in [1, 9]:
        with pytest.raises(RangeError):
            SegTrainConfig(classes=classes)


def test_infer():
    rng = np.random.default_rng(6)
    validmask = np.ones((16, 16), dtype=bool)
    validmask[:4, :] = False
    tiles = [
        Raster(samples=rng.integers(0, 65535, size=(6, 16, 16)).astype(np.uint16), validmask=validmask)
        for _ in range(3)
    ]
    params = SegmenterParams(seed=1)
    means = BandMeans(means=(0.0,) * 6)
    predictions = infer(params, tiles, means, workers=2)
    assert len(predictions) == 3
    for tile, prediction in zip(tiles, predictions):
        assert prediction.dtype == DTypeEnum.U8
        assert prediction.bands == 1
        assert np.all(prediction.samples[0][~validmask] == LABEL_NODATA)
        assert np.all(prediction.samples[0][validmask] < SEG_CLASSES)
    assert infer(params, tiles[:1], means, workers=1)[0] == predictions[0]


def test_train_seg_keeps_numerics_error(tmp_path: Path, monkeypatch):
    def _broken(*args, **kwargs):
        raise NumericsError('Parameter <logits> has non-finite values.')

    monkeypatch.setattr(seg_trainer, 'softmax_xent', _broken)
    records = _write_samples(tmp_path, 1)
    config = SegTrainConfig(batch_size=1, total_steps=2, workers=1)
    with pytest.raises(TrainingError) as e:
        train_seg(records, config, BandMeans(means=(0.0,) * 6), tmp_path.joinpath('out'), name='baseline')
    assert isinstance(e.value.__cause__, NumericsError)
    assert '<logits>' in str(e.value.__cause__)
    assert e.value.checkpoint == tmp_path.joinpath('out', 'baseline_diagnostic.ckpt')
    assert e.value.checkpoint.is_file()
