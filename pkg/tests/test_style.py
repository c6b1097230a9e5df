# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


from typing import List
from pathlib import Path

import numpy as np
import pytest

from CrossSensorWorkshop.definition import (
    DTypeEnum,
    Raster,
    DatasetRecord,
    OriginEnum,
    DimensionError,
    ManifestError,
    CheckpointError,
    NumericsError,
    RangeError,
    TrainingError,
)
from CrossSensorWorkshop.numerics import Tensor, gradient_check, mul, reduce_sum
from CrossSensorWorkshop.raster import raster_write, raster_read
from CrossSensorWorkshop.style import (
    DomainStyle,
    GeneratorParams,
    DiscriminatorParams,
    generator_apply,
    discriminator_apply,
    generator_forward,
    discriminator_forward,
    StyleModeEnum,
    extract_domain_style,
    stylize_stats_mode,
    restore_stats_mode,
    stylize_dataset,
    stylize_files,
    build_mixed_dataset,
    write_manifest,
    read_manifest,
    StyleTrainConfig,
    train_style,
)
from CrossSensorWorkshop.style import trainer as style_trainer


def _unit_tile(value: float, size: int = 4) -> Raster:
    return Raster(samples=np.full((6, size, size), value, dtype=np.float32), validmask=np.ones((size, size)))


def _u16_tiles(count: int, size: int, seed: int, low: int = 20000, high: int = 40000) -> List[Raster]:
    rng = np.random.default_rng(seed)
    return [
        Raster(samples=rng.integers(low, high, size=(6, size, size)).astype(np.uint16), validmask=np.ones((size, size)))
        for _ in range(count)
    ]


def _style(mean: float, std: float) -> DomainStyle:
    return DomainStyle(mean=(mean,) * 6, std=(std,) * 6)


def test_domain_style():
    style = DomainStyle(mean=(0.1, 0.2, 0.3, 0.4, 0.5, 0.6), std=(1, 1, 1, 1, 1, 1))
    assert style.code().shape == (12,)
    assert style.code()[6] == 1.0
    assert DomainStyle.from_dict(style.to_dict()) == style
    with pytest.raises(DimensionError):
        DomainStyle(mean=(0.0,) * 5, std=(1.0,) * 5)
    with pytest.raises(RangeError):
        DomainStyle(mean=(0.0,) * 6, std=(-1.0,) * 6)


def test_style_mode_parse():
    assert StyleModeEnum.parse('gan') == StyleModeEnum.Gan
    assert StyleModeEnum.parse('Stats') == StyleModeEnum.Stats
    with pytest.raises(ValueError):
        StyleModeEnum.parse('cyclegan')


def test_extract_domain_style():
    style = extract_domain_style([_unit_tile(0.2)])
    assert style.mean == pytest.approx((0.2,) * 6)
    assert style.std == pytest.approx((0.0,) * 6, abs=1e-7)

    style = extract_domain_style([_unit_tile(-0.5), _unit_tile(0.5)])
    assert style.mean == pytest.approx((0.0,) * 6)
    assert style.std == pytest.approx((0.5,) * 6)


def test_extract_domain_style_skips_invalid_pixels():
    tile = _unit_tile(0.5)
    tile.samples[:, 0, 0] = -1.0
    tile.validmask[0, 0] = False
    style = extract_domain_style([tile])
    assert style.mean == pytest.approx((0.5,) * 6)


def test_stylize_stats_mode():
    source = _style(0.1, 0.2)
    target = _style(-0.3, 0.1)
    tile = Raster(
        samples=np.random.default_rng(1).uniform(-0.5, 0.5, size=(6, 4, 4)).astype(np.float32),
        validmask=np.ones((4, 4)),
    )
    same = stylize_stats_mode(tile, source, source)
    assert np.allclose(same.samples, tile.samples, atol=1e-6)

    fixed = stylize_stats_mode(_unit_tile(0.1), source, target)
    assert np.allclose(fixed.samples, -0.3, atol=1e-6)

    stylized = stylize_stats_mode(tile, source, target)
    assert np.allclose(restore_stats_mode(stylized, source, target).samples, tile.samples, atol=1e-5)

    with pytest.raises(DimensionError):
        stylize_stats_mode(_unit_tile(0.0).replace(samples=np.zeros((5, 4, 4), dtype=np.float32)), source, target)


def test_stylize_stats_mode_keeps_invalid_pixels():
    tile = _unit_tile(0.1)
    tile.samples[:, 1, 1] = 0.9
    tile.validmask[1, 1] = False
    stylized = stylize_stats_mode(tile, _style(0.1, 0.2), _style(-0.3, 0.1))
    assert np.allclose(stylized.samples[:, 1, 1], 0.9)
    assert stylized.validmask.tolist() == tile.validmask.tolist()


def test_untrained_generator_is_near_identity():
    rng = np.random.default_rng(2)
    tile = Raster(samples=rng.uniform(-0.9, 0.9, size=(6, 16, 16)).astype(np.float32), validmask=np.ones((16, 16)))
    internals = {}
    out = generator_forward(GeneratorParams(seed=0), tile, _style(0.0, 0.5), internals)
    assert out.dtype == DTypeEnum.F32
    assert np.allclose(out.samples, tile.samples, atol=1e-5)
    assert internals['content'].shape == (1, 128, 2, 2)
    assert internals['style_sigma'].shape == (1, 128)
    assert np.all((internals['style_sigma'] > 0) & (internals['style_sigma'] < 2))


def test_generator_output_range_and_shape():
    rng = np.random.default_rng(3)
    params = GeneratorParams(seed=4)
    values = dict(params.values)
    values['dec3_w'] = rng.normal(scale=0.5, size=values['dec3_w'].shape)
    params = params.replace(values)
    x = rng.uniform(-1.0, 1.0, size=(2, 6, 16, 16)).astype(np.float32)
    out = generator_forward(params, x, _style(0.2, 0.3))
    assert out.shape == x.shape
    assert np.all(np.abs(out) < 1.0)

    with pytest.raises(DimensionError):
        generator_forward(params, np.zeros((6, 12, 12), dtype=np.float32), _style(0.0, 1.0))


def test_discriminator_patch_map():
    x = np.random.default_rng(5).uniform(-1, 1, size=(1, 6, 64, 64)).astype(np.float32)
    scores = discriminator_forward(DiscriminatorParams(seed=1), x)
    assert scores.shape == (1, 1, 4, 4)
    assert np.all((scores > 0) & (scores < 1))

    with pytest.raises(DimensionError):
        discriminator_forward(DiscriminatorParams(seed=1), np.zeros((1, 6, 24, 24), dtype=np.float32))


def test_generator_gradients():
    rng = np.random.default_rng(6)
    params = GeneratorParams(seed=7, dtype=np.float64)
    values = dict(params.values)
    values['dec3_w'] = rng.normal(scale=0.1, size=values['dec3_w'].shape)
    x = rng.uniform(-0.8, 0.8, size=(1, 6, 16, 16))
    code = _style(0.1, 0.4).code().astype(np.float64)
    weights = rng.normal(size=x.shape)

    def _loss(p):
        return reduce_sum(mul(generator_apply(p, x, code), Tensor(weights)))

    assert gradient_check(_loss, values, step=1e-6, samples=3, seed=1) < 1e-3


def test_discriminator_gradients():
    rng = np.random.default_rng(8)
    values = DiscriminatorParams(seed=9, dtype=np.float64).values
    x = rng.uniform(-1, 1, size=(2, 6, 16, 16))
    weights = rng.normal(size=(2, 1, 1, 1))

    def _loss(p):
        return reduce_sum(mul(discriminator_apply(p, x), Tensor(weights)))

    assert gradient_check(_loss, values, step=1e-6, samples=3, seed=2) < 1e-3


def test_stylize_dataset_stats_mode():
    tiles = _u16_tiles(3, 4, seed=10)
    tiles[0].validmask[0, 0] = False
    source = extract_domain_style(tiles)
    result = stylize_dataset(tiles, 'Stats', source, source, workers=2)
    assert len(result) == 3
    for tile, stylized in zip(tiles, result):
        assert stylized.dtype == DTypeEnum.U16
        assert stylized.validmask.tolist() == tile.validmask.tolist()
        assert np.all(np.abs(stylized.samples.astype(np.int64) - tile.samples.astype(np.int64)) <= 1)

    with pytest.raises(ValueError):
        stylize_dataset(tiles, StyleModeEnum.Stats)
    with pytest.raises(CheckpointError):
        stylize_dataset(tiles, StyleModeEnum.Gan)


def test_stylize_files_keeps_names(tmp_path: Path):
    tiles = _u16_tiles(2, 4, seed=11)
    paths = []
    for i, tile in enumerate(tiles):
        path = tmp_path.joinpath(f'image_{i:05d}.mbt')
        raster_write(tile, path)
        paths.append(path)
    style = extract_domain_style(tiles)
    out = stylize_files(paths, tmp_path.joinpath('stylized'), 'Stats', style, _style(0.0, 0.1))
    assert [p.name for p in out] == ['image_00000.mbt', 'image_00001.mbt']
    assert raster_read(out[0]).dtype == DTypeEnum.U16


def test_build_mixed_dataset(tmp_path: Path):
    originals = [
        DatasetRecord(str(tmp_path.joinpath(f'image_{i}.mbt')), str(tmp_path.joinpath(f'label_{i}.mbt')))
        for i in range(3)
    ]
    stylized = [tmp_path.joinpath('stylized', f'image_{i}.mbt') for i in range(3)]
    mixed = build_mixed_dataset(originals, stylized)
    assert len(mixed) == 6
    assert [r.origin for r in mixed] == [OriginEnum.Original] * 3 + [OriginEnum.Stylized] * 3
    for i in range(3):
        assert mixed[i + 3].label_path == mixed[i].label_path

    path = tmp_path.joinpath('mixed_manifest.jsonl')
    write_manifest(path, mixed)
    assert 'stylized/image_0.mbt' in path.read_text(encoding='utf-8')
    assert read_manifest(path) == mixed

    with pytest.raises(ManifestError):
        build_mixed_dataset(originals, stylized[:2])


def test_manifest_rejects_orphan_stylized_sample(tmp_path: Path):
    records = [
        DatasetRecord('a.mbt', 'label_a.mbt', OriginEnum.Original),
        DatasetRecord('b.mbt', 'label_b.mbt', OriginEnum.Stylized),
    ]
    path = tmp_path.joinpath('bad.jsonl')
    write_manifest(path, records)
    with pytest.raises(ManifestError):
        read_manifest(path)
    assert len(read_manifest(path, validate=False)) == 2


def test_train_style(tmp_path: Path):
    source = _u16_tiles(3, 16, seed=12, low=30000, high=40000)
    target = _u16_tiles(3, 16, seed=13, low=20000, high=26000)
    config = StyleTrainConfig(steps=2, batch_size=2, seed=5, checkpoint_interval=0, log_interval=1)
    result = train_style(source, target, config, tmp_path.joinpath('a'))

    assert sorted(result.checkpoints) == ['d_s', 'd_t', 'g_st', 'g_ts']
    assert all(p.is_file() for p in result.checkpoints.values())
    assert len(result.log) == 2
    assert np.all(np.isfinite(result.log.drop(columns=['step']).to_numpy(dtype=np.float64)))
    assert result.log_path.is_file()
    assert result.source_style.mean[0] > result.target_style.mean[0]

    again = train_style(source, target, config, tmp_path.joinpath('b'))
    assert again.checkpoints['g_st'].read_bytes() == result.checkpoints['g_st'].read_bytes()

    stylized = stylize_dataset(source, 'Gan', checkpoint=result.checkpoints['g_st'], workers=1)
    assert len(stylized) == 3
    assert stylized[0].dtype == DTypeEnum.U16
    assert stylized[0].samples.shape == (6, 16, 16)


def test_train_style_checkpoint_interval(tmp_path: Path):
    tiles = _u16_tiles(2, 16, seed=14)
    config = StyleTrainConfig(steps=2, batch_size=1, seed=1, checkpoint_interval=1, log_interval=1)
    train_style(tiles, tiles, config, tmp_path)
    assert tmp_path.joinpath('step_000001', 'g_st.ckpt').is_file()
    assert not tmp_path.joinpath('step_000002').exists()


def test_train_style_one_step_moves_every_network(tmp_path: Path):
    tiles = _u16_tiles(1, 16, seed=15)
    config = StyleTrainConfig(steps=1, batch_size=1, seed=9, checkpoint_interval=0, log_interval=1)
    result = train_style(tiles, tiles, config, tmp_path)

    initial = {
        'g_st': GeneratorParams(seed=9),
        'd_t': DiscriminatorParams(seed=10),
        'g_ts': GeneratorParams(seed=11),
        'd_s': DiscriminatorParams(seed=12),
    }
    for name, params in initial.items():
        trained, meta = params.__class__.load(result.checkpoints[name])
        assert meta['role'] == name
        assert set(trained.values) == set(params.values)
        assert any(not np.array_equal(trained.values[k], v) for k, v in params.values.items()), name


def test_train_style_keeps_numerics_error(tmp_path: Path, monkeypatch):
    def _broken(*args, **kwargs):
        raise NumericsError('Parameter <d_real> has non-finite values.')

    monkeypatch.setattr(style_trainer, 'gan_terms', _broken)
    tiles = _u16_tiles(1, 16, seed=16)
    config = StyleTrainConfig(steps=1, batch_size=1, seed=2, checkpoint_interval=0, log_interval=1)
    with pytest.raises(TrainingError) as e:
        train_style(tiles, tiles, config, tmp_path)
    assert isinstance(e.value.__cause__, NumericsError)
    assert '<d_real>' in str(e.value.__cause__)
    assert e.value.checkpoint.joinpath('g_st.ckpt').is_file()
