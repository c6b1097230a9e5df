# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


"""
Domain styles, Stats-mode and Gan-mode stylization, and the mixed training dataset.

Stats mode matches per-band moments: for every band b,
    out = sigma_T(b) * (in - mu_S(b)) / (sigma_S(b) + 1e-8) + mu_T(b), clamped to [-1, 1].
Gan mode runs the trained source-to-target generator over each tile.
"""


from typing import Any, Dict, List, Optional, Sequence, Tuple, Union
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from pathlib import Path
import os

import numpy as np

from ..definition import (
    Raster,
    DatasetRecord,
    OriginEnum,
    CheckpointError,
    DimensionError,
    EmptyInputError,
    ManifestError,
    RangeError,
)
from ..raster import raster_read, raster_write, rescale_back, to_unit
from ..utility import get_logger, read_jsonl, write_jsonl, make_path_existed
from .network import STYLE_BANDS, DomainStyle, GeneratorParams, generator_forward


__all__ = [
    'STATS_EPS',
    'StyleModeEnum',
    'extract_domain_style',
    'stylize_stats_mode',
    'restore_stats_mode',
    'load_generator',
    'stylize_dataset',
    'stylize_files',
    'build_mixed_dataset',
    'validate_manifest',
    'read_manifest',
    'write_manifest',
]


STATS_EPS: float = 1e-8

logger = get_logger('style')


class StyleModeEnum(Enum):
    Stats = 'Stats'
    Gan = 'Gan'

    @classmethod
    def parse(cls, text: Union[str, 'StyleModeEnum']) -> 'StyleModeEnum':
        if isinstance(text, cls):
            return text
        for item in cls:
            if item.value.lower() == str(text).strip().lower():
                return item
        raise ValueError(f'Parameter <mode> should be one of {[m.value for m in cls]}, got {text!r}.')


def extract_domain_style(tiles: Sequence[Raster]) -> DomainStyle:
    """Per-band mean and population std over every valid pixel of every tile, in [-1, 1] space."""
    if not tiles:
        raise EmptyInputError('Parameter <tiles> is empty.')
    count = 0
    total = np.zeros(STYLE_BANDS, dtype=np.float64)
    units: List[Raster] = []
    for tile in tiles:
        if tile.bands != STYLE_BANDS:
            raise DimensionError(f'Style tiles should have {STYLE_BANDS} bands, got {tile.bands}.')
        unit = to_unit(tile)
        units.append(unit)
        values = unit.samples[:, unit.validmask].astype(np.float64)
        count += values.shape[1]
        total += values.sum(axis=1)
    if count == 0:
        raise EmptyInputError('Tiles have no valid pixel.')
    mean = total / count
    squares = np.zeros(STYLE_BANDS, dtype=np.float64)
    for unit in units:
        values = unit.samples[:, unit.validmask].astype(np.float64)
        squares += ((values - mean[:, None]) ** 2).sum(axis=1)
    return DomainStyle(mean=tuple(mean), std=tuple(np.sqrt(squares / count)))


def _check_style_tile(tile: Raster, *styles: DomainStyle) -> None:
    for style in styles:
        if style.bands != tile.bands:
            raise DimensionError(f'Tile has {tile.bands} bands, style has {style.bands}.')


def _affine(tile: Raster, scale: np.ndarray, offset: np.ndarray) -> Raster:
    unit = to_unit(tile)
    values = unit.samples.astype(np.float64)
    out = np.clip(values * scale[:, None, None] + offset[:, None, None], -1.0, 1.0)
    samples = np.where(unit.validmask[None], out, values).astype(np.float32)
    return unit.replace(samples=samples, validmask=unit.validmask.copy())


def stylize_stats_mode(tile: Raster, source_style: DomainStyle, target_style: DomainStyle) -> Raster:
    """Moment-match the valid pixels of a U16 or F32 tile; returns an F32 tile in [-1, 1]."""
    _check_style_tile(tile, source_style, target_style)
    mu_s, sigma_s = np.asarray(source_style.mean), np.asarray(source_style.std)
    mu_t, sigma_t = np.asarray(target_style.mean), np.asarray(target_style.std)
    scale = sigma_t / (sigma_s + STATS_EPS)
    return _affine(tile, scale, mu_t - scale * mu_s)


def restore_stats_mode(tile: Raster, source_style: DomainStyle, target_style: DomainStyle) -> Raster:
    """Inverse of stylize_stats_mode for samples that were not clamped."""
    _check_style_tile(tile, source_style, target_style)
    sigma_t = np.asarray(target_style.std)
    if np.any(sigma_t == 0):
        raise RangeError('Stats-mode stylization with a zero target std cannot be inverted.')
    mu_s, sigma_s = np.asarray(source_style.mean), np.asarray(source_style.std)
    mu_t = np.asarray(target_style.mean)
    scale = (sigma_s + STATS_EPS) / sigma_t
    return _affine(tile, scale, mu_s - scale * mu_t)


def load_generator(checkpoint: Union[str, Path, None]) -> Tuple[GeneratorParams, DomainStyle]:
    """Load a generator checkpoint and the style it injects."""
    if checkpoint is None:
        raise CheckpointError('Gan mode needs a generator checkpoint.')
    params, meta = GeneratorParams.load(checkpoint)
    if 'style' not in meta:
        raise CheckpointError(f'Checkpoint <{checkpoint}> carries no injection style.')
    return params, DomainStyle.from_dict(meta['style'])


def stylize_dataset(
        tiles: Sequence[Raster],
        mode: Union[StyleModeEnum, str],
        source_style: Optional[DomainStyle] = None,
        target_style: Optional[DomainStyle] = None,
        checkpoint: Union[str, Path, None] = None,
        workers: Optional[int] = None,
) -> List[Raster]:
    """
    Stylize every tile; one U16 output per input, in input order, validmasks preserved.
    Stats mode needs both styles, Gan mode needs the source-to-target generator checkpoint.
    """
    mode = StyleModeEnum.parse(mode)
    if mode == StyleModeEnum.Stats:
        if source_style is None or target_style is None:
            raise ValueError('Stats mode needs <source_style> and <target_style>.')

        def _one(tile: Raster) -> Raster:
            return rescale_back(stylize_stats_mode(tile, source_style, target_style))
    else:
        params, style = load_generator(checkpoint)

        def _one(tile: Raster) -> Raster:
            return rescale_back(generator_forward(params, to_unit(tile), style))

    with ThreadPoolExecutor(max_workers=workers or min(8, os.cpu_count() or 1)) as executor:
        result = list(executor.map(_one, tiles))
    logger.info('stylized', mode=mode.value, tiles=len(result))
    return result


def stylize_files(
        image_paths: Sequence[Path],
        out_dir: Path,
        mode: Union[StyleModeEnum, str],
        source_style: Optional[DomainStyle] = None,
        target_style: Optional[DomainStyle] = None,
        checkpoint: Union[str, Path, None] = None,
        workers: Optional[int] = None,
) -> List[Path]:
    """Stylize MBT tiles into <out_dir>, keeping file names."""
    make_path_existed(out_dir)
    tiles = [raster_read(p) for p in image_paths]
    stylized = stylize_dataset(tiles, mode, source_style, target_style, checkpoint, workers)
    result: List[Path] = []
    for path, tile in zip(image_paths, stylized):
        target = out_dir.joinpath(Path(path).name)
        raster_write(tile, target)
        result.append(target)
    return result


def build_mixed_dataset(originals: Sequence[DatasetRecord], stylized_images: Sequence[Union[str, Path]]) -> List[DatasetRecord]:
    """
    Originals followed by their stylized versions; stylized sample i shares the label of
    original sample i.
    """
    if len(originals) != len(stylized_images):
        raise ManifestError(f'{len(originals)} original samples but {len(stylized_images)} stylized images.')
    result: List[DatasetRecord] = [
        DatasetRecord(image_path=r.image_path, label_path=r.label_path, origin=OriginEnum.Original)
        for r in originals
    ]
    for record, image in zip(originals, stylized_images):
        result.append(DatasetRecord(image_path=str(image), label_path=record.label_path, origin=OriginEnum.Stylized))
    validate_manifest(result)
    return result


def validate_manifest(records: Sequence[DatasetRecord]) -> None:
    """Every stylized sample needs an original sample with the same label."""
    if not records:
        raise ManifestError('Manifest is empty.')
    original_labels = {r.label_path for r in records if r.origin == OriginEnum.Original}
    for i, record in enumerate(records):
        if record.origin == OriginEnum.Stylized and record.label_path not in original_labels:
            raise ManifestError(f'Stylized sample {i} <{record.image_path}> has no original partner.')


def _relative(path: str, base: Path) -> str:
    try:
        return Path(path).resolve().relative_to(base.resolve()).as_posix()
    except ValueError:
        return Path(path).as_posix()


def write_manifest(path: Path, records: Sequence[DatasetRecord]) -> None:
    """JSON lines; paths under the manifest directory are stored relative to it."""
    base = Path(path).parent
    data: List[Dict[str, Any]] = []
    for record in records:
        item = record.to_dict()
        item['image_path'] = _relative(record.image_path, base)
        item['label_path'] = _relative(record.label_path, base)
        data.append(item)
    write_jsonl(Path(path), data)


def read_manifest(path: Path, validate: bool = True) -> List[DatasetRecord]:
    base = Path(path).parent
    result: List[DatasetRecord] = []
    for item in read_jsonl(Path(path)):
        record = DatasetRecord.from_dict(item)
        result.append(
            DatasetRecord(
                image_path=str(base.joinpath(record.image_path)),
                label_path=str(base.joinpath(record.label_path)),
                origin=record.origin,
            )
        )
    if validate:
        validate_manifest(result)
    return result
