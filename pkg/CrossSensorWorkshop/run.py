# -*- coding: UTF-8 -*-

__author__ = 'Bruce Frank Wong'


"""
Command line surface.

Every subcommand accepts the common flags --config <json>, --seed <int> and --out <dir>.
Exit codes: 0 success, 1 validation or usage error, 2 runtime error.
"""


from typing import Any, Dict, List, Optional, Sequence
from pathlib import Path
import sys

import click
import pandas as pd

from .config import CONFIGS, load_json, merge_dict, save_json
from .definition import ConfigError, PipelineError, WorkshopError, TileSpec
from .evaluation import confusion, iou_from_confusion, random_point_validation, render_labelmap
from .label import class_distribution, class_index_scheme, get_recode_map, get_scheme, recode, to_class_indices
from .pipeline import PipelineConfig, SynthSpec, read_tiles, resolve_offsets, write_benchmark, write_tiles
from .pipeline import run as run_pipeline
from .raster import band_stats, composite_bands, mosaic_tiles, raster_read, raster_write, read_mask, set_nodata_mask, shift_values, tile_dataset
from .segmentation import SegTrainConfig, compute_band_means, infer as infer_tiles, load_segmenter, train_seg
from .style import (
    StyleModeEnum,
    StyleTrainConfig,
    build_mixed_dataset,
    extract_domain_style,
    read_manifest,
    stylize_files,
    train_style,
    write_manifest,
)
from .utility import configure_logging, make_path_existed, parse_int_list


def common_options(func):
    func = click.option('--out', 'out', type=click.Path(path_type=Path), default=None, help='Output directory.')(func)
    func = click.option('--seed', type=int, default=None, help='Overrides every seed of the config.')(func)
    func = click.option(
        '--config', 'config_path', type=click.Path(path_type=Path), default=None, help='Pipeline config JSON.',
    )(func)
    return func


def _section(config_path: Optional[Path], name: str, seed: Optional[int] = None) -> Dict[str, Any]:
    """CONFIGS[name] with the same section of <config_path> merged over it."""
    data: Dict[str, Any] = {}
    if config_path is not None:
        if not config_path.is_file():
            raise ConfigError(f'Config file <{config_path}> does not exist.')
        try:
            data = load_json(config_path).get(name, {})
        except ValueError as e:
            raise ConfigError(f'Config file <{config_path}> is not valid JSON: {e}')
    result = merge_dict(CONFIGS[name], data)
    if seed is not None:
        result['seed'] = seed
    return result


def _out_dir(out: Optional[Path]) -> Path:
    result = out if out is not None else Path('.')
    make_path_existed(result)
    return result


def _tile_images(tile_dir: Path) -> List[Any]:
    records, _ = read_tiles(tile_dir)
    return [raster_read(r.image_path) for r in records]


@click.group()
@click.option('--log-level', default=None, help='Logging level, default CONFIGS["logging"]["level"].')
def cli(log_level: Optional[str]):
    """Cross-sensor domain adaptation workshop."""
    configure_logging(log_level)


@cli.command()
@click.option('--band', 'bands', type=click.Path(exists=True, path_type=Path), multiple=True, required=True)
@click.option('--mask', type=click.Path(exists=True, path_type=Path), default=None, help='Cloud mask, nonzero = masked.')
@common_options
def ingest(bands: Sequence[Path], mask: Optional[Path], config_path, seed, out):
    """Stack single-band rasters into <out>/composite.mbt."""
    image = composite_bands([raster_read(p) for p in bands])
    if mask is not None:
        image = set_nodata_mask(image, read_mask(mask))
    path = _out_dir(out).joinpath('composite.mbt')
    raster_write(image, path)
    click.echo(f'{path}: {image.width}x{image.height}, {image.bands} bands, {image.valid_count()} valid pixels')


@cli.command()
@click.argument('image', type=click.Path(exists=True, path_type=Path))
@click.option('--bins', type=int, default=None)
@common_options
def stats(image: Path, bins: Optional[int], config_path, seed, out):
    """Per-band statistics of IMAGE."""
    bins = bins or _section(config_path, 'raster')['histogram_bins']
    result = band_stats(raster_read(image), bins)
    table = pd.DataFrame(
        [{'band': i + 1, 'min': b.minimum, 'max': b.maximum, 'mean': b.mean, 'std': b.std} for i, b in enumerate(result.bands)]
    )
    click.echo(table.to_string(index=False))
    if out is not None:
        save_json(_out_dir(out).joinpath('stats.json'), result.to_dict())


@cli.command()
@click.argument('image', type=click.Path(exists=True, path_type=Path))
@click.option('--offsets', default='auto', help='Comma separated offsets per band, or "auto".')
@click.option('--percentile', type=float, default=None)
@common_options
def shift(image: Path, offsets: str, percentile: Optional[float], config_path, seed, out):
    """Subtract per-band offsets from IMAGE into <out>/shifted.mbt."""
    raster = _section(config_path, 'raster')
    r = raster_read(image)
    values = offsets if offsets == 'auto' else parse_int_list(offsets)
    if percentile is None:
        percentile = raster['shift_percentile']
    resolved = resolve_offsets(r, values, percentile, raster['histogram_bins'])
    path = _out_dir(out).joinpath('shifted.mbt')
    raster_write(shift_values(r, resolved), path)
    click.echo(f'offsets: {",".join(str(v) for v in resolved)}')


@cli.command()
@click.argument('image', type=click.Path(exists=True, path_type=Path))
@click.argument('labels', type=click.Path(exists=True, path_type=Path))
@click.option('--tile-size', type=int, default=None)
@click.option('--stride', type=int, default=None)
@click.option('--min-valid', type=float, default=None)
@common_options
def tile(image: Path, labels: Path, tile_size, stride, min_valid, config_path, seed, out):
    """Cut aligned IMAGE / LABELS tiles into <out>."""
    raster = _section(config_path, 'raster')
    spec = TileSpec(
        tile_size=tile_size or raster['tile_size'],
        stride=stride if stride is not None else raster['stride'],
        min_valid_fraction=min_valid if min_valid is not None else raster['min_valid_fraction'],
    )
    pairs = tile_dataset(raster_read(image), raster_read(labels), spec)
    write_tiles(pairs, _out_dir(out))
    click.echo(f'{len(pairs)} tiles')


@cli.command(name='recode')
@click.argument('labels', type=click.Path(exists=True, path_type=Path))
@click.option('--scheme', default='NALCMS', help='Scheme of LABELS.')
@common_options
def recode_command(labels: Path, scheme: str, config_path, seed, out):
    """Recode LABELS into GENERAL codes and class indices."""
    general = get_scheme('GENERAL')
    coded = recode(raster_read(labels), get_recode_map(scheme))
    out = _out_dir(out)
    raster_write(coded, out.joinpath('labels_general.mbt'))
    raster_write(to_class_indices(coded, general), out.joinpath('labels_index.mbt'))
    distribution = class_distribution(coded, general).to_dict()
    table = pd.DataFrame({'class': list(distribution), 'fraction': list(distribution.values())})
    click.echo(table.to_string(index=False))


@cli.command(name='train-style')
@click.argument('source_tiles', type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.argument('target_tiles', type=click.Path(exists=True, file_okay=False, path_type=Path))
@common_options
def train_style_command(source_tiles: Path, target_tiles: Path, config_path, seed, out):
    """Train both generator/discriminator pairs on two tile directories."""
    config = StyleTrainConfig.from_dict(_section(config_path, 'style', seed))
    result = train_style(_tile_images(source_tiles), _tile_images(target_tiles), config, _out_dir(out))
    for name, path in result.checkpoints.items():
        click.echo(f'{name}: {path}')


@cli.command()
@click.argument('source_tiles', type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option('--mode', type=click.Choice(['Stats', 'Gan'], case_sensitive=False), default='Stats')
@click.option('--target-tiles', type=click.Path(exists=True, file_okay=False, path_type=Path), default=None)
@click.option('--checkpoint', type=click.Path(exists=True, path_type=Path), default=None)
@click.option('--workers', type=int, default=None)
@common_options
def stylize(source_tiles: Path, mode: str, target_tiles, checkpoint, workers, config_path, seed, out):
    """Restyle the images of SOURCE_TILES into <out>."""
    mode = StyleModeEnum.parse(mode)
    source_style = target_style = None
    if mode == StyleModeEnum.Stats:
        if target_tiles is None:
            raise click.UsageError('Stats mode needs --target-tiles.')
        source_style = extract_domain_style(_tile_images(source_tiles))
        target_style = extract_domain_style(_tile_images(target_tiles))
    elif checkpoint is None:
        raise click.UsageError('Gan mode needs --checkpoint.')
    records, _ = read_tiles(source_tiles)
    paths = stylize_files(
        [Path(r.image_path) for r in records], _out_dir(out), mode, source_style, target_style, checkpoint, workers,
    )
    click.echo(f'{len(paths)} tiles stylized')


@cli.command()
@click.argument('source_tiles', type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.argument('stylized_dir', type=click.Path(exists=True, file_okay=False, path_type=Path))
@common_options
def mix(source_tiles: Path, stylized_dir: Path, config_path, seed, out):
    """Write <out>/mixed_manifest.jsonl of original and stylized tiles."""
    originals, _ = read_tiles(source_tiles)
    stylized = [stylized_dir.joinpath(Path(r.image_path).name) for r in originals]
    records = build_mixed_dataset(originals, stylized)
    path = _out_dir(out).joinpath('mixed_manifest.jsonl')
    write_manifest(path, records)
    click.echo(f'{path}: {len(records)} samples')


@cli.command(name='train-seg')
@click.argument('manifest', type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option('--target-tiles', type=click.Path(exists=True, file_okay=False, path_type=Path), default=None,
              help='Target tiles joining the band means.')
@click.option('--name', default='seg')
@common_options
def train_seg_command(manifest: Path, target_tiles, name: str, config_path, seed, out):
    """Train a segmenter on MANIFEST."""
    config = SegTrainConfig.from_dict(_section(config_path, 'segmentation', seed))
    records = read_manifest(manifest)
    tile_sets = [[raster_read(r.image_path) for r in records]]
    if target_tiles is not None:
        tile_sets.append(_tile_images(target_tiles))
    result = train_seg(records, config, compute_band_means(tile_sets), _out_dir(out), name=name)
    click.echo(f'{result.checkpoint} (final loss {result.log["loss"].iloc[-1]:.6f})')


@cli.command(name='infer')
@click.argument('checkpoint', type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument('tiles', type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option('--workers', type=int, default=None)
@common_options
def infer_command(checkpoint: Path, tiles: Path, workers, config_path, seed, out):
    """Predict class indices for every tile of TILES; writes the tiles and <out>/prediction.mbt."""
    workers = workers or _section(config_path, 'segmentation')['workers']
    params, means = load_segmenter(checkpoint)
    records, tile_records = read_tiles(tiles)
    images = [raster_read(r.image_path) for r in records]
    predicted = infer_tiles(params, images, means, workers)
    out = _out_dir(out)
    for record, labels in zip(tile_records, predicted):
        raster_write(labels, out.joinpath(f'prediction_{record.index:05d}.mbt'))
    if predicted:
        width = max(r.x_offset + r.tile_size for r in tile_records)
        height = max(r.y_offset + r.tile_size for r in tile_records)
        raster_write(mosaic_tiles(predicted, tile_records, width, height), out.joinpath('prediction.mbt'))
    click.echo(f'{len(predicted)} tiles predicted')


@cli.command(name='eval')
@click.option('--ref', 'reference', type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option('--pred', 'prediction', type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option(
    '--classes', type=int, default=8,
    help='Number of class indices K. mIoU averages all K classes, so a class absent from both maps scores 0.',
)
@click.option('--points', type=int, default=None)
@common_options
def eval_command(reference: Path, prediction: Path, classes: int, points, config_path, seed, out):
    """
    IoU of a class-index PREDICTION against REFERENCE, written to <out>/eval.json.
    Identical maps score mIoU 100 only when every one of the --classes classes occurs in them.
    """
    evaluation = _section(config_path, 'evaluation', seed)
    points = points or evaluation['points']
    ref, pred = raster_read(reference), raster_read(prediction)
    names = get_scheme('GENERAL').names[:classes] if classes <= 8 else None
    report = iou_from_confusion(confusion(ref, pred, classes), names)
    result: Dict[str, Any] = {'report': report.to_dict()}
    available = int((ref.validmask & pred.validmask).sum())
    if available:
        sample = random_point_validation(ref, pred, min(points, available), evaluation['seed'])
        result['points'] = sample.to_dict()
    save_json(_out_dir(out).joinpath('eval.json'), result)
    click.echo(f'mIoU {report.miou:.2f}  acc {report.pixel_accuracy:.4f}')


@cli.command()
@click.option('--tiles', 'tiles_per_domain', type=int, default=None, help='Tiles per domain.')
@click.option('--tile-size', type=int, default=None)
@click.option('--style-mode', type=click.Choice(['Stats', 'Gan'], case_sensitive=False), default='Stats')
@common_options
def synth(tiles_per_domain, tile_size, style_mode: str, config_path, seed, out):
    """Write the synthetic two-sensor benchmark and its config.json into <out>."""
    data = _section(config_path, 'synth', seed)
    if tiles_per_domain is not None:
        data['tiles_per_domain'] = tiles_per_domain
    if tile_size is not None:
        data['tile_size'] = tile_size
    path = write_benchmark(SynthSpec.from_dict(data), _out_dir(out), StyleModeEnum.parse(style_mode).value)
    click.echo(str(path))


@cli.command(name='run')
@common_options
def run_command(config_path, seed, out):
    """Run the whole pipeline described by --config."""
    if config_path is None:
        raise click.UsageError('run needs --config.')
    config = PipelineConfig.from_json(config_path, seed=seed, output=out)
    result = run_pipeline(config)
    report = result.report
    click.echo(
        f'baseline mIoU {report["baseline"]["miou"]:.2f}  adapted mIoU {report["adapted"]["miou"]:.2f}  '
        f'relative gain {report["relative_gain"]}'
    )


@cli.command()
@click.argument('labels', type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option('--scheme', default='GENERAL')
@click.option('--indices', is_flag=True, help='LABELS holds 0-based class indices of the scheme.')
@common_options
def render(labels: Path, scheme: str, indices: bool, config_path, seed, out):
    """Render LABELS as a binary PPM in scheme colors."""
    label_scheme = get_scheme(scheme)
    if indices:
        label_scheme = class_index_scheme(label_scheme)
    path = _out_dir(out).joinpath(f'{labels.stem}.ppm')
    render_labelmap(raster_read(labels), label_scheme, path)
    click.echo(str(path))


def main(argv: Optional[List[str]] = None) -> int:
    try:
        cli.main(args=argv, prog_name='CrossSensorWorkshop', standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return 1
    except click.Abort:
        return 1
    except ConfigError as e:
        click.echo(f'Error: {e}', err=True)
        return 1
    except PipelineError as e:
        click.echo(f'Error: {e}', err=True)
        return 1 if isinstance(e.cause, ConfigError) else 2
    except (WorkshopError, OSError, ValueError) as e:
        click.echo(f'Error: {type(e).__name__}: {e}', err=True)
        return 2
    return 0


def run():
    sys.exit(main())


if __name__ == '__main__':
    run()
