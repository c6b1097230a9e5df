# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


"""
Pipeline runner.

Stages run in order:
    ingest          composite bands, apply cloud masks                  -> ingest/
    shift           subtract per-band offsets                           -> shift/
    recode          fine labels -> GENERAL -> class indices             -> recode/
    tile            cut aligned image/label tiles                       -> tiles/
    style           domain styles (Stats) or trained generators (Gan)   -> style/
    stylize         source tiles in target style                        -> stylized/
    mix             originals + stylized manifest                       -> mixed_manifest.jsonl
    means           joint band means over mixed and target tiles        -> means.json
    train_baseline  segmenter on the original source tiles              -> baseline.ckpt
    train_adapted   segmenter on the mixed dataset                      -> adapted.ckpt
    infer           both segmenters on the target tiles                 -> predictions/
    evaluate        IoU reports, point validation, renders              -> report.json, render/

Each stage is keyed on the hashes of its inputs and its parameters. A stage whose key and
outputs match the last manifest.jsonl record is reused instead of run again.
"""


from typing import Any, Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple
from pathlib import Path

from ..config import load_json, save_json
from ..definition import (
    LABEL_NODATA,
    DatasetRecord,
    Raster,
    TileRecord,
    TileSpec,
    IoUReport,
    PointSample,
    PipelineError,
    WorkshopError,
)
from ..evaluation import confusion, iou_from_confusion, random_point_validation, render_labelmap, write_report
from ..label import builtin_schemes, class_distribution, crosswalk, from_class_indices, get_recode_map, get_scheme, recode, to_class_indices
from ..raster import (
    band_stats,
    composite_bands,
    estimate_shift_offsets,
    mosaic_tiles,
    raster_read,
    raster_write,
    read_mask,
    set_nodata_mask,
    shift_values,
    tile_dataset,
)
from ..segmentation import BandMeans, compute_band_means, infer, load_segmenter, train_seg
from ..style import (
    DomainStyle,
    StyleModeEnum,
    build_mixed_dataset,
    extract_domain_style,
    read_manifest,
    stylize_files,
    train_style,
    write_manifest,
)
from ..utility import get_logger, json_sha256, make_path_existed, path_sha256, read_jsonl, write_jsonl
from .setting import AUTO_OFFSETS, DomainInput, PipelineConfig


__all__ = [
    'STAGES',
    'MANIFEST_NAME',
    'PipelineResult',
    'ingest_domain',
    'resolve_offsets',
    'write_tiles',
    'read_tiles',
    'evaluate_predictions',
    'run',
]


STAGES: List[str] = [
    'ingest', 'shift', 'recode', 'tile', 'style', 'stylize', 'mix', 'means',
    'train_baseline', 'train_adapted', 'infer', 'evaluate',
]
MANIFEST_NAME: str = 'manifest.jsonl'

logger = get_logger('pipeline')


class PipelineResult(NamedTuple):
    report: Dict[str, Any]
    manifest_path: Path
    statuses: Dict[str, str]        # stage -> 'done' | 'reused'


def ingest_domain(domain: DomainInput) -> Tuple[Raster, Raster, Optional[Raster]]:
    """(masked composite, fine labels, crosswalk labels or None)."""
    image = composite_bands([raster_read(p) for p in domain.bands])
    if domain.mask is not None:
        image = set_nodata_mask(image, read_mask(domain.mask))
    labels = raster_read(domain.labels)
    extra = raster_read(domain.crosswalk_labels) if domain.crosswalk_labels is not None else None
    return image, labels, extra


def resolve_offsets(image: Raster, offsets: Any, percentile: float, bins: int) -> List[int]:
    """Explicit offsets pass through, 'auto' estimates them from the band histograms, None is no shift."""
    if offsets is None:
        return [0] * image.bands
    if offsets == AUTO_OFFSETS:
        return estimate_shift_offsets(band_stats(image, bins), percentile)
    return [int(v) for v in offsets]


def write_tiles(
        pairs: Sequence[Tuple[Raster, Raster, TileRecord]],
        out_dir: Path,
) -> Tuple[List[DatasetRecord], List[TileRecord]]:
    """Write image_<i>.mbt / label_<i>.mbt pairs plus records.jsonl and manifest.jsonl."""
    make_path_existed(out_dir)
    records: List[DatasetRecord] = []
    tiles: List[TileRecord] = []
    for image, labels, record in pairs:
        image_path = out_dir.joinpath(f'image_{record.index:05d}.mbt')
        label_path = out_dir.joinpath(f'label_{record.index:05d}.mbt')
        raster_write(image, image_path)
        raster_write(labels, label_path)
        records.append(DatasetRecord(image_path=str(image_path), label_path=str(label_path)))
        tiles.append(record)
    write_jsonl(out_dir.joinpath('records.jsonl'), [t.to_dict() for t in tiles])
    write_manifest(out_dir.joinpath('manifest.jsonl'), records)
    return records, tiles


def read_tiles(tile_dir: Path) -> Tuple[List[DatasetRecord], List[TileRecord]]:
    records = read_manifest(tile_dir.joinpath('manifest.jsonl'), validate=False)
    tiles = [TileRecord.from_dict(item) for item in read_jsonl(tile_dir.joinpath('records.jsonl'))]
    return records, tiles


def evaluate_predictions(
        reference: Raster,
        predictions: Dict[str, Raster],
        classes: int,
        points: int,
        seed: int,
) -> Tuple[Dict[str, IoUReport], Dict[str, PointSample]]:
    """
    IoU report and random point sample of every class-index prediction against <reference>.
    Fewer than <points> jointly valid pixels shrinks the sample.
    """
    general = builtin_schemes().general
    names = general.names[:classes]
    reference_codes = from_class_indices(reference, general)
    reports: Dict[str, IoUReport] = {}
    samples: Dict[str, PointSample] = {}
    for name, prediction in predictions.items():
        reports[name] = iou_from_confusion(confusion(reference, prediction, classes), names)
        available = int((reference.validmask & prediction.validmask).sum())
        n = min(points, available)
        if n < points:
            logger.warning('point sample shrunk', prediction=name, requested=points, available=available)
        if n > 0:
            samples[name] = random_point_validation(reference_codes, from_class_indices(prediction, general), n, seed)
    return reports, samples


class _Runner(object):
    def __init__(self, config: PipelineConfig):
        self.config = config
        self.out: Path = Path(config.output)
        make_path_existed(self.out)
        self.manifest_path: Path = self.out.joinpath(MANIFEST_NAME)
        self.previous: Dict[str, Dict[str, Any]] = {}
        if self.manifest_path.exists():
            for item in read_jsonl(self.manifest_path):
                self.previous[item['stage']] = item
        self.statuses: Dict[str, str] = {}

    def path(self, *parts: str) -> Path:
        return self.out.joinpath(*parts)

    def _name(self, path: Path) -> str:
        try:
            return path.resolve().relative_to(self.out.resolve()).as_posix()
        except ValueError:
            return str(path)

    def _hashes(self, paths: Sequence[Path]) -> Dict[str, str]:
        return {self._name(p): path_sha256(p) for p in paths}

    def _reusable(self, stage: str, key: str, outputs: Sequence[Path]) -> bool:
        record = self.previous.get(stage)
        if record is None or record.get('key') != key:
            return False
        if not all(p.exists() for p in outputs):
            return False
        return self._hashes(outputs) == record.get('outputs')

    def stage(
            self,
            stage: str,
            inputs: Sequence[Path],
            outputs: Sequence[Path],
            params: Dict[str, Any],
            action: Callable[[], None],
            seed: Optional[int] = None,
    ) -> None:
        try:
            input_hashes = self._hashes(inputs)
            key = json_sha256({'stage': stage, 'inputs': input_hashes, 'params': params})
            if self._reusable(stage, key, outputs):
                status = 'reused'
            else:
                logger.info('stage started', stage=stage)
                action()
                status = 'done'
            output_hashes = self._hashes(outputs)
        except PipelineError:
            raise
        except (WorkshopError, OSError, ValueError, KeyError) as e:
            logger.error('stage failed', stage=stage, error=str(e))
            raise PipelineError(stage, e)
        record = {
            'stage': stage,
            'status': status,
            'key': key,
            'inputs': input_hashes,
            'outputs': output_hashes,
            'seed': seed,
            'params': params,
        }
        write_jsonl(self.manifest_path, [record], append=True)
        self.previous[stage] = record
        self.statuses[stage] = status
        logger.info('stage finished', stage=stage, status=status)

    # Stage bodies.

    def ingest(self) -> None:
        config = self.config
        outputs = [self.path('ingest')]

        def _action() -> None:
            make_path_existed(self.path('ingest'))
            stats: Dict[str, Any] = {}
            for name, domain in [('source', config.source), ('target', config.target)]:
                image, labels, extra = ingest_domain(domain)
                raster_write(image, self.path('ingest', f'{name}.mbt'))
                raster_write(labels, self.path('ingest', f'{name}_labels.mbt'))
                if extra is not None:
                    raster_write(extra, self.path('ingest', f'{name}_crosswalk.mbt'))
                stats[name] = band_stats(image, config.preprocess.histogram_bins).to_dict()
            save_json(self.path('ingest', 'stats.json'), stats)

        inputs = config.source.paths() + config.target.paths()
        self.stage('ingest', inputs, outputs, {'histogram_bins': config.preprocess.histogram_bins}, _action)

    def shift(self) -> None:
        preprocess = self.config.preprocess
        params = {
            'source_offsets': preprocess.source_offsets,
            'target_offsets': preprocess.target_offsets,
            'shift_percentile': preprocess.shift_percentile,
            'histogram_bins': preprocess.histogram_bins,
        }

        def _action() -> None:
            make_path_existed(self.path('shift'))
            offsets: Dict[str, List[int]] = {}
            for name, value in [('source', preprocess.source_offsets), ('target', preprocess.target_offsets)]:
                image = raster_read(self.path('ingest', f'{name}.mbt'))
                offsets[name] = resolve_offsets(image, value, preprocess.shift_percentile, preprocess.histogram_bins)
                raster_write(shift_values(image, offsets[name]), self.path('shift', f'{name}.mbt'))
            save_json(self.path('shift', 'offsets.json'), offsets)
            logger.info('offsets resolved', **offsets)

        self.stage('shift', [self.path('ingest')], [self.path('shift')], params, _action)

    def recode(self) -> None:
        config = self.config
        general = builtin_schemes().general

        def _action() -> None:
            make_path_existed(self.path('recode'))
            for name, domain in [('source', config.source), ('target', config.target)]:
                fine = raster_read(self.path('ingest', f'{name}_labels.mbt'))
                coded = recode(fine, get_recode_map(domain.scheme))
                raster_write(coded, self.path('recode', f'{name}_general.mbt'))
                raster_write(to_class_indices(coded, general), self.path('recode', f'{name}_index.mbt'))

        params = {'source_scheme': config.source.scheme, 'target_scheme': config.target.scheme}
        self.stage('recode', [self.path('ingest')], [self.path('recode')], params, _action)

    def tile(self) -> None:
        spec: TileSpec = self.config.preprocess.tile

        def _action() -> None:
            for name in ['source', 'target']:
                image = raster_read(self.path('shift', f'{name}.mbt'))
                labels = raster_read(self.path('recode', f'{name}_index.mbt'))
                pairs = tile_dataset(image, labels, spec)
                write_tiles(pairs, self.path('tiles', name))
                logger.info('tiled', domain=name, tiles=len(pairs))

        inputs = [self.path('shift'), self.path('recode')]
        self.stage('tile', inputs, [self.path('tiles')], spec.to_dict(), _action)

    def _domain_tiles(self, name: str) -> List[Raster]:
        records, _ = read_tiles(self.path('tiles', name))
        return [raster_read(r.image_path) for r in records]

    def style(self) -> None:
        config = self.config
        mode = config.style_mode
        params: Dict[str, Any] = {'mode': mode.value}
        outputs = [self.path('style', 'styles.json')]
        if mode == StyleModeEnum.Gan:
            params['train'] = config.style.to_dict()
            outputs += [self.path('style', f'{n}.ckpt') for n in ['g_st', 'd_t', 'g_ts', 'd_s']]

        def _action() -> None:
            make_path_existed(self.path('style'))
            source_tiles = self._domain_tiles('source')
            target_tiles = self._domain_tiles('target')
            source_style = extract_domain_style(source_tiles)
            target_style = extract_domain_style(target_tiles)
            if mode == StyleModeEnum.Gan:
                train_style(source_tiles, target_tiles, config.style, self.path('style'), source_style, target_style)
            save_json(self.path('style', 'styles.json'), {
                'source': source_style.to_dict(),
                'target': target_style.to_dict(),
            })

        seed = config.style.seed if mode == StyleModeEnum.Gan else None
        self.stage('style', [self.path('tiles')], outputs, params, _action, seed=seed)

    def _styles(self) -> Tuple[DomainStyle, DomainStyle]:
        data = load_json(self.path('style', 'styles.json'))
        return DomainStyle.from_dict(data['source']), DomainStyle.from_dict(data['target'])

    def stylize(self) -> None:
        config = self.config
        mode = config.style_mode

        def _action() -> None:
            records, _ = read_tiles(self.path('tiles', 'source'))
            source_style, target_style = self._styles()
            checkpoint = self.path('style', 'g_st.ckpt') if mode == StyleModeEnum.Gan else None
            stylize_files(
                [Path(r.image_path) for r in records], self.path('stylized'), mode,
                source_style, target_style, checkpoint, config.segmentation.workers,
            )

        inputs = [self.path('tiles', 'source'), self.path('style')]
        self.stage('stylize', inputs, [self.path('stylized')], {'mode': mode.value}, _action)

    def mix(self) -> None:
        def _action() -> None:
            originals, _ = read_tiles(self.path('tiles', 'source'))
            stylized = [self.path('stylized', Path(r.image_path).name) for r in originals]
            write_manifest(self.path('mixed_manifest.jsonl'), build_mixed_dataset(originals, stylized))

        inputs = [self.path('tiles', 'source'), self.path('stylized')]
        self.stage('mix', inputs, [self.path('mixed_manifest.jsonl')], {}, _action)

    def means(self) -> None:
        def _action() -> None:
            mixed = [raster_read(r.image_path) for r in read_manifest(self.path('mixed_manifest.jsonl'))]
            means = compute_band_means([mixed, self._domain_tiles('target')])
            save_json(self.path('means.json'), means.to_dict())

        inputs = [self.path('mixed_manifest.jsonl'), self.path('stylized'), self.path('tiles')]
        self.stage('means', inputs, [self.path('means.json')], {}, _action)

    def train(self, name: str) -> None:
        config = self.config
        if name == 'baseline':
            manifest = self.path('tiles', 'source', 'manifest.jsonl')
            inputs = [self.path('tiles', 'source'), self.path('means.json')]
        else:
            manifest = self.path('mixed_manifest.jsonl')
            inputs = [manifest, self.path('tiles', 'source'), self.path('stylized'), self.path('means.json')]

        def _action() -> None:
            means = BandMeans.from_dict(load_json(self.path('means.json')))
            train_seg(read_manifest(manifest, validate=False), config.segmentation, means, self.out, name=name)

        outputs = [self.path(f'{name}.ckpt'), self.path(f'{name}_log.csv')]
        params = config.segmentation.to_dict()
        self.stage(f'train_{name}', inputs, outputs, params, _action, seed=config.segmentation.seed)

    def infer(self) -> None:
        config = self.config

        def _action() -> None:
            make_path_existed(self.path('predictions'))
            records, tiles = read_tiles(self.path('tiles', 'target'))
            images = [raster_read(r.image_path) for r in records]
            scene = raster_read(self.path('recode', 'target_index.mbt'))
            for name in ['baseline', 'adapted']:
                params, means = load_segmenter(self.path(f'{name}.ckpt'))
                predicted = infer(params, images, means, config.segmentation.workers)
                mosaic = mosaic_tiles(predicted, tiles, scene.width, scene.height, scene.geotransform, LABEL_NODATA)
                raster_write(mosaic, self.path('predictions', f'target_{name}.mbt'))

        inputs = [self.path('tiles', 'target'), self.path('baseline.ckpt'), self.path('adapted.ckpt')]
        self.stage('infer', inputs, [self.path('predictions')], {'workers': config.segmentation.workers}, _action)

    def evaluate(self) -> None:
        config = self.config
        evaluation = config.evaluation
        classes = config.segmentation.classes

        def _action() -> None:
            schemes = builtin_schemes()
            reference = raster_read(self.path('recode', 'target_index.mbt'))
            predictions = {
                name: raster_read(self.path('predictions', f'target_{name}.mbt'))
                for name in ['baseline', 'adapted']
            }
            reports, points = evaluate_predictions(reference, predictions, classes, evaluation.points, evaluation.seed)
            distributions = {
                name: class_distribution(raster_read(self.path('recode', f'{name}_general.mbt')), schemes.general)
                for name in ['source', 'target']
            }
            matrix = None
            extra = self.path('ingest', 'target_crosswalk.mbt')
            if extra.exists() and config.target.crosswalk_scheme is not None:
                matrix = crosswalk(
                    raster_read(self.path('ingest', 'target_labels.mbt')), raster_read(extra),
                    get_scheme(config.target.scheme), get_scheme(config.target.crosswalk_scheme),
                )
            write_report(
                self.path('report.json'), reports['baseline'], reports['adapted'], distributions, matrix, points,
            )

            make_path_existed(self.path('render'))
            render_labelmap(
                from_class_indices(reference, schemes.general), schemes.general,
                self.path('render', 'target_reference.ppm'),
            )
            for name, prediction in predictions.items():
                render_labelmap(
                    from_class_indices(prediction, schemes.general), schemes.general,
                    self.path('render', f'target_{name}.ppm'),
                )

        inputs = [self.path('recode'), self.path('predictions'), self.path('ingest')]
        outputs = [self.path('report.json'), self.path('render')]
        self.stage('evaluate', inputs, outputs, evaluation.to_dict(), _action, seed=evaluation.seed)


def run(config: PipelineConfig) -> PipelineResult:
    """
    Execute every stage of the pipeline into config.output.
    A failing stage raises PipelineError tagged with the stage name; finished artifacts stay.
    """
    runner = _Runner(config)
    save_json(runner.path('config.json'), config.to_dict())
    logger.info('pipeline started', output=str(runner.out), style_mode=config.style_mode.value)
    runner.ingest()
    runner.shift()
    runner.recode()
    runner.tile()
    runner.style()
    runner.stylize()
    runner.mix()
    runner.means()
    runner.train('baseline')
    runner.train('adapted')
    runner.infer()
    runner.evaluate()
    report = load_json(runner.path('report.json'))
    logger.info(
        'pipeline finished',
        baseline_miou=report['baseline']['miou'], adapted_miou=report['adapted']['miou'],
        reused=sum(1 for s in runner.statuses.values() if s == 'reused'),
    )
    return PipelineResult(report, runner.manifest_path, dict(runner.statuses))
