# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


"""
Synthetic two-sensor benchmark.

Both domains are scenes of tiles laid on a grid (unused grid cells are nodata). Every tile is
cut into Voronoi regions, each region holding one class. Class c has a 6-band signature s_c:
    source  coarsen(s_c, resolution_ratio) + noise, stored as round(v * dn_scale) + source_dn_offset
    target  gain * blur(s_c) + bias + noise, stored as round(v * dn_scale) + target_dn_offset
Synthetic class c is GENERAL class c + 1; fine labels pick a NALCMS (source) or CORINE (target)
member of that class per region, so recoding to GENERAL recovers the truth exactly.
"""


from typing import Any, Dict, List, NamedTuple, Tuple, Union
from dataclasses import dataclass, asdict, fields
from pathlib import Path
import math

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from ..config import CONFIGS, save_json
from ..definition import LABEL_NODATA, Raster, RangeError
from ..label import builtin_schemes
from ..raster import raster_write
from ..utility import get_logger, make_path_existed


__all__ = ['SYNTH_BANDS', 'SynthSpec', 'SynthDomain', 'SynthBenchmark', 'synth_benchmark', 'write_benchmark']


SYNTH_BANDS: int = 6
_CLOUD_DN: int = 60000

logger = get_logger('synth')


@dataclass(frozen=True)
class SynthSpec(object):
    seed: int = 17
    tiles_per_domain: int = 200
    tile_size: int = 64
    classes: int = 4
    regions_per_tile: int = 16
    gain_range: Tuple[float, float] = (0.6, 1.4)
    bias_range: Tuple[float, float] = (-0.1, 0.1)
    signature_range: Tuple[float, float] = (0.1, 0.6)
    blur_radius: float = 0.5
    noise_std: float = 0.02
    resolution_ratio: float = 1.5
    cloud_fraction: float = 0.05
    source_dn_offset: int = 5000
    target_dn_offset: int = 0
    dn_scale: float = 40000.0

    def __post_init__(self):
        for name in ['gain_range', 'bias_range', 'signature_range']:
            value = tuple(float(v) for v in getattr(self, name))
            if len(value) != 2 or value[0] > value[1]:
                raise RangeError(f'Parameter <{name}> should be a (low, high) pair, got {value}.')
            object.__setattr__(self, name, value)
        if not 1 <= self.classes <= 8:
            raise RangeError(f'Parameter <classes> should be in [1, 8], got {self.classes}.')
        if self.gain_range[0] <= 0:
            raise RangeError(f'Gains should be positive, got range {self.gain_range}.')
        if self.noise_std < 0 or self.blur_radius < 0:
            raise RangeError('Parameters <noise_std> and <blur_radius> should be non-negative.')
        if self.resolution_ratio < 1:
            raise RangeError(f'Parameter <resolution_ratio> should be at least 1, got {self.resolution_ratio}.')
        if self.tiles_per_domain < 1 or self.tile_size < 16 or self.regions_per_tile < 1:
            raise RangeError('Parameters <tiles_per_domain>, <tile_size> and <regions_per_tile> are too small.')
        if not 0.0 <= self.cloud_fraction < 1.0:
            raise RangeError(f'Parameter <cloud_fraction> should be in [0, 1), got {self.cloud_fraction}.')

    def to_dict(self) -> Dict[str, Any]:
        result = asdict(self)
        for name in ['gain_range', 'bias_range', 'signature_range']:
            result[name] = list(result[name])
        return result

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SynthSpec':
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})

    @classmethod
    def defaults(cls) -> 'SynthSpec':
        return cls.from_dict(CONFIGS['synth'])

    def grid(self) -> Tuple[int, int]:
        """(columns, rows) of the tile grid."""
        cols = int(math.ceil(math.sqrt(self.tiles_per_domain)))
        rows = int(math.ceil(self.tiles_per_domain / cols))
        return cols, rows


class SynthDomain(NamedTuple):
    image: Raster               # 6-band U16 scene
    labels: Raster              # fine codes (NALCMS for source, CORINE for target)
    general: Raster             # GENERAL codes, the ground truth
    cloud: np.ndarray           # bool, True = cloud
    fine_nalcms: Raster         # the same scene in NALCMS codes


class SynthBenchmark(NamedTuple):
    spec: SynthSpec
    signatures: np.ndarray      # (classes, 6)
    gains: np.ndarray           # (6,)
    biases: np.ndarray          # (6,)
    source: SynthDomain
    target: SynthDomain


def _class_members(scheme_id: str) -> Dict[int, List[int]]:
    schemes = builtin_schemes()
    recode_map = schemes.nalcms_to_general if scheme_id == 'NALCMS' else schemes.corine_to_general
    scheme = recode_map.from_scheme
    members: Dict[int, List[int]] = {}
    for entry in scheme.entries:
        if entry.in_table:
            members.setdefault(recode_map.mapping[entry.code], []).append(entry.code)
    return members


def _region_classes(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    """Stratified class counts: floor(regions / K) each, the remainder drawn uniformly."""
    counts = np.full(spec.classes, spec.regions_per_tile // spec.classes)
    remainder = spec.regions_per_tile - int(counts.sum())
    if remainder:
        counts += rng.multinomial(remainder, np.full(spec.classes, 1.0 / spec.classes))
    classes = np.repeat(np.arange(spec.classes), counts)
    return rng.permutation(classes)


def _tile_regions(spec: SynthSpec, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """(region index map, class per region) of one tile."""
    size = spec.tile_size
    seeds = rng.uniform(0, size, size=(spec.regions_per_tile, 2))
    yy, xx = np.mgrid[0:size, 0:size]
    grid = np.column_stack([yy.ravel() + 0.5, xx.ravel() + 0.5])
    _, nearest = cKDTree(seeds).query(grid)
    return nearest.reshape(size, size), _region_classes(spec, rng)


def _coarsen(values: np.ndarray, ratio: float) -> np.ndarray:
    """Resample one band down by <ratio> and back up with nearest neighbour."""
    if ratio == 1.0:
        return values
    small = ndimage.zoom(values, 1.0 / ratio, order=1, mode='nearest', grid_mode=True)
    factors = (values.shape[0] / small.shape[0], values.shape[1] / small.shape[1])
    back = ndimage.zoom(small, factors, order=0, mode='nearest', grid_mode=True)
    back = back[:values.shape[0], :values.shape[1]]
    pad = ((0, values.shape[0] - back.shape[0]), (0, values.shape[1] - back.shape[1]))
    return np.pad(back, pad, mode='edge')


def _cloud_mask(shape: Tuple[int, int], fraction: float, smoothing: float, rng: np.random.Generator) -> np.ndarray:
    if fraction <= 0:
        return np.zeros(shape, dtype=bool)
    field = ndimage.gaussian_filter(rng.random(shape), sigma=smoothing)
    return field > np.quantile(field, 1.0 - fraction)


def _to_dn(values: np.ndarray, spec: SynthSpec, offset: int) -> np.ndarray:
    return np.clip(np.rint(values * spec.dn_scale + offset), 0, 65535).astype(np.uint16)


def _domain(
        spec: SynthSpec,
        rng: np.random.Generator,
        signatures: np.ndarray,
        fine_scheme: str,
        target: bool,
        gains: np.ndarray,
        biases: np.ndarray,
) -> SynthDomain:
    size = spec.tile_size
    cols, rows = spec.grid()
    width, height = cols * size, rows * size
    samples = np.zeros((SYNTH_BANDS, height, width), dtype=np.uint16)
    fine = np.full((height, width), LABEL_NODATA, dtype=np.uint8)
    general = np.full((height, width), LABEL_NODATA, dtype=np.uint8)
    nalcms = np.full((height, width), LABEL_NODATA, dtype=np.uint8)
    covered = np.zeros((height, width), dtype=bool)
    members = _class_members(fine_scheme)
    nalcms_members = _class_members('NALCMS')
    offset = spec.target_dn_offset if target else spec.source_dn_offset

    for index in range(spec.tiles_per_domain):
        y, x = (index // cols) * size, (index % cols) * size
        regions, classes = _tile_regions(spec, rng)
        class_map = classes[regions]
        fine_codes = np.asarray([rng.choice(members[c + 1]) for c in classes])
        nalcms_codes = np.asarray([rng.choice(nalcms_members[c + 1]) for c in classes])

        values = signatures[class_map].transpose(2, 0, 1)
        if target:
            if spec.blur_radius > 0:
                values = np.stack([ndimage.gaussian_filter(band, sigma=spec.blur_radius) for band in values])
            values = gains[:, None, None] * values + biases[:, None, None]
        else:
            values = np.stack([_coarsen(band, spec.resolution_ratio) for band in values])
        if spec.noise_std > 0:
            values = values + rng.normal(0.0, spec.noise_std, size=values.shape)

        window = (slice(y, y + size), slice(x, x + size))
        samples[(slice(None),) + window] = _to_dn(values, spec, offset)
        fine[window] = fine_codes[regions]
        general[window] = class_map + 1
        nalcms[window] = nalcms_codes[regions]
        covered[window] = True

    cloud = _cloud_mask((height, width), spec.cloud_fraction, size / 8.0, rng) & covered
    samples[:, cloud] = _CLOUD_DN

    def _labels(values: np.ndarray) -> Raster:
        return Raster(samples=values[None].copy(), validmask=covered.copy())

    image = Raster(samples=samples, validmask=covered.copy())
    return SynthDomain(image, _labels(fine), _labels(general), cloud, _labels(nalcms))


def synth_benchmark(spec: SynthSpec) -> SynthBenchmark:
    """Generate both domains; fully determined by spec.seed."""
    rng = np.random.default_rng(spec.seed)
    signatures = rng.uniform(*spec.signature_range, size=(spec.classes, SYNTH_BANDS))
    gains = rng.uniform(*spec.gain_range, size=SYNTH_BANDS)
    biases = rng.uniform(*spec.bias_range, size=SYNTH_BANDS)
    source_rng, target_rng = [np.random.default_rng(s) for s in rng.integers(0, 2 ** 62, size=2)]
    source = _domain(spec, source_rng, signatures, 'NALCMS', False, gains, biases)
    target = _domain(spec, target_rng, signatures, 'CORINE', True, gains, biases)
    return SynthBenchmark(spec, signatures, gains, biases, source, target)


def _write_domain(domain: SynthDomain, out_dir: Path, crosswalk: bool) -> Dict[str, Any]:
    make_path_existed(out_dir)
    bands: List[str] = []
    for b in range(domain.image.bands):
        path = out_dir.joinpath(f'band_{b + 1}.mbt')
        raster_write(domain.image.replace(samples=domain.image.samples[b:b + 1].copy()), path)
        bands.append(path.name)
    raster_write(domain.labels, out_dir.joinpath('labels.mbt'))
    raster_write(domain.general, out_dir.joinpath('labels_general.mbt'))
    cloud = Raster(samples=domain.cloud[None].astype(np.uint8), validmask=np.ones(domain.cloud.shape, dtype=bool))
    raster_write(cloud, out_dir.joinpath('cloud.mbt'))
    result: Dict[str, Any] = {
        'bands': [f'{out_dir.name}/{name}' for name in bands],
        'labels': f'{out_dir.name}/labels.mbt',
        'mask': f'{out_dir.name}/cloud.mbt',
    }
    if crosswalk:
        raster_write(domain.fine_nalcms, out_dir.joinpath('labels_nalcms.mbt'))
        result['crosswalk_labels'] = f'{out_dir.name}/labels_nalcms.mbt'
        result['crosswalk_scheme'] = 'NALCMS'
    return result


def write_benchmark(spec: SynthSpec, out_dir: Union[str, Path], style_mode: str = 'Stats') -> Path:
    """
    Write both domains under <out_dir>/source and <out_dir>/target, plus a ready-to-run
    <out_dir>/config.json.
    :return: path of config.json.
    """
    out_dir = Path(out_dir)
    make_path_existed(out_dir)
    bench = synth_benchmark(spec)
    source = _write_domain(bench.source, out_dir.joinpath('source'), crosswalk=False)
    source['scheme'] = 'NALCMS'
    target = _write_domain(bench.target, out_dir.joinpath('target'), crosswalk=True)
    target['scheme'] = 'CORINE'
    config = {
        'version': 1,
        'output': 'run',
        'source': source,
        'target': target,
        'preprocess': {
            'source_offsets': [spec.source_dn_offset] * SYNTH_BANDS,
            'target_offsets': [spec.target_dn_offset] * SYNTH_BANDS if spec.target_dn_offset else None,
            'tile_size': spec.tile_size,
            'stride': 0,
            'min_valid_fraction': 0.5,
        },
        'style': {'mode': style_mode},
        'segmentation': {'classes': max(spec.classes, 2)},
        'evaluation': dict(CONFIGS['evaluation']),
    }
    path = out_dir.joinpath('config.json')
    save_json(path, config)
    save_json(out_dir.joinpath('synth.json'), {
        'spec': spec.to_dict(),
        'signatures': bench.signatures.tolist(),
        'gains': bench.gains.tolist(),
        'biases': bench.biases.tolist(),
    })
    logger.info('synthetic benchmark written', out=str(out_dir), tiles_per_domain=spec.tiles_per_domain, seed=spec.seed)
    return path
