# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


"""
Pipeline configuration.

A pipeline config is a UTF-8 JSON document:
{
    "version": 1,
    "output": "run",
    "source": {"bands": [path, ...], "labels": path, "scheme": "NALCMS", "mask": path | null},
    "target": {"bands": [path, ...], "labels": path, "scheme": "CORINE", "mask": path | null,
               "crosswalk_labels": path | null, "crosswalk_scheme": "NALCMS"},
    "preprocess": {"source_offsets": [int] | "auto" | null, "target_offsets": [int] | "auto" | null,
                   "shift_percentile": float, "tile_size": int, "stride": int,
                   "min_valid_fraction": float, "histogram_bins": int},
    "style": {"mode": "Stats" | "Gan", <StyleTrainConfig fields>},
    "segmentation": {<SegTrainConfig fields>},
    "evaluation": {"seed": int, "points": int}
}
Missing sections take CONFIGS defaults; relative paths resolve against the config file directory.
"""


from typing import Any, Dict, List, Optional, Union
from dataclasses import dataclass, field
from pathlib import Path

from ..config import CONFIGS, load_json, merge_dict
from ..definition import ConfigError, TileSpec, SchemeError
from ..label import get_scheme
from ..segmentation import SegTrainConfig
from ..style import StyleModeEnum, StyleTrainConfig


__all__ = [
    'CONFIG_VERSION',
    'AUTO_OFFSETS',
    'DomainInput',
    'PreprocessConfig',
    'EvaluationConfig',
    'PipelineConfig',
]


CONFIG_VERSION: int = 1
AUTO_OFFSETS: str = 'auto'


@dataclass
class DomainInput(object):
    bands: List[Path]
    labels: Path
    scheme: str
    mask: Optional[Path] = None
    crosswalk_labels: Optional[Path] = None
    crosswalk_scheme: Optional[str] = None

    def paths(self) -> List[Path]:
        result = list(self.bands) + [self.labels]
        for item in [self.mask, self.crosswalk_labels]:
            if item is not None:
                result.append(item)
        return result

    def to_dict(self) -> Dict[str, Any]:
        return {
            'bands': [str(p) for p in self.bands],
            'labels': str(self.labels),
            'scheme': self.scheme,
            'mask': str(self.mask) if self.mask else None,
            'crosswalk_labels': str(self.crosswalk_labels) if self.crosswalk_labels else None,
            'crosswalk_scheme': self.crosswalk_scheme,
        }


@dataclass
class PreprocessConfig(object):
    source_offsets: Union[List[int], str, None] = AUTO_OFFSETS
    target_offsets: Union[List[int], str, None] = None
    shift_percentile: float = 0.005
    histogram_bins: int = 1000
    tile: TileSpec = field(default_factory=TileSpec)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'source_offsets': self.source_offsets,
            'target_offsets': self.target_offsets,
            'shift_percentile': self.shift_percentile,
            'histogram_bins': self.histogram_bins,
            'tile_size': self.tile.tile_size,
            'stride': self.tile.stride,
            'min_valid_fraction': self.tile.min_valid_fraction,
        }


@dataclass(frozen=True)
class EvaluationConfig(object):
    seed: int = 17
    points: int = 100

    def to_dict(self) -> Dict[str, Any]:
        return {'seed': self.seed, 'points': self.points}


@dataclass
class PipelineConfig(object):
    source: DomainInput
    target: DomainInput
    output: Path
    preprocess: PreprocessConfig
    style_mode: StyleModeEnum
    style: StyleTrainConfig
    segmentation: SegTrainConfig
    evaluation: EvaluationConfig
    version: int = CONFIG_VERSION

    def __repr__(self) -> str:
        return f'<PipelineConfig(output={self.output}, style_mode={self.style_mode.value})>'

    def to_dict(self) -> Dict[str, Any]:
        style = self.style.to_dict()
        style['mode'] = self.style_mode.value
        return {
            'version': self.version,
            'output': str(self.output),
            'source': self.source.to_dict(),
            'target': self.target.to_dict(),
            'preprocess': self.preprocess.to_dict(),
            'style': style,
            'segmentation': self.segmentation.to_dict(),
            'evaluation': self.evaluation.to_dict(),
        }

    @classmethod
    def from_dict(
            cls,
            data: Dict[str, Any],
            base_dir: Path,
            seed: Optional[int] = None,
            output: Optional[Path] = None,
    ) -> 'PipelineConfig':
        """
        Build and validate a config. <seed> overrides the style, segmentation and evaluation
        seeds; <output> overrides the output directory.
        """
        try:
            return cls._build(data, Path(base_dir), seed, output)
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f'Invalid pipeline config: {type(e).__name__}: {e}')

    @classmethod
    def from_json(cls, path: Union[str, Path], seed: Optional[int] = None, output: Optional[Path] = None) -> 'PipelineConfig':
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f'Config file <{path}> does not exist.')
        try:
            data = load_json(path)
        except ValueError as e:
            raise ConfigError(f'Config file <{path}> is not valid JSON: {e}')
        return cls.from_dict(data, path.parent, seed, output)

    @classmethod
    def _build(cls, data: Dict[str, Any], base_dir: Path, seed: Optional[int], output: Optional[Path]) -> 'PipelineConfig':
        if data.get('version') != CONFIG_VERSION:
            raise ConfigError(f'Config <version> should be {CONFIG_VERSION}, got {data.get("version")!r}.')

        def _path(value: Optional[str]) -> Optional[Path]:
            if value is None:
                return None
            p = Path(value)
            return p if p.is_absolute() else base_dir.joinpath(p)

        def _domain(name: str, default_scheme: str) -> DomainInput:
            section = data.get(name)
            if not isinstance(section, dict):
                raise ConfigError(f'Config section <{name}> is missing.')
            bands = [_path(p) for p in section.get('bands', [])]
            if not bands:
                raise ConfigError(f'Config <{name}.bands> should list at least one raster.')
            if section.get('labels') is None:
                raise ConfigError(f'Config <{name}.labels> is missing.')
            domain = DomainInput(
                bands=bands,
                labels=_path(section['labels']),
                scheme=str(section.get('scheme', default_scheme)).upper(),
                mask=_path(section.get('mask')),
                crosswalk_labels=_path(section.get('crosswalk_labels')),
                crosswalk_scheme=section.get('crosswalk_scheme'),
            )
            for scheme_id in [domain.scheme, domain.crosswalk_scheme]:
                if scheme_id is not None:
                    try:
                        get_scheme(scheme_id)
                    except SchemeError as e:
                        raise ConfigError(f'Config <{name}>: {e}')
            if domain.crosswalk_labels is not None and domain.crosswalk_scheme is None:
                raise ConfigError(f'Config <{name}.crosswalk_scheme> is needed with <crosswalk_labels>.')
            missing = [str(p) for p in domain.paths() if not p.exists()]
            if missing:
                raise ConfigError(f'Config <{name}> references missing paths: {missing}.')
            return domain

        source = _domain('source', 'NALCMS')
        target = _domain('target', 'CORINE')

        raster = merge_dict(CONFIGS['raster'], data.get('preprocess', {}))
        offsets: Dict[str, Any] = {}
        for key, default in [('source_offsets', AUTO_OFFSETS), ('target_offsets', None)]:
            value = raster.get(key, default)
            if isinstance(value, list):
                if len(value) != len(source.bands if key == 'source_offsets' else target.bands):
                    raise ConfigError(f'Config <preprocess.{key}> should have one offset per band.')
                value = [int(v) for v in value]
            elif value not in [AUTO_OFFSETS, None]:
                raise ConfigError(f'Config <preprocess.{key}> should be a list, "auto" or null.')
            offsets[key] = value
        percentile = float(raster['shift_percentile'])
        if not 0.0 <= percentile <= 1.0:
            raise ConfigError(f'Config <preprocess.shift_percentile> should be in [0, 1], got {percentile}.')
        preprocess = PreprocessConfig(
            source_offsets=offsets['source_offsets'],
            target_offsets=offsets['target_offsets'],
            shift_percentile=percentile,
            histogram_bins=int(raster['histogram_bins']),
            tile=TileSpec(
                tile_size=int(raster['tile_size']),
                stride=int(raster['stride']),
                min_valid_fraction=float(raster['min_valid_fraction']),
            ),
        )
        if preprocess.tile.tile_size % 16:
            raise ConfigError(f'Config <preprocess.tile_size> should be a multiple of 16, got {preprocess.tile.tile_size}.')

        style_data = merge_dict(CONFIGS['style'], data.get('style', {}))
        seg_data = merge_dict(CONFIGS['segmentation'], data.get('segmentation', {}))
        eval_data = merge_dict(CONFIGS['evaluation'], data.get('evaluation', {}))
        if seed is not None:
            style_data['seed'] = seg_data['seed'] = eval_data['seed'] = int(seed)
        try:
            style_mode = StyleModeEnum.parse(style_data.get('mode', 'Stats'))
        except ValueError as e:
            raise ConfigError(str(e))
        evaluation = EvaluationConfig(seed=int(eval_data['seed']), points=int(eval_data['points']))
        if evaluation.points < 1:
            raise ConfigError(f'Config <evaluation.points> should be positive, got {evaluation.points}.')

        out = output if output is not None else _path(data.get('output', 'run'))
        return cls(
            source=source,
            target=target,
            output=Path(out),
            preprocess=preprocess,
            style_mode=style_mode,
            style=StyleTrainConfig.from_dict(style_data),
            segmentation=SegTrainConfig.from_dict(seg_data),
            evaluation=evaluation,
        )
