# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


"""
Adversarial training of the two generator/discriminator pairs:
    g_st / d_t      source -> target, d_t sees real target tiles
    g_ts / d_s      target -> source, d_s sees real source tiles

Every step runs both directions; each direction first updates its discriminator against
the current generator, then updates the generator against the new discriminator.
"""


from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple
from dataclasses import dataclass, asdict, fields
from pathlib import Path

import numpy as np
import pandas as pd

from ..definition import Raster, EmptyInputError, DimensionError, NumericsError, RangeError, TrainingError
from ..numerics import Tape, AdamState, adam_step, backward, gan_terms, adversarial_value, discriminator_accuracy
from ..raster import to_unit
from ..utility import get_logger, make_path_existed
from .network import DomainStyle, GeneratorParams, DiscriminatorParams, generator_apply, discriminator_apply
from .transfer import extract_domain_style


__all__ = ['NETWORK_NAMES', 'StyleTrainConfig', 'StyleTrainResult', 'stack_tiles', 'train_style']


NETWORK_NAMES: Tuple[str, ...] = ('g_st', 'd_t', 'g_ts', 'd_s')
LOG_COLUMNS: List[str] = [
    'step', 'lr',
    'loss_d_st', 'loss_g_st', 'adv_st', 'acc_st',
    'loss_d_ts', 'loss_g_ts', 'adv_ts', 'acc_ts',
]

logger = get_logger('style.trainer')


@dataclass(frozen=True)
class StyleTrainConfig(object):
    steps: int = 2000
    batch_size: int = 4
    lr_generator: float = 2e-4
    lr_discriminator: float = 2e-4
    seed: int = 17
    checkpoint_interval: int = 500
    log_interval: int = 50

    def __post_init__(self):
        if self.steps < 1:
            raise RangeError(f'Parameter <steps> should be at least 1, got {self.steps}.')
        if self.batch_size < 1:
            raise RangeError(f'Parameter <batch_size> should be at least 1, got {self.batch_size}.')
        if self.lr_generator <= 0 or self.lr_discriminator <= 0:
            raise RangeError('Learning rates should be positive.')
        if self.checkpoint_interval < 0 or self.log_interval < 1:
            raise RangeError('Parameter <checkpoint_interval> should be >= 0 and <log_interval> >= 1.')

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'StyleTrainConfig':
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})


class StyleTrainResult(NamedTuple):
    checkpoints: Dict[str, Path]
    log_path: Path
    log: pd.DataFrame
    source_style: DomainStyle
    target_style: DomainStyle


def stack_tiles(tiles: Sequence[Raster]) -> np.ndarray:
    """(N, 6, H, W) float32 in [-1, 1]; invalid pixels are set to 0."""
    if not tiles:
        raise EmptyInputError('Parameter <tiles> is empty.')
    shape = (tiles[0].bands, tiles[0].height, tiles[0].width)
    result = np.zeros((len(tiles),) + shape, dtype=np.float32)
    for i, tile in enumerate(tiles):
        if (tile.bands, tile.height, tile.width) != shape:
            raise DimensionError(f'Tile {i} has shape {(tile.bands, tile.height, tile.width)}, expected {shape}.')
        unit = to_unit(tile)
        result[i] = np.where(unit.validmask[None], unit.samples, 0.0)
    return result


class _Direction(object):
    """One generator/discriminator pair with its optimizer states."""

    def __init__(self, name: str, generator: GeneratorParams, discriminator: DiscriminatorParams,
                 style: DomainStyle, config: StyleTrainConfig):
        self.name = name
        self.generator = generator
        self.discriminator = discriminator
        self.style_code = style.code()
        self.style = style
        self.g_state = AdamState(lr=config.lr_generator, beta1=0.5)
        self.d_state = AdamState(lr=config.lr_discriminator, beta1=0.5)

    def step(self, inputs: np.ndarray, real: np.ndarray) -> Dict[str, float]:
        fake = generator_apply(self.generator.constants(), inputs, self.style_code).values

        tape = Tape()
        d = self.discriminator.on(tape)
        d_real = discriminator_apply(d, real)
        d_fake = discriminator_apply(d, fake)
        loss_d, _ = gan_terms(d_real, d_fake)
        grads = backward(tape, loss_d)
        values, self.d_state = adam_step(self.discriminator.values, grads, self.d_state)
        self.discriminator = self.discriminator.replace(values)

        tape = Tape()
        g = self.generator.on(tape)
        generated = generator_apply(g, inputs, self.style_code)
        d_generated = discriminator_apply(self.discriminator.constants(), generated)
        _, loss_g = gan_terms(d_real.values, d_generated)
        grads = backward(tape, loss_g)
        values, self.g_state = adam_step(self.generator.values, grads, self.g_state)
        self.generator = self.generator.replace(values)

        return {
            f'loss_d_{self.name}': loss_d.item(),
            f'loss_g_{self.name}': loss_g.item(),
            f'adv_{self.name}': adversarial_value(d_real.values, d_fake.values),
            f'acc_{self.name}': discriminator_accuracy(d_real.values, d_fake.values),
        }


def _save_all(
        out_dir: Path,
        st: _Direction,
        ts: _Direction,
        source_style: DomainStyle,
        target_style: DomainStyle,
        step: int,
        diagnostic: bool = False,
) -> Dict[str, Path]:
    make_path_existed(out_dir)
    common = {'source_style': source_style.to_dict(), 'target_style': target_style.to_dict(), 'step': step}
    result: Dict[str, Path] = {}
    for name, params, direction in [
        ('g_st', st.generator, st),
        ('d_t', st.discriminator, st),
        ('g_ts', ts.generator, ts),
        ('d_s', ts.discriminator, ts),
    ]:
        meta = dict(common, role=name, direction=direction.name, style=direction.style.to_dict())
        result[name] = params.save(out_dir.joinpath(f'{name}.ckpt'), meta, diagnostic=diagnostic)
    return result


def train_style(
        source_tiles: Sequence[Raster],
        target_tiles: Sequence[Raster],
        config: StyleTrainConfig,
        out_dir: Path,
        source_style: Optional[DomainStyle] = None,
        target_style: Optional[DomainStyle] = None,
) -> StyleTrainResult:
    """
    Train both pairs for config.steps steps, batches drawn with config.seed.
    Writes g_st.ckpt, d_t.ckpt, g_ts.ckpt, d_s.ckpt and style_log.csv into <out_dir>, and the
    same checkpoints under step_<n>/ every config.checkpoint_interval steps.
    """
    if not source_tiles or not target_tiles:
        raise EmptyInputError('Style training needs source and target tiles.')
    out_dir = Path(out_dir)
    make_path_existed(out_dir)
    source = stack_tiles(source_tiles)
    target = stack_tiles(target_tiles)
    source_style = source_style or extract_domain_style(source_tiles)
    target_style = target_style or extract_domain_style(target_tiles)

    seed = config.seed
    st = _Direction('st', GeneratorParams(seed=seed), DiscriminatorParams(seed=seed + 1), target_style, config)
    ts = _Direction('ts', GeneratorParams(seed=seed + 2), DiscriminatorParams(seed=seed + 3), source_style, config)
    rng = np.random.default_rng(seed)
    logger.info(
        'style training started',
        source_tiles=len(source), target_tiles=len(target), steps=config.steps, batch_size=config.batch_size,
    )

    rows: List[Dict[str, float]] = []
    for step in range(config.steps):
        x_s = source[rng.choice(len(source), size=config.batch_size, replace=len(source) < config.batch_size)]
        x_t = target[rng.choice(len(target), size=config.batch_size, replace=len(target) < config.batch_size)]
        row: Dict[str, float] = {'step': step, 'lr': config.lr_generator}
        error: Optional[NumericsError] = None
        try:
            row.update(st.step(x_s, x_t))
            row.update(ts.step(x_t, x_s))
        except NumericsError as e:
            error = e
            row['loss_d_st'] = float('nan')
        rows.append(row)

        if not all(np.isfinite(v) for v in row.values()):
            path = out_dir.joinpath('diagnostic')
            _save_all(path, st, ts, source_style, target_style, step, diagnostic=True)
            logger.error('non-finite style loss', error=str(error) if error else None, **row)
            raise TrainingError(f'Non-finite style loss at step {step}.', path) from error
        if step % config.log_interval == 0 or step == config.steps - 1:
            logger.info('style step', **{k: round(float(v), 6) for k, v in row.items()})
        if config.checkpoint_interval and (step + 1) % config.checkpoint_interval == 0 and step + 1 < config.steps:
            _save_all(out_dir.joinpath(f'step_{step + 1:06d}'), st, ts, source_style, target_style, step + 1)

    checkpoints = _save_all(out_dir, st, ts, source_style, target_style, config.steps)
    log = pd.DataFrame(rows, columns=LOG_COLUMNS)
    log_path = out_dir.joinpath('style_log.csv')
    log.to_csv(log_path, index=False)
    logger.info('style training finished', checkpoints=[str(p) for p in checkpoints.values()])
    return StyleTrainResult(checkpoints, log_path, log, source_style, target_style)
