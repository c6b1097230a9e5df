# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


"""
Named parameter sets shared by the three networks.

A subclass declares its layout; the base class handles seeded initialization, tape
registration and checkpoint IO:

    class TinyParams(ParameterSet):
        kind = 'tiny'

        def layout(self):
            return [ParameterSpec('w', (4, 3), fan_in=3), ParameterSpec('b', (4,), fan_in=3)]
"""


from typing import Any, Dict, List, Optional, Tuple, Union
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..definition import CheckpointError
from .tensor import Tape, Tensor
from .checkpoint import load_checkpoint, save_checkpoint


__all__ = ['ParameterSpec', 'ParameterSet']


@dataclass(frozen=True)
class ParameterSpec(object):
    name: str
    shape: Tuple[int, ...]
    fan_in: int
    zero_init: bool = False


class ParameterSet(object):
    kind: str = 'parameters'

    def __init__(self, values: Optional[Dict[str, np.ndarray]] = None, seed: int = 0, dtype: Any = np.float32):
        self.seed: int = seed
        if values is None:
            self.values: Dict[str, np.ndarray] = self._initialize(seed, dtype)
        else:
            self._check_values(values)
            self.values = {spec.name: np.asarray(values[spec.name], dtype=dtype) for spec in self.layout()}

    def __repr__(self) -> str:
        return f'<{self.__class__.__name__}(parameters={self.parameter_count()}, seed={self.seed})>'

    def layout(self) -> List[ParameterSpec]:
        raise NotImplementedError

    def config(self) -> Dict[str, Any]:
        """Constructor arguments other than values, stored in checkpoint metadata."""
        return {}

    def _initialize(self, seed: int, dtype: Any) -> Dict[str, np.ndarray]:
        """Uniform in [-1 / sqrt(fan_in), 1 / sqrt(fan_in)], drawn in layout order."""
        rng = np.random.default_rng(seed)
        result: Dict[str, np.ndarray] = {}
        for spec in self.layout():
            bound = 1.0 / np.sqrt(spec.fan_in)
            values = rng.uniform(-bound, bound, size=spec.shape)
            if spec.zero_init:
                values = np.zeros(spec.shape)
            result[spec.name] = values.astype(dtype)
        return result

    def _check_values(self, values: Dict[str, np.ndarray]) -> None:
        expected = {spec.name: tuple(spec.shape) for spec in self.layout()}
        if set(values) != set(expected):
            missing = sorted(set(expected) - set(values))
            extra = sorted(set(values) - set(expected))
            raise CheckpointError(f'{self.kind} layout mismatch: missing {missing}, unexpected {extra}.')
        for name, shape in expected.items():
            if tuple(np.shape(values[name])) != shape:
                raise CheckpointError(
                    f'{self.kind} parameter <{name}> has shape {np.shape(values[name])}, expected {shape}.'
                )

    def names(self) -> List[str]:
        return [spec.name for spec in self.layout()]

    def parameter_count(self) -> int:
        return int(sum(v.size for v in self.values.values()))

    def on(self, tape: Tape) -> Dict[str, Tensor]:
        """Watch every parameter on <tape>; gradients are reported under the parameter names."""
        return {name: tape.watch(name, values) for name, values in self.values.items()}

    def constants(self) -> Dict[str, Tensor]:
        return {name: Tensor(values) for name, values in self.values.items()}

    def replace(self, values: Dict[str, np.ndarray]) -> 'ParameterSet':
        dtype = next(iter(self.values.values())).dtype
        return self.__class__(values=values, seed=self.seed, dtype=dtype, **self.config())

    def astype(self, dtype: Any) -> 'ParameterSet':
        return self.__class__(values=self.values, seed=self.seed, dtype=dtype, **self.config())

    def save(self, path: Union[str, Path], meta: Optional[Dict[str, Any]] = None, diagnostic: bool = False) -> Path:
        full_meta: Dict[str, Any] = {'kind': self.kind, 'config': self.config(), 'seed': self.seed}
        if meta:
            full_meta.update(meta)
        if diagnostic:
            full_meta['diagnostic'] = True
        return save_checkpoint(path, self.values, full_meta)

    @classmethod
    def load(cls, path: Union[str, Path]) -> Tuple['ParameterSet', Dict[str, Any]]:
        """
        :return: (parameters, checkpoint metadata).
        """
        values, meta = load_checkpoint(path)
        if meta.get('kind') != cls.kind:
            raise CheckpointError(f'Checkpoint <{path}> holds <{meta.get("kind")}>, expected <{cls.kind}>.')
        config = dict(meta.get('config', {}))
        return cls(values=values, seed=int(meta.get('seed', 0)), **config), meta
