# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


from typing import Any, Dict, List, Optional, Tuple
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .error import SchemeError


__all__ = [
    'SchemeEntry',
    'LabelScheme',
    'UnknownPolicyEnum',
    'RecodeMap',
    'ClassDistribution',
    'CrosswalkMatrix',
]


RGB = Tuple[int, int, int]


@dataclass(frozen=True)
class SchemeEntry(object):
    code: int
    name: str
    color: RGB
    # Whether the class is listed in the recoding table; classes outside it are mapped by family.
    in_table: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return {
            'code': self.code,
            'name': self.name,
            'color': list(self.color),
        }


@dataclass(frozen=True)
class LabelScheme(object):
    scheme_id: str
    entries: Tuple[SchemeEntry, ...]

    def __post_init__(self):
        codes = [e.code for e in self.entries]
        names = [e.name for e in self.entries]
        if len(set(codes)) != len(codes):
            raise SchemeError(f'Codes of scheme <{self.scheme_id}> are not unique.')
        if len(set(names)) != len(names):
            raise SchemeError(f'Names of scheme <{self.scheme_id}> are not unique.')
        for code in codes:
            if not 0 <= code < 255:
                raise SchemeError(
                    f'Code <{code}> of scheme <{self.scheme_id}> is outside [0, 255).'
                )

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def codes(self) -> List[int]:
        return [e.code for e in self.entries]

    @property
    def names(self) -> List[str]:
        return [e.name for e in self.entries]

    def entry(self, code: int) -> SchemeEntry:
        for item in self.entries:
            if item.code == code:
                return item
        raise SchemeError(f'Code <{code}> is not a member of scheme <{self.scheme_id}>.')

    def code_by_name(self, name: str) -> int:
        for item in self.entries:
            if item.name == name:
                return item.code
        raise SchemeError(f'Name <{name}> is not a member of scheme <{self.scheme_id}>.')

    def name_by_code(self, code: int) -> str:
        return self.entry(code).name

    def to_dict(self) -> Dict[str, Any]:
        return {
            'scheme_id': self.scheme_id,
            'entries': [e.to_dict() for e in self.entries],
        }


class UnknownPolicyEnum(Enum):
    Error = 'Error'
    MapToNodata = 'MapToNodata'


@dataclass(frozen=True)
class RecodeMap(object):
    from_scheme: LabelScheme
    to_scheme: LabelScheme
    mapping: Dict[int, int]
    unknown_policy: UnknownPolicyEnum = UnknownPolicyEnum.Error

    def __post_init__(self):
        missing = [c for c in self.from_scheme.codes if c not in self.mapping]
        if missing:
            raise SchemeError(
                f'Recode map <{self.from_scheme.scheme_id}> -> <{self.to_scheme.scheme_id}> '
                f'is not total, missing codes {missing}.'
            )
        extra = [c for c in self.mapping if c not in self.from_scheme.codes]
        if extra:
            raise SchemeError(
                f'Recode map <{self.from_scheme.scheme_id}> -> <{self.to_scheme.scheme_id}> '
                f'maps codes {extra} which are not members of the source scheme.'
            )
        invalid = [v for v in self.mapping.values() if v not in self.to_scheme.codes]
        if invalid:
            raise SchemeError(
                f'Recode map targets {sorted(set(invalid))} are not members of '
                f'scheme <{self.to_scheme.scheme_id}>.'
            )

    def lookup_table(self) -> np.ndarray:
        """256-entry table; -1 marks codes outside the source scheme."""
        table = np.full(256, -1, dtype=np.int16)
        for k, v in self.mapping.items():
            table[k] = v
        return table

    def with_policy(self, policy: UnknownPolicyEnum) -> 'RecodeMap':
        return RecodeMap(self.from_scheme, self.to_scheme, dict(self.mapping), policy)

    def to_list(self) -> List[Dict[str, int]]:
        return [{'from': k, 'to': self.mapping[k]} for k in sorted(self.mapping)]


@dataclass
class ClassDistribution(object):
    scheme_id: str
    # code -> fraction of valid pixels, in scheme order.
    fractions: Dict[int, float] = field(default_factory=dict)
    names: Dict[int, str] = field(default_factory=dict)

    def fraction(self, code: int) -> float:
        return self.fractions[code]

    def to_dict(self) -> Dict[str, float]:
        return {self.names.get(code, str(code)): value for code, value in self.fractions.items()}


@dataclass
class CrosswalkMatrix(object):
    scheme_a: str
    scheme_b: str
    codes_a: List[int]
    codes_b: List[int]
    counts: np.ndarray

    def total(self) -> int:
        return int(self.counts.sum())

    def count(self, code_a: int, code_b: int) -> int:
        return int(self.counts[self.codes_a.index(code_a), self.codes_b.index(code_b)])

    def marginal_a(self) -> Dict[int, int]:
        return {c: int(v) for c, v in zip(self.codes_a, self.counts.sum(axis=1))}

    def marginal_b(self) -> Dict[int, int]:
        return {c: int(v) for c, v in zip(self.codes_b, self.counts.sum(axis=0))}

    def to_dict(self) -> Dict[str, Any]:
        return {
            'scheme_a': self.scheme_a,
            'scheme_b': self.scheme_b,
            'codes_a': list(self.codes_a),
            'codes_b': list(self.codes_b),
            'counts': [[int(v) for v in row] for row in self.counts],
        }
