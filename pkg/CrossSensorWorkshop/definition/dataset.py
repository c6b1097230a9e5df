# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


from typing import Any, Dict, List
from dataclasses import dataclass
from enum import Enum


__all__ = ['OriginEnum', 'DatasetRecord']


class OriginEnum(Enum):
    Original = 'original'
    Stylized = 'stylized'


@dataclass(frozen=True)
class DatasetRecord(object):
    image_path: str
    label_path: str
    origin: OriginEnum = OriginEnum.Original

    def __repr__(self) -> str:
        return f'<DatasetRecord(image={self.image_path}, origin={self.origin.value})>'

    def to_dict(self) -> Dict[str, Any]:
        return {
            'image_path': self.image_path,
            'label_path': self.label_path,
            'origin': self.origin.value,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DatasetRecord':
        return cls(
            image_path=str(data['image_path']),
            label_path=str(data['label_path']),
            origin=OriginEnum(data.get('origin', 'original')),
        )

    @classmethod
    def fields(cls) -> List[str]:
        return ['image_path', 'label_path', 'origin']
