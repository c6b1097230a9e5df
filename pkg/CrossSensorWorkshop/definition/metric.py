# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .error import DimensionError


__all__ = ['ConfusionMatrix', 'IoUReport', 'PointSample']


class ConfusionMatrix(object):
    """Rows are reference classes, columns are predicted classes."""
    def __init__(self, counts: np.ndarray, ignored: int = 0):
        self.counts: np.ndarray = counts
        self.ignored: int = int(ignored)

    def __repr__(self) -> str:
        return f'<ConfusionMatrix(classes={self.classes}, total={self.total()}, ignored={self.ignored})>'

    @property
    def classes(self) -> int:
        return self.counts.shape[0]

    def total(self) -> int:
        return int(self.counts.sum())

    def pixel_count(self) -> int:
        return self.total() + self.ignored

    def merge(self, other: 'ConfusionMatrix') -> 'ConfusionMatrix':
        if other.counts.shape != self.counts.shape:
            raise DimensionError(
                f'Cannot merge confusion matrices of shape {self.counts.shape} and {other.counts.shape}.'
            )
        return ConfusionMatrix(self.counts + other.counts, self.ignored + other.ignored)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'counts': [[int(v) for v in row] for row in self.counts],
            'ignored': self.ignored,
        }


class IoUReport(object):
    def __init__(self,
                 class_names: List[str],
                 per_class: List[float],    # percent
                 present: List[bool],
                 miou: float,               # percent
                 pixel_accuracy: float      # fraction
                 ):
        self.class_names = list(class_names)
        self.per_class = list(per_class)
        self.present = list(present)
        self.miou = miou
        self.pixel_accuracy = pixel_accuracy

    def __repr__(self) -> str:
        return f'<IoUReport(' \
               f'classes={len(self.class_names)}, ' \
               f'miou={self.miou:.2f}, ' \
               f'acc={self.pixel_accuracy:.4f}' \
               f')>'

    def iou_by_name(self) -> Dict[str, float]:
        return dict(zip(self.class_names, self.per_class))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'per_class': {n: round(v, 2) for n, v in self.iou_by_name().items()},
            'present': {n: p for n, p in zip(self.class_names, self.present)},
            'miou': round(self.miou, 2),
            'acc': round(self.pixel_accuracy, 4),
        }


class PointSample(object):
    def __init__(self,
                 seed: int,
                 points: Optional[List[Tuple[int, int, int, int]]] = None,     # (x, y, reference, prediction)
                 agreement: float = 0.0
                 ):
        self.seed = seed
        self.points: List[Tuple[int, int, int, int]] = list(points) if points is not None else []
        self.agreement = agreement

    def __repr__(self) -> str:
        return f'<PointSample(seed={self.seed}, n={len(self.points)}, agreement={self.agreement})>'

    def __len__(self) -> int:
        return len(self.points)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'seed': self.seed,
            'n': len(self.points),
            'agreement': self.agreement,
        }
