# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


"""
Evaluation report, UTF-8 JSON:
{
    "baseline": {"per_class": {name: iou}, "present": {name: bool}, "miou": float, "acc": float},
    "adapted": {...},
    "deltas": {name: adapted - baseline},
    "miou_delta": float,
    "relative_gain": float | "undefined",
    "distributions": {name: {class name: fraction}},
    "points": {"seed": int, "n": int, "agreement": {"baseline": float, "adapted": float}},
    "crosswalk": {...}                                  # optional
}
IoU values are percentages rounded to 2 decimals.
"""


from typing import Any, Dict, Optional, Union
from pathlib import Path

from ..config import save_json
from ..definition import IoUReport, ClassDistribution, CrosswalkMatrix, PointSample, DimensionError
from ..utility import get_logger
from .metric import relative_gain


__all__ = ['UNDEFINED', 'build_report', 'write_report']


UNDEFINED: str = 'undefined'

logger = get_logger('evaluation')


def build_report(
        baseline: IoUReport,
        adapted: IoUReport,
        distributions: Optional[Dict[str, ClassDistribution]] = None,
        crosswalk: Optional[CrosswalkMatrix] = None,
        points: Optional[Dict[str, PointSample]] = None,
) -> Dict[str, Any]:
    if baseline.class_names != adapted.class_names:
        raise DimensionError('Baseline and adapted reports list different classes.')
    gain = relative_gain(baseline.miou, adapted.miou)
    result: Dict[str, Any] = {
        'baseline': baseline.to_dict(),
        'adapted': adapted.to_dict(),
        'deltas': {
            name: round(a - b, 2)
            for name, b, a in zip(baseline.class_names, baseline.per_class, adapted.per_class)
        },
        'miou_delta': round(adapted.miou - baseline.miou, 2),
        'relative_gain': UNDEFINED if gain is None else round(gain, 4),
        'distributions': {k: v.to_dict() for k, v in (distributions or {}).items()},
    }
    if points:
        first = next(iter(points.values()))
        result['points'] = {
            'seed': first.seed,
            'n': len(first),
            'agreement': {k: round(v.agreement, 4) for k, v in points.items()},
        }
    if crosswalk is not None:
        result['crosswalk'] = crosswalk.to_dict()
    return result


def write_report(
        path: Union[str, Path],
        baseline: IoUReport,
        adapted: IoUReport,
        distributions: Optional[Dict[str, ClassDistribution]] = None,
        crosswalk: Optional[CrosswalkMatrix] = None,
        points: Optional[Dict[str, PointSample]] = None,
) -> Dict[str, Any]:
    report = build_report(baseline, adapted, distributions, crosswalk, points)
    save_json(Path(path), report)
    logger.info(
        'report written',
        path=str(path), baseline_miou=report['baseline']['miou'], adapted_miou=report['adapted']['miou'],
        relative_gain=report['relative_gain'],
    )
    return report
