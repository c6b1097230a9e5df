# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


"""
Land cover label schemes and the recoding between them.

Three schemes are built in, read from the csv tables under <data/scheme>:
    NALCMS      19 classes, official level-II codes 1-19.
    CORINE      31 classes present in the Norway region, codes 1-31 in recoding-table order
                (the official 3-digit CLC code is kept in the csv).
    GENERAL     8 classes, codes 1-8.

Standardization recodes NALCMS and CORINE into GENERAL; harmonization compares the two fine
schemes directly through a crosswalk matrix.
"""


from typing import Any, Dict, List, NamedTuple, Optional, Tuple, Union
from functools import lru_cache
from pathlib import Path

import numpy as np

from ..config import get_config_file_path, load_csv, save_json
from ..utility import parse_hex_color
from ..definition import (
    LABEL_NODATA,
    Raster,
    SchemeEntry,
    LabelScheme,
    UnknownPolicyEnum,
    RecodeMap,
    ClassDistribution,
    CrosswalkMatrix,
    DimensionError,
    DTypeError,
    EmptyInputError,
    RecodeError,
    SchemeError,
)


__all__ = [
    'SCHEME_CONFLICTS',
    'BuiltinSchemes',
    'builtin_schemes',
    'get_scheme',
    'get_recode_map',
    'identity_map',
    'recode',
    'class_distribution',
    'crosswalk',
    'class_index_scheme',
    'to_class_indices',
    'from_class_indices',
    'scheme_manifest',
    'write_scheme_manifest',
]


# The recoding table lists "Beaches dunes sands" under both Barren and Settlement.
SCHEME_CONFLICTS: List[Dict[str, Any]] = [
    {
        'scheme_id': 'CORINE',
        'name': 'Beaches dunes sands',
        'candidates': ['Barren', 'Settlement'],
        'assigned': 'Barren',
    },
]


class BuiltinSchemes(NamedTuple):
    nalcms: LabelScheme
    corine: LabelScheme
    general: LabelScheme
    nalcms_to_general: RecodeMap
    corine_to_general: RecodeMap


def _load_scheme(scheme_id: str, config_type: str) -> Tuple[LabelScheme, Dict[int, int]]:
    rows: List[Dict[str, Any]] = load_csv(get_config_file_path(config_type))
    entries: List[SchemeEntry] = []
    mapping: Dict[int, int] = {}
    for row in rows:
        entries.append(
            SchemeEntry(
                code=int(row['code']),
                name=str(row['name']),
                color=parse_hex_color(str(row['color'])),
                in_table=bool(int(row.get('in_table', 1))),
            )
        )
        if 'general' in row:
            mapping[int(row['code'])] = int(row['general'])
    return LabelScheme(scheme_id=scheme_id, entries=tuple(entries)), mapping


@lru_cache(maxsize=1)
def builtin_schemes() -> BuiltinSchemes:
    """
    :return: NALCMS-19, CORINE-31, GENERAL-8 and the recode maps NALCMS->GENERAL and CORINE->GENERAL.
    """
    general, _ = _load_scheme('GENERAL', 'general')
    nalcms, nalcms_mapping = _load_scheme('NALCMS', 'nalcms')
    corine, corine_mapping = _load_scheme('CORINE', 'corine')
    if len(general) != 8:
        raise SchemeError(f'Scheme <GENERAL> should have 8 classes, got {len(general)}.')
    return BuiltinSchemes(
        nalcms=nalcms,
        corine=corine,
        general=general,
        nalcms_to_general=RecodeMap(nalcms, general, nalcms_mapping),
        corine_to_general=RecodeMap(corine, general, corine_mapping),
    )


def get_scheme(scheme_id: str) -> LabelScheme:
    schemes = builtin_schemes()
    lookup: Dict[str, LabelScheme] = {
        'NALCMS': schemes.nalcms,
        'CORINE': schemes.corine,
        'GENERAL': schemes.general,
    }
    try:
        return lookup[scheme_id.upper()]
    except KeyError:
        raise SchemeError(f'Unknown scheme <{scheme_id}>, expected one of {list(lookup)}.')


def get_recode_map(scheme_id: str, policy: UnknownPolicyEnum = UnknownPolicyEnum.Error) -> RecodeMap:
    """The built-in map from <scheme_id> into GENERAL."""
    schemes = builtin_schemes()
    key = scheme_id.upper()
    if key == 'NALCMS':
        result = schemes.nalcms_to_general
    elif key == 'CORINE':
        result = schemes.corine_to_general
    elif key == 'GENERAL':
        result = identity_map(schemes.general)
    else:
        raise SchemeError(f'No built-in recode map from scheme <{scheme_id}>.')
    return result if policy == result.unknown_policy else result.with_policy(policy)


def identity_map(scheme: LabelScheme) -> RecodeMap:
    return RecodeMap(scheme, scheme, {c: c for c in scheme.codes})


def _check_label_raster(labels: Raster) -> None:
    if labels.bands != 1:
        raise DimensionError(f'Label raster should have 1 band, got {labels.bands}.')
    if labels.samples.dtype != np.uint8:
        raise DTypeError(f'Label raster should be U8, got {labels.dtype.name}.')


def recode(labels: Raster, recode_map: RecodeMap) -> Raster:
    """
    Apply <recode_map> to every valid pixel. Nodata pixels stay nodata (value 255).
    Codes outside the source scheme raise RecodeError, or become nodata with the MapToNodata policy.
    """
    _check_label_raster(labels)
    table = recode_map.lookup_table()
    values = labels.samples[0]
    mapped = table[values]
    unknown = (mapped < 0) & labels.validmask
    validmask = labels.validmask.copy()
    if unknown.any():
        if recode_map.unknown_policy == UnknownPolicyEnum.Error:
            index = int(np.flatnonzero(unknown.ravel())[0])
            raise RecodeError(int(values.ravel()[index]), index, recode_map.from_scheme.scheme_id)
        validmask &= ~unknown
    out = np.where(validmask, mapped, LABEL_NODATA).astype(np.uint8)
    return labels.replace(samples=out[None, :, :], validmask=validmask)


def _valid_codes(labels: Raster) -> np.ndarray:
    return labels.samples[0][labels.validmask]


def class_distribution(labels: Raster, scheme: LabelScheme) -> ClassDistribution:
    """Fraction of valid pixels per scheme class, in scheme order."""
    _check_label_raster(labels)
    values = _valid_codes(labels)
    if values.size == 0:
        raise EmptyInputError('Label raster has no valid pixel.')
    counts = np.bincount(values, minlength=256)
    outside = np.setdiff1d(np.flatnonzero(counts), scheme.codes)
    if outside.size:
        raise SchemeError(
            f'Codes {outside.tolist()} are not members of scheme <{scheme.scheme_id}>.'
        )
    total = float(values.size)
    return ClassDistribution(
        scheme_id=scheme.scheme_id,
        fractions={c: float(counts[c]) / total for c in scheme.codes},
        names={e.code: e.name for e in scheme.entries},
    )


def crosswalk(
        labels_a: Raster,
        labels_b: Raster,
        scheme_a: Optional[LabelScheme] = None,
        scheme_b: Optional[LabelScheme] = None,
) -> CrosswalkMatrix:
    """
    Count co-registered code pairs over the pixels valid in both rasters.
    Without a scheme, an axis lists the codes present in the jointly valid set.
    """
    _check_label_raster(labels_a)
    _check_label_raster(labels_b)
    if (labels_a.width, labels_a.height) != (labels_b.width, labels_b.height):
        raise DimensionError(
            f'Label rasters are {labels_a.width}x{labels_a.height} and {labels_b.width}x{labels_b.height}.'
        )
    joint = labels_a.validmask & labels_b.validmask
    a = labels_a.samples[0][joint].astype(np.int64)
    b = labels_b.samples[0][joint].astype(np.int64)

    codes_a: List[int] = scheme_a.codes if scheme_a is not None else sorted(np.unique(a).tolist())
    codes_b: List[int] = scheme_b.codes if scheme_b is not None else sorted(np.unique(b).tolist())
    index_a = np.full(256, -1, dtype=np.int64)
    index_a[codes_a] = np.arange(len(codes_a))
    index_b = np.full(256, -1, dtype=np.int64)
    index_b[codes_b] = np.arange(len(codes_b))
    ia, ib = index_a[a], index_b[b]
    if np.any(ia < 0):
        raise SchemeError(f'Code <{int(a[ia < 0][0])}> is not a member of scheme <{scheme_a.scheme_id}>.')
    if np.any(ib < 0):
        raise SchemeError(f'Code <{int(b[ib < 0][0])}> is not a member of scheme <{scheme_b.scheme_id}>.')

    counts = np.zeros((len(codes_a), len(codes_b)), dtype=np.int64)
    np.add.at(counts, (ia, ib), 1)
    return CrosswalkMatrix(
        scheme_a=scheme_a.scheme_id if scheme_a is not None else 'A',
        scheme_b=scheme_b.scheme_id if scheme_b is not None else 'B',
        codes_a=list(codes_a),
        codes_b=list(codes_b),
        counts=counts,
    )


def class_index_scheme(scheme: LabelScheme) -> LabelScheme:
    """<scheme> renumbered 0..K-1 in scheme order, names and colors kept."""
    return LabelScheme(
        scheme_id=f'{scheme.scheme_id}-INDEX',
        entries=tuple(SchemeEntry(i, e.name, e.color, e.in_table) for i, e in enumerate(scheme.entries)),
    )


def to_class_indices(labels: Raster, scheme: LabelScheme) -> Raster:
    """Scheme codes -> 0-based class indices in scheme order; nodata stays 255."""
    _check_label_raster(labels)
    mapping = {code: i for i, code in enumerate(scheme.codes)}
    return recode(labels, RecodeMap(scheme, class_index_scheme(scheme), mapping))


def from_class_indices(labels: Raster, scheme: LabelScheme) -> Raster:
    """0-based class indices -> scheme codes; nodata stays 255."""
    _check_label_raster(labels)
    mapping = {i: code for i, code in enumerate(scheme.codes)}
    return recode(labels, RecodeMap(class_index_scheme(scheme), scheme, mapping))


def scheme_manifest() -> Dict[str, Any]:
    schemes = builtin_schemes()
    result: Dict[str, Any] = {'schemes': [], 'conflicts': SCHEME_CONFLICTS}
    for scheme, recode_map in [
        (schemes.nalcms, schemes.nalcms_to_general),
        (schemes.corine, schemes.corine_to_general),
        (schemes.general, None),
    ]:
        item = scheme.to_dict()
        item['recode'] = recode_map.to_list() if recode_map is not None else []
        item['outside_table'] = [e.code for e in scheme.entries if not e.in_table]
        result['schemes'].append(item)
    return result


def write_scheme_manifest(path: Union[str, Path]) -> None:
    save_json(Path(path), scheme_manifest())
