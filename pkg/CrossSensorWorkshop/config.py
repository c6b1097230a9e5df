# -*- coding: UTF-8 -*-

__author__ = 'Bruce Frank Wong'


"""
CrossSensorWorkshop - config module

The CONFIGS variable contains the defaults which the workshop needs when running. It is
loaded from <settings/defaults.json> when the package is imported, and environment
variables override a few entries:
    CSW_LOG_LEVEL       -> CONFIGS['logging']['level']
    CSW_CHECK_FINITE    -> CONFIGS['numerics']['check_finite']

The CONFIGS variable is a dict instance:
{
    'logging': {'level': str},
    'numerics': {'check_finite': bool},
    'raster': {
        'tile_size': int,
        'stride': int,                  # 0 means stride = tile_size
        'min_valid_fraction': float,
        'histogram_bins': int,
        'shift_percentile': float,
    },
    'style': {<StyleTrainConfig fields>, 'mode': 'Stats' | 'Gan'},
    'segmentation': {<SegTrainConfig fields>},
    'evaluation': {'seed': int, 'points': int},
    'synth': {<SynthSpec fields>},
}

Reference tables (the label schemes) are csv files under <data/scheme>.
"""


from typing import Any, Dict, List
from pathlib import Path
import csv
import json
import os
import copy


# The path of the package <CrossSensorWorkshop>
PACKAGE_PATH: Path = Path(__file__).parent


def load_csv(csv_file: Path) -> List[Dict[str, Any]]:
    result: List[Dict[str, Any]] = []
    temp: Dict[str, Any] = {}
    with open(csv_file, mode='r', encoding='utf-8') as f:
        reader = csv.DictReader(f)
        for row in reader:
            for k, v in row.items():
                try:
                    if '.' in v:
                        x = float(v)
                    else:
                        x = int(v)
                    temp[k] = x
                except ValueError:
                    temp[k] = v
            result.append(copy.deepcopy(temp))
    return result


def load_json(json_file: Path) -> Dict[str, Any]:
    result: Dict[str, Any]
    with open(json_file, mode='r', encoding='utf-8') as f:
        result = json.load(f)
    return result


def save_json(json_file: Path, data: Any) -> None:
    with open(json_file, mode='w', encoding='utf-8') as f:
        json.dump(data, f, indent=2, ensure_ascii=False)
        f.write('\n')


def get_config_file_path(config_type: str) -> Path:
    config_file_path: Dict[str, Path] = {
        'defaults': PACKAGE_PATH.joinpath('settings', 'defaults.json'),
        'nalcms': PACKAGE_PATH.joinpath('data', 'scheme', 'nalcms.csv'),
        'corine': PACKAGE_PATH.joinpath('data', 'scheme', 'corine.csv'),
        'general': PACKAGE_PATH.joinpath('data', 'scheme', 'general.csv'),
    }
    return config_file_path[config_type]


def merge_dict(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    """
    Recursively merge <update> over a deep copy of <base>.
    :return: the merged dict; <base> is left untouched.
    """
    result: Dict[str, Any] = copy.deepcopy(base)
    for k, v in update.items():
        if isinstance(v, dict) and isinstance(result.get(k), dict):
            result[k] = merge_dict(result[k], v)
        else:
            result[k] = copy.deepcopy(v)
    return result


def load_config() -> Dict[str, Any]:
    """
    Load <defaults.json> and apply the environment overrides.
    :return: a dict which key is the section name and value is a dict of settings.
    """
    result: Dict[str, Any] = load_json(get_config_file_path('defaults'))

    level = os.environ.get('CSW_LOG_LEVEL')
    if level:
        result['logging']['level'] = level.upper()
    check_finite = os.environ.get('CSW_CHECK_FINITE')
    if check_finite is not None:
        result['numerics']['check_finite'] = check_finite.strip().lower() in ['1', 'true', 'yes', 'on']
    return result


# The config variable.
CONFIGS: Dict[str, Any] = load_config()
