# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


"""
CrossSensorWorkshop - Utility module
"""


from typing import Any, Dict, Iterable, List, Optional, Tuple
from pathlib import Path
import hashlib
import json
import logging
import sys

import structlog

from .config import CONFIGS


def make_path_existed(path: Path):
    if not path.exists():
        path.mkdir(parents=True)


def configure_logging(level: Optional[str] = None) -> None:
    """
    Route structlog events to standard error as timestamped key/value lines.
    :param level: logging level name, default CONFIGS['logging']['level'].
    """
    level_name: str = (level or CONFIGS['logging']['level']).upper()
    structlog.configure(
        processors=[
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt='iso', utc=True),
            structlog.processors.format_exc_info,
            structlog.processors.KeyValueRenderer(
                key_order=['timestamp', 'level', 'logger', 'event'],
                drop_missing=True,
            ),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(getattr(logging, level_name, logging.INFO)),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )


def get_logger(name: str) -> Any:
    return structlog.get_logger().bind(logger=name)


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, mode='rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()


def path_sha256(path: Path) -> str:
    """
    Hash a file, or every file under a directory in sorted relative-path order.
    """
    if path.is_file():
        return file_sha256(path)
    digest = hashlib.sha256()
    for item in sorted(p for p in path.rglob('*') if p.is_file()):
        digest.update(item.relative_to(path).as_posix().encode('utf-8'))
        digest.update(file_sha256(item).encode('ascii'))
    return digest.hexdigest()


def json_sha256(data: Any) -> str:
    text = json.dumps(data, sort_keys=True, separators=(',', ':'), ensure_ascii=False)
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def write_jsonl(jsonl_file: Path, data: Iterable[Dict[str, Any]], append: bool = False) -> None:
    with open(jsonl_file, mode='a' if append else 'w', encoding='utf-8', newline='\n') as f:
        for item in data:
            f.write(json.dumps(item, ensure_ascii=False))
            f.write('\n')


def read_jsonl(jsonl_file: Path) -> List[Dict[str, Any]]:
    result: List[Dict[str, Any]] = []
    with open(jsonl_file, mode='r', encoding='utf-8') as f:
        for line in f:
            line = line.strip()
            if line:
                result.append(json.loads(line))
    return result


def parse_hex_color(color: str) -> Tuple[int, int, int]:
    """'#1f77b4' -> (31, 119, 180)"""
    text = color.strip().lstrip('#')
    if len(text) != 6:
        raise ValueError(f'Parameter <color> should be a #rrggbb string, got {color!r}.')
    return int(text[0:2], 16), int(text[2:4], 16), int(text[4:6], 16)


def parse_int_list(text: str) -> List[int]:
    """'5000,5000,5000' -> [5000, 5000, 5000]"""
    return [int(item) for item in text.split(',') if item.strip()]
