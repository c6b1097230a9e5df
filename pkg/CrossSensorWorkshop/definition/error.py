# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


"""
Exception types raised by CrossSensorWorkshop.

Every error derives from WorkshopError. Errors caused by a bad argument also derive from
ValueError, so callers that only know the standard library still catch them.
"""


from typing import Optional
from pathlib import Path


__all__ = [
    'WorkshopError',
    'RasterFormatError',
    'RasterCorruptionError',
    'UnsupportedFormatError',
    'DimensionError',
    'DTypeError',
    'EmptyInputError',
    'RangeError',
    'SchemeError',
    'RecodeError',
    'NumericsError',
    'CheckpointError',
    'TrainingError',
    'ManifestError',
    'ConfigError',
    'PipelineError',
]


class WorkshopError(Exception):
    pass


class RasterFormatError(WorkshopError, ValueError):
    pass


class RasterCorruptionError(WorkshopError, ValueError):
    pass


class UnsupportedFormatError(WorkshopError, ValueError):
    pass


class DimensionError(WorkshopError, ValueError):
    pass


class DTypeError(WorkshopError, ValueError):
    pass


class EmptyInputError(WorkshopError, ValueError):
    pass


class RangeError(WorkshopError, ValueError):
    pass


class SchemeError(WorkshopError, ValueError):
    pass


class RecodeError(WorkshopError, ValueError):
    def __init__(self, code: int, pixel_index: int, scheme_id: str):
        self.code = code
        self.pixel_index = pixel_index
        self.scheme_id = scheme_id
        super().__init__(
            f'Code <{code}> at pixel <{pixel_index}> is not a member of scheme <{scheme_id}>.'
        )


class NumericsError(WorkshopError, ValueError):
    pass


class CheckpointError(WorkshopError, ValueError):
    pass


class TrainingError(WorkshopError):
    def __init__(self, message: str, checkpoint: Optional[Path] = None):
        self.checkpoint = checkpoint
        if checkpoint is not None:
            message = f'{message} Diagnostic checkpoint written to <{checkpoint}>.'
        super().__init__(message)


class ManifestError(WorkshopError, ValueError):
    pass


class ConfigError(WorkshopError, ValueError):
    pass


class PipelineError(WorkshopError):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f'[{stage}] {type(cause).__name__}: {cause}')
