# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


"""
Dense tensors and the reverse-mode tape.

A Tensor wraps a numpy array of rank <= 4 (NCHW for images). A Tensor created by
Tape.watch() is a leaf of that tape; every op whose inputs live on a tape appends one
record to it, so the records are in topological order by construction. Tensors without
a tape are constants.

    tape = Tape()
    w = tape.watch('w', w_values)
    loss = reduce_sum(mul(w, as_tensor(x)))
    grads = backward(tape, loss)        # {'w': x}
"""


from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import CONFIGS
from ..definition import NumericsError


__all__ = [
    'MAX_RANK',
    'Tensor',
    'Tape',
    'as_tensor',
    'backward',
    'set_finite_check',
    'finite_check_enabled',
]


MAX_RANK: int = 4

_finite_check: bool = bool(CONFIGS['numerics']['check_finite'])


def set_finite_check(enabled: bool) -> None:
    """Assert that every op output (and every gradient) is finite."""
    global _finite_check
    _finite_check = bool(enabled)


def finite_check_enabled() -> bool:
    return _finite_check


BackwardFunction = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tensor(object):
    values: np.ndarray
    tape: Optional['Tape']
    node: Optional[int]

    def __init__(self, values: np.ndarray, tape: Optional['Tape'] = None, node: Optional[int] = None):
        values = np.asarray(values)
        if values.dtype.kind != 'f':
            values = values.astype(np.float32)
        if values.ndim > MAX_RANK:
            raise NumericsError(f'Tensor rank is capped at {MAX_RANK}, got shape {values.shape}.')
        self.values = values
        self.tape = tape
        self.node = node

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def dtype(self) -> np.dtype:
        return self.values.dtype

    @property
    def size(self) -> int:
        return int(self.values.size)

    def item(self) -> float:
        return float(self.values.reshape(-1)[0])

    def __repr__(self) -> str:
        return f'<Tensor(shape={self.shape}, dtype={self.dtype}, node={self.node})>'


def as_tensor(values: Union[Tensor, np.ndarray, float]) -> Tensor:
    if isinstance(values, Tensor):
        return values
    return Tensor(np.asarray(values))


class _Record(object):
    __slots__ = ('inputs', 'output', 'backward')

    def __init__(self, inputs: Tuple[Optional[int], ...], output: int, backward: BackwardFunction):
        self.inputs = inputs
        self.output = output
        self.backward = backward


class Tape(object):
    def __init__(self):
        self._records: List[_Record] = []
        self._leaves: Dict[str, int] = {}
        self._shapes: Dict[int, Tuple[Tuple[int, ...], np.dtype]] = {}
        self._next_node: int = 0

    def __len__(self) -> int:
        return len(self._records)

    def _new_node(self, values: np.ndarray) -> int:
        node = self._next_node
        self._next_node += 1
        self._shapes[node] = (values.shape, values.dtype)
        return node

    def watch(self, name: str, values: np.ndarray) -> Tensor:
        """Register a parameter; its gradient is reported under <name>."""
        if name in self._leaves:
            raise NumericsError(f'Parameter <{name}> is already watched by this tape.')
        tensor = Tensor(values)
        tensor.tape = self
        tensor.node = self._new_node(tensor.values)
        self._leaves[name] = tensor.node
        return tensor

    def record(self, values: np.ndarray, inputs: Sequence[Tensor], backward_fn: BackwardFunction) -> Tensor:
        """
        Wrap an op output. The op is recorded only when one of its inputs lives on this tape;
        <backward_fn> maps the output gradient to one gradient (or None) per input.
        """
        if _finite_check and not np.all(np.isfinite(values)):
            raise NumericsError('Op produced a non-finite value.')
        ids: List[Optional[int]] = []
        for item in inputs:
            if item.tape is None:
                ids.append(None)
            elif item.tape is self:
                ids.append(item.node)
            else:
                raise NumericsError('Op inputs belong to different tapes.')
        if all(i is None for i in ids):
            return Tensor(values)
        node = self._new_node(values)
        self._records.append(_Record(tuple(ids), node, backward_fn))
        return Tensor(values, tape=self, node=node)

    def gradients(self, loss: Tensor) -> Dict[str, np.ndarray]:
        if loss.tape is not self:
            raise NumericsError('Loss was not computed on this tape.')
        if loss.size != 1:
            raise NumericsError(f'Loss should be a scalar, got shape {loss.shape}.')
        grads: Dict[int, np.ndarray] = {loss.node: np.ones_like(loss.values)}
        for record in reversed(self._records):
            grad = grads.pop(record.output, None)
            if grad is None:
                continue
            input_grads = record.backward(grad)
            for node, item in zip(record.inputs, input_grads):
                if node is None or item is None:
                    continue
                if _finite_check and not np.all(np.isfinite(item)):
                    raise NumericsError('Backward pass produced a non-finite gradient.')
                if node in grads:
                    grads[node] = grads[node] + item
                else:
                    grads[node] = item
        result: Dict[str, np.ndarray] = {}
        for name, node in self._leaves.items():
            shape, dtype = self._shapes[node]
            grad = grads.get(node)
            result[name] = np.zeros(shape, dtype=dtype) if grad is None else grad.astype(dtype, copy=False)
        return result


def record(values: np.ndarray, inputs: Sequence[Tensor], backward_fn: BackwardFunction) -> Tensor:
    """Record on the tape of the first taped input, or return a constant."""
    for item in inputs:
        if item.tape is not None:
            return item.tape.record(values, inputs, backward_fn)
    if _finite_check and not np.all(np.isfinite(values)):
        raise NumericsError('Op produced a non-finite value.')
    return Tensor(values)


def backward(tape: Tape, loss: Tensor) -> Dict[str, np.ndarray]:
    """
    Gradients of a scalar <loss> with respect to every watched parameter; parameters the
    loss does not reach get zeros.
    """
    if loss.size != 1:
        raise NumericsError(f'Loss should be a scalar, got shape {loss.shape}.')
    if loss.tape is None:
        result: Dict[str, np.ndarray] = {}
        for name, node in tape._leaves.items():
            shape, dtype = tape._shapes[node]
            result[name] = np.zeros(shape, dtype=dtype)
        return result
    return tape.gradients(loss)
