# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


from typing import Dict, Optional, Tuple
from dataclasses import dataclass, field

import numpy as np

from ..definition import NumericsError, RangeError


__all__ = ['AdamState', 'adam_step', 'PolySchedule', 'poly_lr']


@dataclass
class AdamState(object):
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    t: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    def __repr__(self) -> str:
        return f'<AdamState(t={self.t}, lr={self.lr}, weight_decay={self.weight_decay})>'


def adam_step(
        params: Dict[str, np.ndarray],
        grads: Dict[str, np.ndarray],
        state: AdamState,
        lr: Optional[float] = None,
) -> Tuple[Dict[str, np.ndarray], AdamState]:
    """
    One bias-corrected Adam update. Weight decay is added to the gradient as decay * theta.
    :param lr: learning rate of this step, default state.lr.
    :return: (new params, new state); the inputs are not modified.
    """
    if set(params) != set(grads):
        raise NumericsError(f'Gradients cover {sorted(grads)}, parameters are {sorted(params)}.')
    lr = state.lr if lr is None else lr
    t = state.t + 1
    new_params: Dict[str, np.ndarray] = {}
    new_m: Dict[str, np.ndarray] = {}
    new_v: Dict[str, np.ndarray] = {}
    for name, theta in params.items():
        g = grads[name]
        if g.shape != theta.shape:
            raise NumericsError(f'Gradient <{name}> has shape {g.shape}, parameter has {theta.shape}.')
        if state.weight_decay:
            g = g + state.weight_decay * theta
        m = state.m.get(name)
        v = state.v.get(name)
        m = (1 - state.beta1) * g if m is None else state.beta1 * m + (1 - state.beta1) * g
        v = (1 - state.beta2) * g * g if v is None else state.beta2 * v + (1 - state.beta2) * g * g
        m_hat = m / (1 - state.beta1 ** t)
        v_hat = v / (1 - state.beta2 ** t)
        new_params[name] = (theta - lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(theta.dtype, copy=False)
        new_m[name] = m.astype(theta.dtype, copy=False)
        new_v[name] = v.astype(theta.dtype, copy=False)
    new_state = AdamState(
        lr=state.lr,
        beta1=state.beta1,
        beta2=state.beta2,
        eps=state.eps,
        weight_decay=state.weight_decay,
        t=t,
        m=new_m,
        v=new_v,
    )
    return new_params, new_state


@dataclass(frozen=True)
class PolySchedule(object):
    base_lr: float
    total_steps: int
    power: float = 0.9

    def __post_init__(self):
        if self.total_steps <= 0:
            raise RangeError(f'Parameter <total_steps> should be positive, got {self.total_steps}.')
        if self.power <= 0:
            raise RangeError(f'Parameter <power> should be positive, got {self.power}.')
        if self.base_lr < 0:
            raise RangeError(f'Parameter <base_lr> should be non-negative, got {self.base_lr}.')


def poly_lr(schedule: PolySchedule, step: int) -> float:
    """base_lr * (1 - step / total_steps) ** power, for 0 <= step <= total_steps."""
    if step < 0 or step > schedule.total_steps:
        raise RangeError(f'Parameter <step> should be in [0, {schedule.total_steps}], got {step}.')
    return schedule.base_lr * (1.0 - step / schedule.total_steps) ** schedule.power
