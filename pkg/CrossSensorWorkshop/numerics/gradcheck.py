# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


from typing import Callable, Dict

import numpy as np

from .tensor import Tape, Tensor, backward


__all__ = ['gradient_check']


def gradient_check(
        loss_fn: Callable[[Dict[str, Tensor]], Tensor],
        params: Dict[str, np.ndarray],
        step: float = 1e-3,
        samples: int = 6,
        seed: int = 0,
        floor: float = 1e-4,
) -> float:
    """
    Compare tape gradients against central finite differences.
    :param loss_fn: maps named parameter tensors to a scalar loss.
    :param params: parameter values; use float64 for meaningful differences.
    :param samples: coordinates checked per parameter, drawn with <seed>.
    :param floor: lower bound of the relative-error denominator.
    :return: largest relative error over the checked coordinates.
    """
    tape = Tape()
    watched = {name: tape.watch(name, values) for name, values in params.items()}
    grads = backward(tape, loss_fn(watched))

    rng = np.random.default_rng(seed)
    worst = 0.0
    for name, values in params.items():
        count = min(samples, values.size)
        for flat in rng.choice(values.size, size=count, replace=False):
            index = np.unravel_index(int(flat), values.shape)
            losses = []
            for sign in (1.0, -1.0):
                shifted = {k: v.copy() for k, v in params.items()}
                shifted[name][index] += sign * step
                losses.append(loss_fn({k: Tensor(v) for k, v in shifted.items()}).item())
            numeric = (losses[0] - losses[1]) / (2.0 * step)
            analytic = float(grads[name][index])
            error = abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)
            worst = max(worst, error)
    return worst
