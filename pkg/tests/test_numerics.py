# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


from typing import Dict
from pathlib import Path
import math

import numpy as np
import pytest

from CrossSensorWorkshop.definition import NumericsError, EmptyInputError, RangeError, CheckpointError
from CrossSensorWorkshop.numerics import (
    INSTANCE_EPS,
    Tensor,
    Tape,
    as_tensor,
    backward,
    set_finite_check,
    finite_check_enabled,
    ActivationEnum,
    conv2d,
    upsample2x,
    activation,
    instance_stats,
    adain_apply,
    add,
    mul,
    reduce_sum,
    reduce_mean,
    linear,
    gan_terms,
    adversarial_value,
    softmax_xent,
    AdamState,
    adam_step,
    PolySchedule,
    poly_lr,
    encode_checkpoint,
    decode_checkpoint,
    save_checkpoint,
    load_checkpoint,
    ParameterSpec,
    ParameterSet,
    gradient_check,
)


GRADIENT_TOLERANCE: float = 1e-3


def _weighted_sum(x: Tensor, weights: np.ndarray) -> Tensor:
    return reduce_sum(mul(x, Tensor(weights)))


def _away_from_zero(rng: np.random.Generator, shape) -> np.ndarray:
    values = rng.normal(size=shape)
    return np.sign(values) * (0.1 + np.abs(values))


def _naive_conv(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int, padding: int) -> np.ndarray:
    n, c, h, width = x.shape
    c_out, _, kh, kw = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    ho = (h + 2 * padding - kh) // stride + 1
    wo = (width + 2 * padding - kw) // stride + 1
    out = np.zeros((n, c_out, ho, wo))
    for i in range(n):
        for o in range(c_out):
            for y in range(ho):
                for x_ in range(wo):
                    window = xp[i, :, y * stride:y * stride + kh, x_ * stride:x_ * stride + kw]
                    out[i, o, y, x_] = np.sum(window * w[o]) + b[o]
    return out


def test_conv2d_identity_kernel():
    x = np.arange(18, dtype=np.float32).reshape(1, 2, 3, 3)
    w = np.zeros((2, 2, 1, 1), dtype=np.float32)
    w[0, 0, 0, 0] = w[1, 1, 0, 0] = 1.0
    out = conv2d(Tensor(x), Tensor(w), Tensor(np.zeros(2, dtype=np.float32)))
    assert np.array_equal(out.values, x)


def test_conv2d_ones_kernel():
    out = conv2d(Tensor(np.ones((1, 1, 5, 5))), Tensor(np.ones((1, 1, 3, 3))), padding=1)
    assert out.shape == (1, 1, 5, 5)
    assert out.values[0, 0, 2, 2] == 9.0
    assert out.values[0, 0, 0, 0] == 4.0


def test_conv2d_matches_naive_loop():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(2, 3, 7, 6))
    w = rng.normal(size=(4, 3, 3, 3))
    b = rng.normal(size=4)
    for stride, padding in [(1, 0), (1, 1), (2, 1), (2, 0)]:
        out = conv2d(Tensor(x), Tensor(w), Tensor(b), stride=stride, padding=padding)
        assert np.allclose(out.values, _naive_conv(x, w, b, stride, padding))


def test_conv2d_errors():
    with pytest.raises(NumericsError):
        conv2d(Tensor(np.ones((1, 2, 4, 4))), Tensor(np.ones((1, 3, 3, 3))))
    with pytest.raises(NumericsError):
        conv2d(Tensor(np.ones((1, 1, 2, 2))), Tensor(np.ones((1, 1, 3, 3))))


def test_upsample2x():
    out = upsample2x(Tensor(np.full((1, 1, 1, 1), 3.0)))
    assert out.values.tolist() == [[[[3.0, 3.0], [3.0, 3.0]]]]

    x = np.random.default_rng(2).normal(size=(2, 3, 4, 5))
    twice = upsample2x(upsample2x(Tensor(x)))
    assert twice.shape == (2, 3, 16, 20)
    assert twice.values.sum() == pytest.approx(16 * x.sum())
    assert upsample2x(Tensor(x)).values.sum() == pytest.approx(4 * x.sum())


def test_activation_values():
    assert activation(Tensor(np.array([-1.0])), ActivationEnum.ReLU).values.tolist() == [0.0]
    assert activation(Tensor(np.array([0.0])), ActivationEnum.Sigmoid).values.tolist() == [0.5]
    assert activation(Tensor(np.array([-2.0])), ActivationEnum.LeakyReLU).values[0] == pytest.approx(-0.4)
    assert activation(Tensor(np.array([0.0])), ActivationEnum.Tanh).values.tolist() == [0.0]


def test_instance_stats():
    x = np.full((1, 1, 2, 2), 3.0)
    mu, sigma = instance_stats(Tensor(x))
    assert mu.values[0, 0] == pytest.approx(3.0)
    assert sigma.values[0, 0] == pytest.approx(math.sqrt(INSTANCE_EPS))

    x = np.array([-1.0, 1.0, -1.0, 1.0]).reshape(1, 1, 2, 2)
    mu, sigma = instance_stats(Tensor(x))
    assert mu.values[0, 0] == pytest.approx(0.0)
    assert sigma.values[0, 0] == pytest.approx(math.sqrt(1 + INSTANCE_EPS))


def test_adain_apply():
    content = np.array([-1.0, 1.0, -1.0, 1.0]).reshape(1, 1, 2, 2)
    out = adain_apply(Tensor(content), Tensor(np.array([[5.0]])), Tensor(np.array([[2.0]])))
    expected = 5.0 + 2.0 * content / math.sqrt(1 + INSTANCE_EPS)
    assert np.allclose(out.values, expected)
    assert np.allclose(out.values, [[[[3.0, 7.0], [3.0, 7.0]]]], atol=1e-4)


def test_adain_own_statistics_is_identity():
    content = np.random.default_rng(4).normal(size=(2, 3, 4, 4))
    mu, sigma = instance_stats(Tensor(content))
    out = adain_apply(Tensor(content), mu, sigma)
    assert np.allclose(out.values, content, atol=1e-4)


def test_adain_matches_style_moments():
    # Content std stays at or above 1 so the eps under the square root keeps the std error under 1e-4.
    rng = np.random.default_rng(11)
    n = 1000
    content = rng.normal(size=(n, 1, 8, 8))
    content = content * rng.uniform(1.0, 5.0, size=(n, 1, 1, 1)) / content.std(axis=(2, 3), keepdims=True)
    content += rng.uniform(-3.0, 3.0, size=(n, 1, 1, 1))
    style_mu = rng.uniform(-2.0, 2.0, size=(n, 1))
    style_sigma = rng.uniform(0.01, 2.0, size=(n, 1))

    out = adain_apply(Tensor(content), Tensor(style_mu), Tensor(style_sigma)).values
    out_mu = out.mean(axis=(2, 3))
    out_sigma = out.std(axis=(2, 3))
    assert np.all(np.abs(out_sigma - style_sigma) <= 1e-4 * style_sigma)
    assert np.all(np.abs(out_mu - style_mu) <= 1e-4 * np.maximum(np.abs(style_mu), style_sigma))


def test_adain_constant_content():
    content = np.full((1, 1, 3, 3), 4.0)
    out = adain_apply(Tensor(content), Tensor(np.array([[9.0]])), Tensor(np.array([[0.0]])))
    assert np.allclose(out.values, 9.0)


def test_adain_shape_error():
    with pytest.raises(NumericsError):
        adain_apply(Tensor(np.ones((1, 2, 2, 2))), Tensor(np.ones((1, 3))), Tensor(np.ones((1, 2))))


def test_gan_terms():
    half = Tensor(np.full((1, 1, 4, 4), 0.5))
    loss_d, loss_g = gan_terms(half, half)
    assert loss_d.item() == pytest.approx(1.3863, abs=1e-4)
    assert loss_g.item() == pytest.approx(math.log(2))
    assert adversarial_value(half.values, half.values) == pytest.approx(-1.3863, abs=1e-4)

    loss_d, _ = gan_terms(Tensor(np.full(4, 1 - 1e-7)), Tensor(np.full(4, 1e-7)))
    assert loss_d.item() < 1e-6


def test_gan_terms_errors():
    with pytest.raises(RangeError):
        gan_terms(Tensor(np.array([1.0])), Tensor(np.array([0.5])))
    with pytest.raises(EmptyInputError):
        gan_terms(Tensor(np.zeros(0)), Tensor(np.array([0.5])))
    with pytest.raises(NumericsError):
        gan_terms(Tensor(np.array([np.nan])), Tensor(np.array([0.5])))


def test_softmax_xent():
    logits = Tensor(np.zeros((1, 8, 2, 2)))
    targets = np.array([[[0, 3], [7, 255]]])
    assert softmax_xent(logits, targets).item() == pytest.approx(math.log(8), abs=1e-4)
    assert math.log(8) == pytest.approx(2.0794, abs=1e-4)

    confident = np.zeros((1, 8, 1, 1))
    confident[0, 2, 0, 0] = 100.0
    assert softmax_xent(Tensor(confident), np.array([[[2]]])).item() < 1e-6

    with pytest.raises(EmptyInputError):
        softmax_xent(logits, np.full((1, 2, 2), 255))
    with pytest.raises(RangeError):
        softmax_xent(logits, np.full((1, 2, 2), 8))
    with pytest.raises(NumericsError):
        softmax_xent(logits, np.zeros((1, 3, 3)))


def test_backward_linear_case():
    x = np.random.default_rng(5).normal(size=(3, 4))
    tape = Tape()
    w = tape.watch('w', np.ones((3, 4)))
    grads = backward(tape, reduce_sum(mul(w, as_tensor(x))))
    assert np.array_equal(grads['w'], x)


def test_backward_unreached_parameter_is_zero():
    tape = Tape()
    w = tape.watch('w', np.ones(3))
    unused = tape.watch('unused', np.ones(2))
    grads = backward(tape, reduce_mean(w))
    assert np.allclose(grads['w'], 1.0 / 3)
    assert np.array_equal(grads['unused'], np.zeros(2))
    assert unused.tape is tape


def test_backward_rejects_non_scalar():
    tape = Tape()
    w = tape.watch('w', np.ones(3))
    with pytest.raises(NumericsError):
        backward(tape, mul(w, w))


def test_finite_check():
    previous = finite_check_enabled()
    try:
        set_finite_check(True)
        with pytest.raises(NumericsError):
            mul(Tensor(np.array([np.inf])), Tensor(np.array([1.0])))
    finally:
        set_finite_check(previous)


def test_rank_cap():
    with pytest.raises(NumericsError):
        Tensor(np.zeros((1, 1, 1, 1, 1)))


def test_gradient_conv2d():
    rng = np.random.default_rng(10)
    params: Dict[str, np.ndarray] = {
        'x': rng.normal(size=(2, 3, 6, 6)),
        'w': rng.normal(size=(4, 3, 3, 3)),
        'b': rng.normal(size=4),
    }
    r = rng.normal(size=(2, 4, 3, 3))
    error = gradient_check(lambda p: _weighted_sum(conv2d(p['x'], p['w'], p['b'], stride=2, padding=1), r), params)
    assert error < GRADIENT_TOLERANCE


def test_gradient_upsample_and_linear():
    rng = np.random.default_rng(11)
    params = {'x': rng.normal(size=(2, 2, 3, 3))}
    r = rng.normal(size=(2, 2, 6, 6))
    assert gradient_check(lambda p: _weighted_sum(upsample2x(p['x']), r), params) < GRADIENT_TOLERANCE

    params = {'x': rng.normal(size=(3, 5)), 'w': rng.normal(size=(4, 5)), 'b': rng.normal(size=4)}
    r = rng.normal(size=(3, 4))
    assert gradient_check(lambda p: _weighted_sum(linear(p['x'], p['w'], p['b']), r), params) < GRADIENT_TOLERANCE


def test_gradient_activations():
    rng = np.random.default_rng(12)
    for kind in ActivationEnum:
        params = {'x': _away_from_zero(rng, (2, 3, 4))}
        r = rng.normal(size=(2, 3, 4))
        error = gradient_check(lambda p: _weighted_sum(activation(p['x'], kind), r), params)
        assert error < GRADIENT_TOLERANCE, kind


def test_gradient_instance_stats():
    rng = np.random.default_rng(13)
    params = {'x': rng.normal(size=(2, 3, 4, 4))}
    r_mu = rng.normal(size=(2, 3))
    r_sigma = rng.normal(size=(2, 3))

    def _loss(p: Dict[str, Tensor]) -> Tensor:
        mu, sigma = instance_stats(p['x'])
        return add(_weighted_sum(mu, r_mu), _weighted_sum(sigma, r_sigma))

    assert gradient_check(_loss, params) < GRADIENT_TOLERANCE


def test_gradient_adain():
    rng = np.random.default_rng(14)
    params = {
        'content': rng.normal(size=(2, 3, 4, 4)),
        'mu': rng.normal(size=(2, 3)),
        'sigma': rng.uniform(0.5, 2.0, size=(2, 3)),
    }
    r = rng.normal(size=(2, 3, 4, 4))
    error = gradient_check(lambda p: _weighted_sum(adain_apply(p['content'], p['mu'], p['sigma']), r), params)
    assert error < GRADIENT_TOLERANCE


def test_gradient_losses():
    rng = np.random.default_rng(15)
    params = {'real': rng.uniform(0.2, 0.8, size=(2, 1, 2, 2)), 'fake': rng.uniform(0.2, 0.8, size=(2, 1, 2, 2))}

    def _gan(p: Dict[str, Tensor]) -> Tensor:
        loss_d, loss_g = gan_terms(p['real'], p['fake'])
        return add(loss_d, loss_g)

    assert gradient_check(_gan, params) < GRADIENT_TOLERANCE

    targets = rng.integers(0, 5, size=(2, 3, 3))
    targets[0, 0, 0] = 255
    params = {'logits': rng.normal(size=(2, 5, 3, 3))}
    assert gradient_check(lambda p: softmax_xent(p['logits'], targets), params) < GRADIENT_TOLERANCE


def test_adam_step():
    params = {'theta': np.zeros(1)}
    grads = {'theta': np.ones(1)}
    state = AdamState(lr=0.1)
    new_params, new_state = adam_step(params, grads, state)
    assert new_params['theta'][0] == pytest.approx(-0.1 / (1 + 1e-8), abs=1e-12)
    assert new_params['theta'][0] == pytest.approx(-0.0999999, abs=2e-7)
    assert new_state.t == 1
    assert state.t == 0
    assert params['theta'][0] == 0.0

    unchanged, _ = adam_step({'theta': np.full(3, 2.0)}, {'theta': np.zeros(3)}, AdamState(lr=0.1))
    assert np.array_equal(unchanged['theta'], np.full(3, 2.0))

    with pytest.raises(NumericsError):
        adam_step(params, {'other': np.ones(1)}, state)


def test_adam_weight_decay():
    params = {'theta': np.full(1, 1.0)}
    decayed, _ = adam_step(params, {'theta': np.zeros(1)}, AdamState(lr=0.1, weight_decay=5e-4))
    assert decayed['theta'][0] < 1.0


def test_poly_lr():
    schedule = PolySchedule(base_lr=1e-4, total_steps=2000, power=0.9)
    assert poly_lr(schedule, 0) == pytest.approx(1e-4)
    assert poly_lr(schedule, 2000) == 0.0
    assert poly_lr(schedule, 1000) == pytest.approx(5.3589e-5, rel=1e-4)
    with pytest.raises(RangeError):
        poly_lr(schedule, 2001)
    with pytest.raises(RangeError):
        PolySchedule(base_lr=1e-4, total_steps=0)


def test_checkpoint_round_trip(tmp_path: Path):
    params = {
        'w': np.arange(6, dtype=np.float32).reshape(2, 3),
        'b': np.array([0.5, -0.5], dtype=np.float32),
    }
    path = save_checkpoint(tmp_path.joinpath('a.ckpt'), params, {'step': 3})
    loaded, meta = load_checkpoint(path)
    assert list(loaded) == ['w', 'b']
    assert np.array_equal(loaded['w'], params['w'])
    assert meta == {'step': 3}

    data = path.read_bytes()
    with pytest.raises(CheckpointError):
        decode_checkpoint(b'XXXX' + data[4:])
    with pytest.raises(CheckpointError):
        decode_checkpoint(data[:-2])
    with pytest.raises(CheckpointError):
        decode_checkpoint(data + b'\x00')
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path.joinpath('missing.ckpt'))


def test_checkpoint_rejects_non_finite():
    params = {'w': np.array([1.0, np.nan], dtype=np.float32)}
    with pytest.raises(CheckpointError):
        encode_checkpoint(params)
    loaded, meta = decode_checkpoint(encode_checkpoint(params, {'diagnostic': True}))
    assert np.isnan(loaded['w'][1])
    assert meta['diagnostic'] is True


class _TinyParams(ParameterSet):
    kind = 'tiny'

    def layout(self):
        return [ParameterSpec('w', (2, 3), 3), ParameterSpec('b', (2,), 3, zero_init=True)]


class _OtherParams(ParameterSet):
    kind = 'other'

    def layout(self):
        return [ParameterSpec('w', (2, 3), 3)]


def test_parameter_set(tmp_path: Path):
    params = _TinyParams(seed=3)
    assert params.parameter_count() == 8
    assert np.all(np.abs(params.values['w']) <= 1 / math.sqrt(3))
    assert np.array_equal(params.values['b'], np.zeros(2))
    assert np.array_equal(_TinyParams(seed=3).values['w'], params.values['w'])

    path = params.save(tmp_path.joinpath('tiny.ckpt'), {'step': 1})
    loaded, meta = _TinyParams.load(path)
    assert np.array_equal(loaded.values['w'], params.values['w'])
    assert meta['kind'] == 'tiny'
    assert meta['step'] == 1

    with pytest.raises(CheckpointError):
        _OtherParams.load(path)
    with pytest.raises(CheckpointError):
        _TinyParams(values={'w': np.zeros((2, 3))})
