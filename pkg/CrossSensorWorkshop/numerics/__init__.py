# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


from .tensor import (
    MAX_RANK,
    Tensor,
    Tape,
    as_tensor,
    backward,
    set_finite_check,
    finite_check_enabled,
)
from .layer import (
    INSTANCE_EPS,
    ActivationEnum,
    conv2d,
    conv_output_size,
    upsample2x,
    activation,
    instance_mean,
    instance_std,
    instance_stats,
    adain_apply,
    add,
    mul,
    scale,
    reduce_sum,
    reduce_mean,
    linear,
)
from .loss import gan_terms, adversarial_value, discriminator_accuracy, softmax_xent, log_softmax
from .optimizer import AdamState, adam_step, PolySchedule, poly_lr
from .checkpoint import CHECKPOINT_MAGIC, encode_checkpoint, decode_checkpoint, save_checkpoint, load_checkpoint
from .parameter import ParameterSpec, ParameterSet
from .gradcheck import gradient_check
