# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


from .network import (
    STYLE_BANDS,
    DomainStyle,
    GeneratorParams,
    DiscriminatorParams,
    generator_apply,
    discriminator_apply,
    generator_forward,
    discriminator_forward,
)
from .transfer import (
    STATS_EPS,
    StyleModeEnum,
    extract_domain_style,
    stylize_stats_mode,
    restore_stats_mode,
    load_generator,
    stylize_dataset,
    stylize_files,
    build_mixed_dataset,
    validate_manifest,
    read_manifest,
    write_manifest,
)
from .trainer import NETWORK_NAMES, StyleTrainConfig, StyleTrainResult, stack_tiles, train_style
