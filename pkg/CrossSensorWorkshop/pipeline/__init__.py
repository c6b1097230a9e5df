# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


from .setting import CONFIG_VERSION, AUTO_OFFSETS, DomainInput, PreprocessConfig, EvaluationConfig, PipelineConfig
from .synth import SYNTH_BANDS, SynthSpec, SynthDomain, SynthBenchmark, synth_benchmark, write_benchmark
from .runner import (
    STAGES,
    MANIFEST_NAME,
    PipelineResult,
    ingest_domain,
    resolve_offsets,
    write_tiles,
    read_tiles,
    evaluate_predictions,
    run,
)
