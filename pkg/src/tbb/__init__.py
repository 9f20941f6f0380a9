"""Temporal-bias benchmark for audio onset localization.

Builds controlled audio stimuli from timestamped event annotations, collects
onset predictions from pluggable predictors (remote audio-QA endpoints,
bias-injecting simulators, an energy onset detector), and quantifies temporal
bias with signed (TBI) and absolute (MAE) onset-error metrics broken down by
window length, event duration, and event position.
"""

from .metrics import (
    MetricSummary,
    SampleResult,
    aggregate,
    categorize,
    delta_long_short,
    early_late_split,
    mae,
    normalized_mad,
    tbi,
)
from .predictor import (
    OnsetDetectorConfig,
    PredictionRecord,
    Prompt,
    SimulatorSpec,
    build_prompt,
    detect_onset,
    parse_class_inventory,
    parse_timestamp,
    simulate,
)
from .stimulus import (
    AudioBuffer,
    CarrierSpec,
    StimulusRecord,
    crop,
    loop_event,
    mix,
    position_onset,
    read_wav,
    synth_carrier,
    truncate_event,
    write_wav,
)
from .timeline import (
    Event,
    EventTimeline,
    FrameAnnotation,
    Window,
    earliest_onset,
    events_in_window,
    merge_frames,
    parse_frame_csv,
    segment_windows,
    select_query_classes,
)

__version__ = "0.1.0"
