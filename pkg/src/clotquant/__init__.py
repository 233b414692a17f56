"""Clot burden quantification from images of extracorporeal blood filters."""
import logging

from .binarize import ThresholdPolicy, binarize, histogram, otsu_threshold
from .errors import (
    AllFramesFailed,
    ClotQuantError,
    DecodeError,
    DegenerateHistogram,
    ImageIOError,
    MalformedHeader,
    RoiTooSmall,
    TooFewSamples,
    TruncatedData,
    UnsupportedFormat,
    UnsupportedMaxval,
    ZeroVariance,
)
from .image_core import (
    RoiMask,
    apply_roi,
    decode_image,
    decode_pgm,
    encode_pgm,
    median_filter,
    roi_area,
    to_gray,
)
from .labeling import Component, component_stats, label_components
from .metrics import AlarmConfig, AlarmState, ClotReport, check_alarm, quantify
from .monitor import (
    FrameEvent,
    OnsetConfig,
    SessionConfig,
    SessionSeries,
    detect_onset,
    first_alarm,
    run_branches,
    run_session,
    simulate_manifold,
)
from .pipeline import AnalysisConfig, analyze
from .stats import CorrelationResult, linear_fit, pearson
from .synth import ClotScene, Disk, GrowthModel, Nucleation, add_noise, evolve, expected_components, render

logging.getLogger(__name__).addHandler(logging.NullHandler())

__version__ = "0.1.0"
