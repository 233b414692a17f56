"""Periodic branch monitoring: frame sequences to clot time series.

A session is one manifold branch imaged at increasing times. Each frame
runs through the single-image pipeline; the resulting reports give the
onset of clot formation (debounced exceedance of a calibrated noise
floor), the first threshold alarm, and the correlation of cumulative clot
area with elapsed flow time.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import AllFramesFailed, DecodeError, DegenerateHistogram, TooFewSamples, ZeroVariance
from .image_core import decode_image, decode_pgm, encode_pgm, roi_area
from .metrics import AlarmConfig, ClotReport, check_alarm, empty_report
from .pipeline import AnalysisConfig, analyze
from .stats import CorrelationResult, pearson
from .synth import ClotScene, GrowthModel, render_sequence

log = logging.getLogger(__name__)

FrameSource = Union[str, Path, bytes, np.ndarray]


@dataclass(frozen=True)
class FrameEvent:
    timestamp: float
    source: FrameSource
    branch_id: int | None = None


@dataclass(frozen=True)
class OnsetConfig:
    noise_floor: int = 0
    k_consecutive: int = 2

    def __post_init__(self):
        if self.noise_floor < 0:
            raise ValueError("noise_floor must be >= 0")
        if self.k_consecutive < 1:
            raise ValueError("k_consecutive must be >= 1")


@dataclass(frozen=True)
class SessionConfig:
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    alarm: AlarmConfig | None = None
    onset: OnsetConfig = field(default_factory=OnsetConfig)

    def to_dict(self) -> dict:
        return {
            **self.analysis.to_dict(),
            "alarm": None if self.alarm is None else self.alarm.to_dict(),
            "noise_floor": self.onset.noise_floor,
            "k_consecutive": self.onset.k_consecutive,
        }


@dataclass(frozen=True)
class SkippedFrame:
    timestamp: float
    source: str
    error: str


@dataclass
class SessionSeries:
    reports: list[ClotReport]
    onset_time: float | None = None
    alarm_time: float | None = None
    correlation: CorrelationResult | None = None
    correlation_reason: str | None = None
    skipped: list[SkippedFrame] = field(default_factory=list)
    # Frames whose ROI was a single intensity; reported as clot-free.
    degenerate_frames: list[float] = field(default_factory=list)
    branch_id: int | None = None

    def to_dict(self, config: SessionConfig | None = None) -> dict:
        d = {
            "branch_id": self.branch_id,
            "reports": [r.to_dict() for r in self.reports],
            "onset_time": self.onset_time,
            "alarm_time": self.alarm_time,
            "correlation": None if self.correlation is None else self.correlation.to_dict(),
            "correlation_reason": self.correlation_reason,
            "skipped": [{"timestamp": s.timestamp, "source": s.source, "error": s.error} for s in self.skipped],
            "degenerate_frames": list(self.degenerate_frames),
        }
        if config is not None:
            d["config"] = config.to_dict()
        return d


def detect_onset(reports: Sequence[ClotReport], noise_floor: float, k: int) -> float | None:
    """Start time of the first run of ``k`` reports with area above the floor."""
    if k < 1:
        raise ValueError("k must be >= 1")
    run = 0
    for i, rep in enumerate(reports):
        run = run + 1 if rep.cumulative_area > noise_floor else 0
        if run == k:
            return reports[i - k + 1].timestamp
    return None


def first_alarm(reports: Iterable[ClotReport], cfg: AlarmConfig) -> float | None:
    for rep in reports:
        if check_alarm(rep, cfg).alarm:
            return rep.timestamp
    return None


def _load(source: FrameSource) -> np.ndarray:
    if isinstance(source, np.ndarray):
        return source
    if isinstance(source, (bytes, bytearray)):
        return decode_pgm(bytes(source))
    return decode_image(source)


def _describe(source: FrameSource) -> str:
    if isinstance(source, np.ndarray):
        return "<array %dx%d>" % (source.shape[1], source.shape[0])
    if isinstance(source, (bytes, bytearray)):
        return "<%d bytes>" % len(source)
    return str(source)


def run_session(events: Sequence[FrameEvent], cfg: SessionConfig = SessionConfig()) -> SessionSeries:
    """Analyze one branch's frames in timestamp order.

    Frames that fail to decode are recorded in ``skipped`` and left out of
    the series.

    Raises:
        ValueError: no events, mixed branches, or timestamps not strictly increasing.
        AllFramesFailed: no frame could be decoded.
    """
    events = list(events)
    if not events:
        raise ValueError("session has no frames")
    if len({e.branch_id for e in events}) > 1:
        raise ValueError("run_session takes one branch; use run_branches")
    for a, b in zip(events, events[1:]):
        if not b.timestamp > a.timestamp:
            raise ValueError(f"timestamps must increase strictly: {a.timestamp} then {b.timestamp}")

    series = SessionSeries(reports=[], branch_id=events[0].branch_id)
    for ev in events:
        try:
            img = _load(ev.source)
        except DecodeError as exc:
            log.warning("skipping frame at t=%s (%s): %s", ev.timestamp, _describe(ev.source), exc)
            series.skipped.append(SkippedFrame(float(ev.timestamp), _describe(ev.source), str(exc)))
            continue
        try:
            report = analyze(img, cfg.analysis, ev.timestamp).report
        except DegenerateHistogram:
            h, w = img.shape
            report = empty_report(roi_area(cfg.analysis.roi, w, h), cfg.analysis.min_size, ev.timestamp)
            series.degenerate_frames.append(float(ev.timestamp))
        series.reports.append(report)

    if not series.reports:
        raise AllFramesFailed(f"none of {len(events)} frames could be analyzed")

    series.onset_time = detect_onset(series.reports, cfg.onset.noise_floor, cfg.onset.k_consecutive)
    if cfg.alarm is not None:
        series.alarm_time = first_alarm(series.reports, cfg.alarm)
    try:
        series.correlation = pearson(
            [r.timestamp for r in series.reports], [r.cumulative_area for r in series.reports]
        )
    except (TooFewSamples, ZeroVariance) as exc:
        series.correlation_reason = type(exc).__name__
    return series


def run_branches(events: Iterable[FrameEvent], cfg: SessionConfig = SessionConfig()) -> dict:
    """Split events by branch and run each as an independent session.

    Returns ``{branch_id: SessionSeries | AllFramesFailed}`` in branch order,
    with an unnamed branch (``None``) first.
    """
    groups: dict = {}
    for ev in events:
        groups.setdefault(ev.branch_id, []).append(ev)
    out = {}
    for bid in sorted(groups, key=lambda b: (b is not None, b if b is not None else 0)):
        try:
            out[bid] = run_session(groups[bid], cfg)
        except AllFramesFailed as exc:
            out[bid] = exc
    return out


def simulate_manifold(
    scene0: ClotScene,
    model: GrowthModel,
    interval: float,
    n_frames: int,
    cfg: SessionConfig = SessionConfig(),
    branch_id: int | None = None,
) -> SessionSeries:
    """Render a growing scene every ``interval`` minutes and monitor it.

    Frames go through PGM encoding and decoding so the whole I/O path is
    exercised.
    """
    events = [
        FrameEvent(t, encode_pgm(frame), branch_id)
        for t, frame in render_sequence(scene0, model, interval, n_frames)
    ]
    return run_session(events, cfg)


def recommend_noise_floor(clean_areas: Sequence[float]) -> float:
    """Non-normative calibration helper: median + 3 * MAD of clot-free frames."""
    arr = np.asarray(clean_areas, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("need at least one clot-free frame")
    med = float(np.median(arr))
    mad = float(np.median(np.abs(arr - med)))
    return med + 3.0 * mad
