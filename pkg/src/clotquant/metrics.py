"""Clot burden figures for one image and threshold alarms on them."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable

from .errors import RoiTooSmall
from .labeling import Component

DEFAULT_MIN_SIZE = 5

CSV_COLUMNS = ("timestamp", "n_clots", "cumulative_area", "occlusion_fraction", "largest_clot")


@dataclass(frozen=True)
class ClotReport:
    """Quantification of one filter image.

    ``clot_densities`` holds the pixel count of every retained clot, largest
    first. ``occlusion_fraction`` is the cumulative area normalised by the
    filter ROI area.
    """

    n_clots: int
    clot_densities: list[int]
    cumulative_area: int
    occlusion_fraction: float
    largest_clot: int
    roi_area: int
    min_size_used: int
    timestamp: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> ClotReport:
        return cls(
            n_clots=int(d["n_clots"]),
            clot_densities=[int(v) for v in d["clot_densities"]],
            cumulative_area=int(d["cumulative_area"]),
            occlusion_fraction=float(d["occlusion_fraction"]),
            largest_clot=int(d["largest_clot"]),
            roi_area=int(d["roi_area"]),
            min_size_used=int(d["min_size_used"]),
            timestamp=None if d.get("timestamp") is None else float(d["timestamp"]),
        )

    def csv_row(self) -> list[str]:
        return [
            "" if self.timestamp is None else format_number(self.timestamp),
            str(self.n_clots),
            str(self.cumulative_area),
            repr(float(self.occlusion_fraction)),
            str(self.largest_clot),
        ]


def format_number(value: float) -> str:
    """Shortest round-trip text; integral floats are written without '.0'."""
    value = float(value)
    if value.is_integer():
        return str(int(value))
    return repr(value)


def empty_report(roi_area: int, min_size: int, timestamp: float | None = None) -> ClotReport:
    return quantify([], roi_area, min_size, timestamp)


def quantify(
    components: Iterable[Component],
    roi_area: int,
    min_size: int = DEFAULT_MIN_SIZE,
    timestamp: float | None = None,
) -> ClotReport:
    """Turn labeled components into a ClotReport.

    Components smaller than ``min_size`` pixels are dropped as noise.
    """
    if roi_area < 1:
        raise RoiTooSmall(f"roi_area must be >= 1, got {roi_area}")
    if min_size < 0:
        raise ValueError("min_size must be >= 0")
    kept = sorted((c for c in components if c.area >= min_size), key=lambda c: (-c.area, c.label))
    densities = [int(c.area) for c in kept]
    cumulative = sum(densities)
    if cumulative > roi_area:
        raise ValueError(f"clot area {cumulative} exceeds ROI area {roi_area}")
    return ClotReport(
        n_clots=len(densities),
        clot_densities=densities,
        cumulative_area=cumulative,
        occlusion_fraction=cumulative / roi_area,
        largest_clot=densities[0] if densities else 0,
        roi_area=int(roi_area),
        min_size_used=int(min_size),
        timestamp=None if timestamp is None else float(timestamp),
    )


@dataclass(frozen=True)
class AlarmConfig:
    """Calibrated alarm limits. At least one limit must be set.

    ``min_clot_size`` lets the alarm ignore clots below a size even if the
    report kept them.
    """

    max_occlusion_fraction: float | None = None
    max_cumulative_area: int | None = None
    min_clot_size: int = 0

    def __post_init__(self):
        if self.max_occlusion_fraction is None and self.max_cumulative_area is None:
            raise ValueError("AlarmConfig needs max_occlusion_fraction or max_cumulative_area")
        if self.max_occlusion_fraction is not None and not 0 < self.max_occlusion_fraction <= 1:
            raise ValueError("max_occlusion_fraction must be in (0, 1]")
        if self.max_cumulative_area is not None and self.max_cumulative_area < 0:
            raise ValueError("max_cumulative_area must be >= 0")
        if self.min_clot_size < 0:
            raise ValueError("min_clot_size must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class AlarmState:
    alarm: bool = False
    reason: str | None = None  # "occlusion" or "area"
    value: float | None = None
    limit: float | None = None

    def to_dict(self) -> dict:
        if not self.alarm:
            return {"state": "clear"}
        return {"state": "alarm", "reason": self.reason, "value": self.value, "limit": self.limit}


CLEAR = AlarmState()


def check_alarm(report: ClotReport, cfg: AlarmConfig) -> AlarmState:
    """Strict exceedance test, occlusion limit checked before area limit."""
    if cfg.min_clot_size > report.min_size_used:
        area = sum(d for d in report.clot_densities if d >= cfg.min_clot_size)
        fraction = area / report.roi_area
    else:
        area = report.cumulative_area
        fraction = report.occlusion_fraction
    if cfg.max_occlusion_fraction is not None and fraction > cfg.max_occlusion_fraction:
        return AlarmState(True, "occlusion", fraction, cfg.max_occlusion_fraction)
    if cfg.max_cumulative_area is not None and area > cfg.max_cumulative_area:
        return AlarmState(True, "area", area, cfg.max_cumulative_area)
    return CLEAR
