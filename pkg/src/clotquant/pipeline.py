"""Single-image analysis: preprocess, ROI, threshold, label, quantify."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .binarize import ThresholdPolicy, class_means, histogram, otsu_threshold, threshold_at
from .errors import RoiTooSmall
from .image_core import RoiMask, apply_roi, as_gray, median_filter, roi_membership
from .labeling import Component, check_connectivity, label_components
from .metrics import DEFAULT_MIN_SIZE, ClotReport, quantify

# Otsu splits that separate class means by fewer levels than this are
# treated as noise on a clean filter rather than clot versus background.
DEFAULT_MIN_CONTRAST = 25


@dataclass(frozen=True)
class AnalysisConfig:
    policy: ThresholdPolicy = field(default_factory=ThresholdPolicy.otsu)
    connectivity: int = 8
    min_size: int = DEFAULT_MIN_SIZE
    roi: RoiMask = field(default_factory=RoiMask.full)
    median_radius: int = 0  # 0 disables preprocessing
    min_contrast: float = DEFAULT_MIN_CONTRAST

    def __post_init__(self):
        check_connectivity(self.connectivity)
        if self.min_size < 0:
            raise ValueError("min_size must be >= 0")
        if self.median_radius < 0:
            raise ValueError("median_radius must be >= 0")
        if self.min_contrast < 0:
            raise ValueError("min_contrast must be >= 0")

    def to_dict(self) -> dict:
        return {
            "threshold": self.policy.describe(),
            "polarity": self.policy.polarity,
            "connectivity": self.connectivity,
            "min_size": self.min_size,
            "roi": str(self.roi),
            "median_radius": self.median_radius,
            "min_contrast": self.min_contrast,
        }


@dataclass
class Analysis:
    report: ClotReport
    threshold: int
    low_contrast: bool
    labels: np.ndarray
    components: list[Component]


def analyze(img: np.ndarray, cfg: AnalysisConfig = AnalysisConfig(), timestamp: float | None = None) -> Analysis:
    """Run the full quantification on one grayscale image.

    The Otsu histogram only counts pixels inside the ROI. Raises
    DegenerateHistogram when those pixels all share one intensity.
    """
    img = as_gray(img)
    if cfg.median_radius:
        img = median_filter(img, cfg.median_radius)
    img = apply_roi(img, cfg.roi)
    h, w = img.shape
    inside = roi_membership(cfg.roi, w, h)
    area = int(inside.sum())
    if area < 1:
        raise RoiTooSmall("ROI covers no pixel of the image")

    low_contrast = False
    if cfg.policy.mode == "otsu":
        hist = histogram(img[inside])
        t = otsu_threshold(hist)
        lo, hi = class_means(hist, t)
        low_contrast = hi - lo < cfg.min_contrast
    else:
        t = cfg.policy.level

    if low_contrast:
        fg = np.zeros_like(inside)
    else:
        fg = threshold_at(img, t, cfg.policy.polarity) & inside
    labels, comps = label_components(fg, cfg.connectivity)
    report = quantify(comps, area, cfg.min_size, timestamp)
    return Analysis(report, int(t), low_contrast, labels, comps)
