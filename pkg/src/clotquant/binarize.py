"""Histogram thresholding of grayscale filter images into clot masks."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DegenerateHistogram

Polarity = Literal["dark", "light"]


@dataclass(frozen=True)
class ThresholdPolicy:
    """How to pick the threshold and which side of it is foreground.

    ``level`` is only meaningful in ``fixed`` mode. With ``dark`` polarity a
    pixel is foreground when ``pixel <= t``; with ``light`` when ``pixel > t``.
    """

    mode: Literal["otsu", "fixed"] = "otsu"
    level: int | None = None
    polarity: Polarity = "dark"

    def __post_init__(self):
        if self.mode not in ("otsu", "fixed"):
            raise ValueError(f"unknown threshold mode {self.mode!r}")
        if self.polarity not in ("dark", "light"):
            raise ValueError(f"unknown polarity {self.polarity!r}")
        if self.mode == "fixed":
            if self.level is None or not 0 <= self.level <= 255:
                raise ValueError("fixed threshold must be in [0, 255]")

    @classmethod
    def otsu(cls, polarity: Polarity = "dark") -> ThresholdPolicy:
        return cls("otsu", None, polarity)

    @classmethod
    def fixed(cls, level: int, polarity: Polarity = "dark") -> ThresholdPolicy:
        return cls("fixed", int(level), polarity)

    def describe(self) -> str:
        return "otsu" if self.mode == "otsu" else str(self.level)


def histogram(img: np.ndarray) -> np.ndarray:
    """256-bin intensity histogram (int64). Accepts any uint8 array shape."""
    return np.bincount(np.asarray(img, dtype=np.uint8).ravel(), minlength=256).astype(np.int64)


def otsu_threshold(hist) -> int:
    """Threshold in [0, 254] maximizing between-class variance.

    The classes are ``{<= t}`` and ``{> t}``. Up to a constant factor the
    between-class variance is ``(s0*N - S*n0)**2 / (n0*n1)``; candidates are
    compared by exact integer cross-multiplication, so plateaus tie exactly
    and the smallest ``t`` wins.
    """
    bins = [int(c) for c in hist]
    if len(bins) != 256:
        raise ValueError("histogram must have 256 bins")
    if any(c < 0 for c in bins):
        raise ValueError("histogram counts must be nonnegative")
    if sum(1 for c in bins if c) < 2:
        raise DegenerateHistogram("all pixels share one intensity, no threshold split exists")

    total = sum(bins)
    total_sum = sum(i * c for i, c in enumerate(bins))
    best_t = 0
    best_num, best_den = 0, 1
    n0 = s0 = 0
    for t in range(255):
        n0 += bins[t]
        s0 += t * bins[t]
        n1 = total - n0
        if n0 == 0 or n1 == 0:
            continue
        num = (s0 * total - total_sum * n0) ** 2
        den = n0 * n1
        if num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den
    return best_t


def class_means(hist, t: int) -> tuple[float, float]:
    """Mean intensity of the ``<= t`` and ``> t`` classes (nan when empty)."""
    bins = np.asarray(hist, dtype=np.float64)
    levels = np.arange(256, dtype=np.float64)
    lo, hi = bins[: t + 1], bins[t + 1 :]
    lo_n, hi_n = lo.sum(), hi.sum()
    lo_mean = float((lo * levels[: t + 1]).sum() / lo_n) if lo_n else float("nan")
    hi_mean = float((hi * levels[t + 1 :]).sum() / hi_n) if hi_n else float("nan")
    return lo_mean, hi_mean


def threshold_at(img: np.ndarray, t: int, polarity: Polarity = "dark") -> np.ndarray:
    img = np.asarray(img)
    return img <= t if polarity == "dark" else img > t


def resolve_threshold(img: np.ndarray, policy: ThresholdPolicy) -> int:
    if policy.mode == "fixed":
        return policy.level
    return otsu_threshold(histogram(img))


def binarize(img: np.ndarray, policy: ThresholdPolicy = ThresholdPolicy()) -> np.ndarray:
    """Boolean clot mask, ``True`` = foreground."""
    return threshold_at(img, resolve_threshold(img, policy), policy.polarity)


def foreground_count(mask: np.ndarray) -> int:
    return int(np.count_nonzero(mask))
