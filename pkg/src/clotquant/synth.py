"""Deterministic synthetic filter images with a simple clot growth model.

Scenes are white filter faces carrying dark disks. Each clot's area grows
linearly in time, so cumulative clot area is linear in elapsed minutes up
to rasterization error. Noise comes from a fully specified generator
(SplitMix64 feeding Box-Muller) so fixtures reproduce across platforms.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np

from .image_core import RoiMask, apply_roi, as_gray, round_half_away
from .labeling import check_connectivity

DEFAULT_BACKGROUND = 250
DEFAULT_CLOT_INTENSITY = 40

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15


class SceneError(ValueError):
    """Scene or growth description is invalid."""


@dataclass(frozen=True)
class Disk:
    cx: float
    cy: float
    radius: float
    intensity: int = DEFAULT_CLOT_INTENSITY

    def __post_init__(self):
        if not self.radius >= 0:
            raise SceneError(f"disk radius must be >= 0, got {self.radius}")
        if not 0 <= self.intensity <= 255:
            raise SceneError(f"disk intensity must be in [0, 255], got {self.intensity}")


@dataclass(frozen=True)
class ClotScene:
    width: int
    height: int
    background: int = DEFAULT_BACKGROUND
    clots: tuple[Disk, ...] = ()
    roi: RoiMask = field(default_factory=RoiMask.full)
    flow_rate_ml_min: float | None = None  # annotation only

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise SceneError("scene dimensions must be >= 1")
        if not 0 <= self.background <= 255:
            raise SceneError("background must be in [0, 255]")
        object.__setattr__(self, "clots", tuple(self.clots))


@dataclass(frozen=True)
class Nucleation:
    time: float
    cx: float
    cy: float
    intensity: int = DEFAULT_CLOT_INTENSITY


@dataclass(frozen=True)
class GrowthModel:
    """Per-clot area growth (pixels per minute) plus timed nucleations."""

    area_rate: float = 0.0
    nucleation_times: tuple[Nucleation, ...] = ()
    noise_stddev: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.area_rate < 0:
            raise SceneError("area_rate must be >= 0")
        if self.noise_stddev < 0:
            raise SceneError("noise_stddev must be >= 0")
        object.__setattr__(self, "nucleation_times", tuple(self.nucleation_times))


# ------------------------------------------------------------- rendering


def _disk_box(d: Disk, width: int, height: int):
    c0 = max(0, math.ceil(d.cx - d.radius))
    c1 = min(width - 1, math.floor(d.cx + d.radius))
    r0 = max(0, math.ceil(d.cy - d.radius))
    r1 = min(height - 1, math.floor(d.cy + d.radius))
    return c0, c1, r0, r1


def render(scene: ClotScene) -> np.ndarray:
    """Rasterize a scene without noise. Overlaps take the darkest intensity."""
    img = np.full((scene.height, scene.width), scene.background, dtype=np.uint8)
    for d in scene.clots:
        c0, c1, r0, r1 = _disk_box(d, scene.width, scene.height)
        if c0 > c1 or r0 > r1:
            continue
        cols = np.arange(c0, c1 + 1, dtype=np.float64) - d.cx
        rows = np.arange(r0, r1 + 1, dtype=np.float64) - d.cy
        inside = rows[:, None] ** 2 + cols[None, :] ** 2 <= d.radius * d.radius
        patch = img[r0 : r1 + 1, c0 : c1 + 1]
        patch[inside] = np.minimum(patch[inside], d.intensity)
    return apply_roi(img, scene.roi)


class ExpectedComponents(NamedTuple):
    count: int
    total_area: int


def clot_pixels(scene: ClotScene) -> set[tuple[int, int]]:
    """Pixel centers ``(col, row)`` covered by any disk and inside the ROI.

    Pure-Python enumeration, kept apart from the numpy rendering path.
    """
    roi = scene.roi
    pixels = set()
    for d in scene.clots:
        c0, c1, r0, r1 = _disk_box(d, scene.width, scene.height)
        r2 = d.radius * d.radius
        for row in range(r0, r1 + 1):
            for col in range(c0, c1 + 1):
                if (col - d.cx) ** 2 + (row - d.cy) ** 2 > r2:
                    continue
                if roi.kind == "disk" and (col - roi.center_x) ** 2 + (row - roi.center_y) ** 2 > roi.radius**2:
                    continue
                pixels.add((col, row))
    return pixels


def expected_components(scene: ClotScene, conn: int = 8) -> ExpectedComponents:
    """Ground-truth clot count and area by flood fill over rasterized disks."""
    conn = check_connectivity(conn)
    steps = [(1, 0), (-1, 0), (0, 1), (0, -1)]
    if conn == 8:
        steps += [(1, 1), (1, -1), (-1, 1), (-1, -1)]
    pixels = clot_pixels(scene)
    unseen = set(pixels)
    count = 0
    while unseen:
        count += 1
        queue = deque([unseen.pop()])
        while queue:
            col, row = queue.popleft()
            for dc, dr in steps:
                nb = (col + dc, row + dr)
                if nb in unseen:
                    unseen.remove(nb)
                    queue.append(nb)
    return ExpectedComponents(count, len(pixels))


# ----------------------------------------------------------------- noise


def splitmix64(seed: int, n: int) -> np.ndarray:
    """First ``n`` outputs of SplitMix64 started from ``seed`` (uint64).

    Output ``i`` depends only on ``seed + (i + 1) * gamma``, which allows
    generating the whole stream at once.
    """
    idx = np.arange(1, n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & _MASK64) + idx * np.uint64(_GOLDEN_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    return z


def gaussian_stream(seed: int, n: int) -> np.ndarray:
    """``n`` standard normal samples via Box-Muller on SplitMix64 uniforms.

    Uniforms are ``(x >> 11) * 2**-53``. Each pair ``(u1, u2)`` yields
    ``sqrt(-2 ln(1 - u1)) * (cos, sin)(2 pi u2)``, emitted cos first.
    """
    pairs = (n + 1) // 2
    u = (splitmix64(seed, 2 * pairs) >> np.uint64(11)).astype(np.float64) * 2.0**-53
    u1 = 1.0 - u[0::2]
    u2 = u[1::2]
    mag = np.sqrt(-2.0 * np.log(u1))
    out = np.empty(2 * pairs, dtype=np.float64)
    out[0::2] = mag * np.cos(2.0 * np.pi * u2)
    out[1::2] = mag * np.sin(2.0 * np.pi * u2)
    return out[:n]


def add_noise(img: np.ndarray, stddev: float, seed: int) -> np.ndarray:
    """Additive Gaussian noise in raster order, rounded half away from zero and clamped."""
    img = as_gray(img)
    if stddev < 0:
        raise ValueError("stddev must be >= 0")
    if stddev == 0:
        return img.copy()
    noise = gaussian_stream(seed, img.size).reshape(img.shape)
    noisy = round_half_away(img.astype(np.float64) + stddev * noise)
    return np.clip(noisy, 0, 255).astype(np.uint8)


# ---------------------------------------------------------------- growth


def grown_radius(r0: float, area_rate: float, elapsed: float) -> float:
    return math.sqrt(r0 * r0 + area_rate * elapsed / math.pi)


def evolve(scene: ClotScene, model: GrowthModel, t: float) -> ClotScene:
    """Scene after ``t`` minutes of growth; a pure function of the t=0 scene."""
    if t < 0:
        raise ValueError("t must be >= 0")
    clots = [replace(d, radius=grown_radius(d.radius, model.area_rate, t)) for d in scene.clots]
    for nuc in model.nucleation_times:
        if nuc.time <= t:
            clots.append(Disk(nuc.cx, nuc.cy, grown_radius(0.0, model.area_rate, t - nuc.time), nuc.intensity))
    return replace(scene, clots=tuple(clots))


def frame_seed(seed: int, index: int) -> int:
    return (seed + index) & _MASK64


def render_sequence(
    scene0: ClotScene, model: GrowthModel, interval: float, n_frames: int
) -> Iterator[tuple[float, np.ndarray]]:
    """Yield ``(t, frame)`` at ``t = i * interval``; frame ``i`` uses noise seed ``seed + i``."""
    if not interval > 0:
        raise ValueError("interval must be > 0")
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    for i in range(n_frames):
        t = i * interval
        frame = render(evolve(scene0, model, t))
        if model.noise_stddev > 0:
            frame = add_noise(frame, model.noise_stddev, frame_seed(model.seed, i))
            # Noise must not leak outside the filter face.
            frame = apply_roi(frame, scene0.roi)
        yield t, frame


# ------------------------------------------------------------------ JSON


def _roi_from_dict(d) -> RoiMask:
    if d is None:
        return RoiMask.full()
    kind = d.get("kind", "full")
    if kind in ("full", "full-frame"):
        return RoiMask.full()
    if kind == "disk":
        return RoiMask.disk(d["center_x"], d["center_y"], d["radius"])
    raise SceneError(f"unknown roi kind {kind!r}")


def scene_from_dict(d: dict) -> tuple[ClotScene, GrowthModel]:
    """Parse a scene description; a missing ``growth`` block means no growth."""
    try:
        clots = [
            Disk(float(c["cx"]), float(c["cy"]), float(c["radius"]), int(c.get("intensity", DEFAULT_CLOT_INTENSITY)))
            for c in d.get("clots", [])
        ]
        scene = ClotScene(
            width=int(d["width"]),
            height=int(d["height"]),
            background=int(d.get("background", DEFAULT_BACKGROUND)),
            clots=tuple(clots),
            roi=_roi_from_dict(d.get("roi")),
            flow_rate_ml_min=None if d.get("flow_rate_ml_min") is None else float(d["flow_rate_ml_min"]),
        )
        g = d.get("growth") or {}
        nucs = [
            Nucleation(float(n["time"]), float(n["cx"]), float(n["cy"]), int(n.get("intensity", DEFAULT_CLOT_INTENSITY)))
            for n in g.get("nucleation_times", [])
        ]
        model = GrowthModel(
            area_rate=float(g.get("area_rate", 0.0)),
            nucleation_times=tuple(nucs),
            noise_stddev=float(g.get("noise_stddev", 0.0)),
            seed=int(g.get("seed", 0)),
        )
    except (KeyError, TypeError, AttributeError) as exc:
        raise SceneError(f"invalid scene description: {exc!r}") from exc
    except ValueError as exc:
        raise SceneError(str(exc)) from exc
    return scene, model


def scene_to_dict(scene: ClotScene, model: GrowthModel | None = None) -> dict:
    d = {
        "width": scene.width,
        "height": scene.height,
        "background": scene.background,
        "clots": [{"cx": c.cx, "cy": c.cy, "radius": c.radius, "intensity": c.intensity} for c in scene.clots],
        "roi": scene.roi.to_dict(),
        "flow_rate_ml_min": scene.flow_rate_ml_min,
    }
    if model is not None:
        d["growth"] = {
            "area_rate": model.area_rate,
            "nucleation_times": [
                {"time": n.time, "cx": n.cx, "cy": n.cy, "intensity": n.intensity} for n in model.nucleation_times
            ],
            "noise_stddev": model.noise_stddev,
            "seed": model.seed,
        }
    return d


def load_scene(path) -> tuple[ClotScene, GrowthModel]:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SceneError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(d, dict):
        raise SceneError(f"{path}: scene must be a JSON object")
    return scene_from_dict(d)


def random_disjoint_scene(
    rng: np.random.Generator,
    width: int,
    height: int,
    n_clots: int,
    r_range: tuple[float, float] = (1.0, 6.0),
    gap: float = 2.0,
    max_tries: int = 1000,
) -> ClotScene:
    """Scene with up to ``n_clots`` disks whose rasters stay well separated."""
    disks: list[Disk] = []
    tries = 0
    while len(disks) < n_clots and tries < max_tries:
        tries += 1
        r = float(rng.uniform(*r_range))
        cx = float(rng.uniform(0, width - 1))
        cy = float(rng.uniform(0, height - 1))
        if all(math.hypot(cx - d.cx, cy - d.cy) > r + d.radius + gap for d in disks):
            disks.append(Disk(cx, cy, r))
    return ClotScene(width, height, clots=tuple(disks))

