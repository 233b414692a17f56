"""Two-pass connected component labeling backed by union-find.

The first raster pass hands out provisional labels and records every
equivalence between already visited neighbours in a disjoint-set forest
(path halving, union by size). The second pass resolves each pixel to its
root and renumbers roots densely in order of first appearance, so label 1
is always the component holding the topmost-then-leftmost foreground pixel.
"""
from __future__ import annotations

from typing import NamedTuple

import numba
import numpy as np


class Component(NamedTuple):
    label: int
    area: int
    bbox: tuple[int, int, int, int]  # min_col, min_row, max_col, max_row
    centroid: tuple[float, float]  # mean col, mean row


def check_connectivity(conn) -> int:
    conn = int(conn)
    if conn not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {conn}")
    return conn


@numba.njit(cache=True, nogil=True)
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@numba.njit(cache=True, nogil=True)
def _union(parent, size, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra == rb:
        return ra
    if size[ra] < size[rb]:
        ra, rb = rb, ra
    parent[rb] = ra
    size[ra] += size[rb]
    return ra


@numba.njit(cache=True, nogil=True)
def _two_pass(fg, eight):
    h, w = fg.shape
    prov = np.zeros((h, w), dtype=np.int32)
    # Provisional labels never exceed ceil(h/2) * w, one per pixel is a safe cap.
    parent = np.zeros(h * w + 1, dtype=np.int32)
    size = np.zeros(h * w + 1, dtype=np.int32)
    n_prov = 0

    for y in range(h):
        for x in range(w):
            if not fg[y, x]:
                continue
            cur = 0
            if x > 0 and prov[y, x - 1]:
                cur = prov[y, x - 1]
            if y > 0:
                if eight and x > 0 and prov[y - 1, x - 1]:
                    nb = prov[y - 1, x - 1]
                    cur = nb if cur == 0 else _union(parent, size, cur, nb)
                if prov[y - 1, x]:
                    nb = prov[y - 1, x]
                    cur = nb if cur == 0 else _union(parent, size, cur, nb)
                if eight and x + 1 < w and prov[y - 1, x + 1]:
                    nb = prov[y - 1, x + 1]
                    cur = nb if cur == 0 else _union(parent, size, cur, nb)
            if cur == 0:
                n_prov += 1
                parent[n_prov] = n_prov
                size[n_prov] = 1
                cur = n_prov
            prov[y, x] = cur

    final = np.zeros(n_prov + 1, dtype=np.int32)
    area = np.zeros(n_prov + 1, dtype=np.int64)
    min_c = np.zeros(n_prov + 1, dtype=np.int64)
    min_r = np.zeros(n_prov + 1, dtype=np.int64)
    max_c = np.zeros(n_prov + 1, dtype=np.int64)
    max_r = np.zeros(n_prov + 1, dtype=np.int64)
    sum_c = np.zeros(n_prov + 1, dtype=np.int64)
    sum_r = np.zeros(n_prov + 1, dtype=np.int64)
    n = 0
    for y in range(h):
        for x in range(w):
            p = prov[y, x]
            if p == 0:
                continue
            root = _find(parent, p)
            lab = final[root]
            if lab == 0:
                n += 1
                lab = n
                final[root] = lab
                min_c[lab] = x
                min_r[lab] = y
                max_c[lab] = x
                max_r[lab] = y
            prov[y, x] = lab
            area[lab] += 1
            sum_c[lab] += x
            sum_r[lab] += y
            if x < min_c[lab]:
                min_c[lab] = x
            if x > max_c[lab]:
                max_c[lab] = x
            max_r[lab] = y
    return prov, n, area, min_c, min_r, max_c, max_r, sum_c, sum_r


def label_components(mask: np.ndarray, conn: int = 8) -> tuple[np.ndarray, list[Component]]:
    """Label the foreground of a binary mask.

    Args:
        mask: 2-D boolean array, ``True`` = foreground.
        conn: 4 or 8.

    Returns:
        ``(labels, components)``: an int32 map with 0 for background and
        dense labels 1..N, and the per-label statistics sorted by label.
    """
    fg = np.ascontiguousarray(np.asarray(mask, dtype=bool))
    if fg.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {fg.shape}")
    eight = check_connectivity(conn) == 8
    labels, n, area, min_c, min_r, max_c, max_r, sum_c, sum_r = _two_pass(fg, eight)
    cols = (a[1 : n + 1].tolist() for a in (area, min_c, min_r, max_c, max_r, sum_c, sum_r))
    comps = [
        Component(k, a, (c0, r0, c1, r1), (sc / a, sr / a))
        for k, a, c0, r0, c1, r1, sc, sr in zip(range(1, n + 1), *cols)
    ]
    return labels, comps


def component_stats(labels: np.ndarray) -> list[Component]:
    """Recompute area, bounding box and centroid for every label in a map."""
    labels = np.asarray(labels)
    n = int(labels.max()) if labels.size else 0
    if n == 0:
        return []
    rows, cols = np.nonzero(labels)
    lab = labels[rows, cols].astype(np.int64)
    area = np.bincount(lab, minlength=n + 1)
    sum_c = np.bincount(lab, weights=cols, minlength=n + 1)
    sum_r = np.bincount(lab, weights=rows, minlength=n + 1)
    big = np.iinfo(np.int64).max
    min_c = np.full(n + 1, big, dtype=np.int64)
    min_r = np.full(n + 1, big, dtype=np.int64)
    max_c = np.full(n + 1, -1, dtype=np.int64)
    max_r = np.full(n + 1, -1, dtype=np.int64)
    np.minimum.at(min_c, lab, cols)
    np.minimum.at(min_r, lab, rows)
    np.maximum.at(max_c, lab, cols)
    np.maximum.at(max_r, lab, rows)
    return [
        Component(
            label=k,
            area=int(area[k]),
            bbox=(int(min_c[k]), int(min_r[k]), int(max_c[k]), int(max_r[k])),
            centroid=(float(sum_c[k] / area[k]), float(sum_r[k] / area[k])),
        )
        for k in range(1, n + 1)
        if area[k]
    ]


def labels_to_pgm_image(labels: np.ndarray) -> np.ndarray:
    """Debug view of a label map: labels clamped to 255, not a stable format."""
    return np.minimum(np.asarray(labels), 255).astype(np.uint8)
