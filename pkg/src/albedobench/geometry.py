"""Polygon rasterization and maximal-rectangle search on boolean masks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AnnotationError, ParameterError


@dataclass(frozen=True)
class Rect:
    """Axis-aligned pixel rectangle: top-left corner plus extent."""

    x0: int
    y0: int
    w: int
    h: int

    @property
    def area(self) -> int:
        return self.w * self.h

    def as_slices(self) -> tuple[slice, slice]:
        """(row slice, column slice) for indexing numpy images."""
        return slice(self.y0, self.y0 + self.h), slice(self.x0, self.x0 + self.w)


def as_polygon(vertices) -> np.ndarray:
    """Validate and normalise a polygon to an (N, 2) float array of (x, y)."""
    arr = np.asarray(vertices, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 3:
        raise AnnotationError(
            "polygon needs at least 3 (x, y) vertices, got shape %r" % (arr.shape,)
        )
    if not np.all(np.isfinite(arr)):
        raise AnnotationError("polygon vertices must be finite")
    return arr


def rasterize_polygons(polys, width: int, height: int) -> np.ndarray:
    """Fill polygons into an (height, width) boolean mask.

    A pixel is set when its center (x+0.5, y+0.5) is inside a polygon under
    the even-odd rule; the mask is the union over all polygons.  Horizontal
    crossings use a half-open rule on the y span of each edge so vertices
    touching a scanline are counted exactly once.
    """
    if width < 1 or height < 1:
        raise ParameterError("mask dimensions must be >= 1")
    mask = np.zeros((height, width), dtype=bool)
    centers_x = np.arange(width, dtype=np.float64) + 0.5
    cy = (np.arange(height, dtype=np.float64) + 0.5)[:, None]
    for poly in polys:
        arr = as_polygon(poly)
        xs = arr[:, 0]
        ys = arr[:, 1]
        xe = np.roll(xs, -1)
        ye = np.roll(ys, -1)
        dy = ye - ys
        # (rows, edges) crossing matrix; horizontal edges (dy == 0) never
        # satisfy either half-open test, so the guarded divisor is inert.
        crosses = ((ys <= cy) & (cy < ye)) | ((ye <= cy) & (cy < ys))
        if not crosses.any():
            continue
        t = (cy - ys) / np.where(dy == 0.0, 1.0, dy)
        hits = np.where(crosses, xs + t * (xe - xs), np.inf)
        hits.sort(axis=1)
        n_hits = crosses.sum(axis=1)
        for k in range(0, arr.shape[0] - 1, 2):
            paired = n_hits > k + 1
            if not paired.any():
                break
            span = paired[:, None] & (centers_x >= hits[:, k : k + 1])
            span &= centers_x < hits[:, k + 1 : k + 2]
            mask |= span
    return mask


def largest_inscribed_rect(mask: np.ndarray) -> Rect | None:
    """Maximum-area axis-aligned all-true rectangle in a boolean mask.

    Runs the histogram-of-heights / monotonic-stack algorithm row by row,
    O(H*W) total.  Ties are broken by the smallest (y0, x0) pair; returns
    None for an empty mask.
    """
    m = np.asarray(mask, dtype=bool)
    if m.ndim != 2:
        raise ParameterError("mask must be 2-D")
    height_rows, width = m.shape
    if not m.any():
        return None

    heights = np.zeros(width, dtype=np.int64)
    best = None  # (-area, y0, x0, w, h)
    for row in range(height_rows):
        heights = np.where(m[row], heights + 1, 0)
        # The stack only changes state where the histogram height changes,
        # so run-length compress each row and feed one bar per run.  Pops
        # inside an equal-height run would cover a strict prefix of the run
        # and can never reach the run's own full-width area, so dropping
        # them cannot alter the best rectangle or the tie-break.
        change = np.flatnonzero(heights[1:] != heights[:-1])
        run_starts = [0] + (change + 1).tolist()
        run_heights = heights[run_starts].tolist()
        run_starts.append(width)
        run_heights.append(0)  # sentinel flushes the stack at end of row
        stack: list[tuple[int, int]] = []  # (start column, height)
        push = stack.append
        pop = stack.pop
        for col, h in zip(run_starts, run_heights):
            start = col
            while stack and stack[-1][1] >= h:
                s, sh = pop()
                area = sh * (col - s)
                y0 = row - sh + 1
                cand = (-area, y0, s, col - s, sh)
                if best is None or cand < best:
                    best = cand
                start = s
            if not stack or h > stack[-1][1]:
                push((start, h))

    assert best is not None
    _, y0, x0, w, h = best
    return Rect(x0=x0, y0=y0, w=w, h=h)
