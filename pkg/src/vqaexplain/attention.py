"""Attention heatmaps and the attention mass inside a bounding box.

The VQA model produces a coarse grid (7x7 for a ResNet backbone) that is
resized to the image. Here the grid is bilinearly upsampled with cell centres
aligned to pixel-space cell centres, then normalized to total mass 1, so the
mass inside a box is a dimensionless fraction of the model's attention.
A pixel belongs to a box when its centre lies in the half-open box.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ParseError, SchemaError, ValidationError
from .scene_graph import BoundingBox

logger = logging.getLogger(__name__)

__all__ = ["AttentionMap", "parse_attention", "load_attention", "upsample", "attention_mass"]


def _interp_matrix(n_out: int, n_in: int) -> np.ndarray:
    """Rows are bilinear weights mapping ``n_in`` cell values to ``n_out`` pixels."""
    # pixel centre (p + 0.5) in grid units, shifted so cell centres sit on integers
    pos = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    pos = np.clip(pos, 0.0, n_in - 1)
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = pos - lo
    m = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    np.add.at(m, (rows, lo), 1.0 - frac)
    np.add.at(m, (rows, hi), frac)
    return m


@dataclass(frozen=True, eq=False)
class AttentionMap:
    """A nonnegative ``grid_rows x grid_cols`` heatmap over an image."""

    values: np.ndarray
    image_width: int
    image_height: int

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise SchemaError("attention grid must be a non-empty 2-D array", field="grid")
        if not np.all(np.isfinite(values)):
            raise ValidationError("attention grid contains non-finite values")
        if np.any(values < 0):
            raise ValidationError("attention grid contains negative values")
        if not np.any(values > 0):
            raise ValidationError("degenerate attention: every grid value is zero")
        for name in ("image_width", "image_height"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ValidationError(f"{name} must be a positive integer, got {v!r}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if not self.dense.sum() > 0:
            raise ValidationError(
                f"degenerate attention: no mass survives resampling to "
                f"{self.image_width}x{self.image_height}")

    @property
    def grid_rows(self) -> int:
        return self.values.shape[0]

    @property
    def grid_cols(self) -> int:
        return self.values.shape[1]

    @cached_property
    def dense(self) -> np.ndarray:
        """Upsampled map of shape ``(image_height, image_width)`` summing to 1."""
        wy = _interp_matrix(self.image_height, self.grid_rows)
        wx = _interp_matrix(self.image_width, self.grid_cols)
        dense = wy @ self.values @ wx.T
        total = dense.sum()
        if total > 0:
            dense /= total
        dense.setflags(write=False)
        return dense

    def mass(self, bbox: BoundingBox) -> float:
        return attention_mass(self, bbox)


def _pixel_span(start: float, length: float, limit: int) -> tuple[int, int]:
    # pixels p with start <= p + 0.5 < start + length
    lo = math.ceil(start - 0.5)
    hi = math.ceil(start + length - 0.5)
    return max(lo, 0), min(hi, limit)


def upsample(amap: AttentionMap) -> np.ndarray:
    """Dense ``(image_height, image_width)`` attention map normalized to sum 1."""
    return amap.dense


def attention_mass(amap: AttentionMap, bbox: BoundingBox) -> float:
    """Fraction of the normalized attention whose pixel centres fall inside ``bbox``."""
    c0, c1 = _pixel_span(bbox.x, bbox.w, amap.image_width)
    r0, r1 = _pixel_span(bbox.y, bbox.h, amap.image_height)
    if c1 <= c0 or r1 <= r0:
        logger.warning("bounding box %s covers no pixel centre of the %dx%d image",
                       bbox, amap.image_width, amap.image_height)
        return 0.0
    return float(amap.dense[r0:r1, c0:c1].sum())


def attention_from_dict(doc) -> AttentionMap:
    if not isinstance(doc, dict):
        raise SchemaError("attention document must be a JSON object")
    if "grid" not in doc:
        raise SchemaError("missing required field grid", field="grid")
    if "image" not in doc:
        raise SchemaError("missing required field image", field="image")
    grid = doc["grid"]
    if not isinstance(grid, list) or not grid or not all(isinstance(r, list) for r in grid):
        raise SchemaError("grid must be a non-empty list of rows", field="grid")
    widths = {len(r) for r in grid}
    if len(widths) != 1:
        raise SchemaError(f"ragged attention grid: row lengths {sorted(widths)}", field="grid")
    for r in grid:
        for v in r:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise SchemaError(f"grid values must be numbers, got {v!r}", field="grid")
    image = doc["image"]
    if not isinstance(image, dict) or "width" not in image or "height" not in image:
        raise SchemaError("image must carry width and height", field="image")
    return AttentionMap(np.array(grid, dtype=float), image["width"], image["height"])


def parse_attention(json_text: str) -> AttentionMap:
    """Parse ``{"grid": [[...], ...], "image": {"width": W, "height": H}}``."""
    try:
        doc = json.loads(json_text)
    except json.JSONDecodeError as exc:
        offset = len(json_text[:exc.pos].encode("utf-8"))
        raise ParseError(f"malformed attention JSON: {exc.msg}", offset) from None
    return attention_from_dict(doc)


def load_attention(path) -> AttentionMap:
    with open(path, encoding="utf-8") as fh:
        return parse_attention(fh.read())
