"""Polygon annotation documents and mask rasterization.

Annotation documents are JSON with the field names used by the common
polygon labeling tools::

    {"imagePath": ..., "imageHeight": H, "imageWidth": W,
     "shapes": [{"label": ..., "points": [[x, y], ...], "shape_type": "polygon"}]}

Rasterization uses the pixel-center convention: pixel (r, c) is foreground
iff the point (c + 0.5, r + 0.5) lies strictly inside any polygon carrying
the requested label (union semantics, not even-odd across shapes).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


class AnnotationError(ValueError):
    """Malformed or out-of-contract annotation document."""


@dataclass(frozen=True)
class PolygonShape:
    label: str
    points: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class PolygonAnnotation:
    image_path: str
    image_height: int
    image_width: int
    shapes: tuple[PolygonShape, ...] = field(default_factory=tuple)

    def labels(self) -> set[str]:
        return {s.label for s in self.shapes}


_REQUIRED_FIELDS = ("imagePath", "imageHeight", "imageWidth", "shapes")


def parse_annotation(text: str) -> PolygonAnnotation:
    """Parse and validate an annotation document.

    Raises AnnotationError naming the missing field for malformed documents,
    and for polygons with fewer than 3 vertices or vertices outside the
    declared image size.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AnnotationError(f"annotation is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise AnnotationError("annotation root must be an object")
    for name in _REQUIRED_FIELDS:
        if name not in doc:
            raise AnnotationError(f"annotation missing field '{name}'")
    height, width = doc["imageHeight"], doc["imageWidth"]
    if not isinstance(height, int) or not isinstance(width, int) or height <= 0 or width <= 0:
        raise AnnotationError("imageHeight/imageWidth must be positive integers")

    shapes = []
    for i, raw in enumerate(doc["shapes"]):
        for name in ("label", "points"):
            if name not in raw:
                raise AnnotationError(f"shape {i} missing field '{name}'")
        points = raw["points"]
        if len(points) < 3:
            raise AnnotationError(f"shape {i} ('{raw['label']}') has {len(points)} vertices; polygons need at least 3")
        for x, y in points:
            if not (0 <= x <= width and 0 <= y <= height):
                raise AnnotationError(
                    f"shape {i} ('{raw['label']}') vertex ({x}, {y}) outside image bounds {width}x{height}"
                )
        shapes.append(PolygonShape(label=str(raw["label"]), points=tuple((float(x), float(y)) for x, y in points)))
    return PolygonAnnotation(
        image_path=str(doc["imagePath"]),
        image_height=height,
        image_width=width,
        shapes=tuple(shapes),
    )


def serialize_annotation(ann: PolygonAnnotation) -> str:
    doc = {
        "imagePath": ann.image_path,
        "imageHeight": ann.image_height,
        "imageWidth": ann.image_width,
        "shapes": [
            {"label": s.label, "points": [[x, y] for x, y in s.points], "shape_type": "polygon"}
            for s in ann.shapes
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def _points_in_polygon(px: np.ndarray, py: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Vectorized strictly-inside test for a single simple polygon.

    px, py are flat arrays of query coordinates; poly is (N, 2). Ray casting
    gives the parity; points exactly on an edge are excluded afterwards so
    the result is "strictly inside".
    """
    inside = np.zeros(px.shape, dtype=bool)
    on_edge = np.zeros(px.shape, dtype=bool)
    x0, y0 = poly[:, 0], poly[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    for ax, ay, bx, by in zip(x0, y0, x1, y1):
        crosses = (ay > py) != (by > py)
        if crosses.any():
            # x coordinate where the edge crosses the horizontal line through py
            t = (py - ay) / (by - ay)
            xi = ax + t * (bx - ax)
            inside ^= crosses & (px < xi)
        ex, ey = bx - ax, by - ay
        seg_sq = ex * ex + ey * ey
        if seg_sq == 0:
            continue
        cross = ex * (py - ay) - ey * (px - ax)
        dot = ex * (px - ax) + ey * (py - ay)
        scale = max(abs(ax), abs(ay), abs(bx), abs(by), 1.0)
        on_edge |= (np.abs(cross) <= 1e-9 * scale) & (dot >= 0) & (dot <= seg_sq)
    return inside & ~on_edge


def rasterize_mask(ann: PolygonAnnotation, label: str) -> np.ndarray:
    """Rasterize the union of all polygons with the given label to a binary mask."""
    h, w = ann.image_height, ann.image_width
    mask = np.zeros((h, w), dtype=bool)
    selected = [s for s in ann.shapes if s.label == label]
    if not selected:
        return mask.astype(np.float32)
    cols, rows = np.meshgrid(np.arange(w), np.arange(h))
    px = cols.ravel() + 0.5
    py = rows.ravel() + 0.5
    for shape in selected:
        poly = np.asarray(shape.points, dtype=np.float64)
        mask |= _points_in_polygon(px, py, poly).reshape(h, w)
    return mask.astype(np.float32)
