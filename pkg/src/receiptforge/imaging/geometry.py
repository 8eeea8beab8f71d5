"""
Box metrics and line geometry
"""
from typing import Optional, Tuple

from ..core.exceptions import InvalidGeometry
from .models import BBox, Point


def _check(box: BBox) -> None:
    if box.w <= 0 or box.h <= 0:
        raise InvalidGeometry(f"Degenerate box {box}", box=(box.x, box.y, box.w, box.h))


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union on real-valued rectangles"""
    _check(a)
    _check(b)
    ix = max(0.0, float(min(a.x + a.w, b.x + b.w) - max(a.x, b.x)))
    iy = max(0.0, float(min(a.y + a.h, b.y + b.h) - max(a.y, b.y)))
    inter = ix * iy
    union = float(a.w) * a.h + float(b.w) * b.h - inter
    return inter / union if union > 0 else 0.0


def intersect_lines(
    vertical: Tuple[float, float],
    horizontal: Tuple[float, float],
    eps: float = 1e-9,
) -> Optional[Point]:
    """
    Cross a quasi-vertical line x = a·y + b with a quasi-horizontal one y = c·x + d.

    Returns None when the lines are parallel.
    """
    a, b = vertical
    c, d = horizontal
    det = 1.0 - a * c
    if abs(det) < eps:
        return None
    x = (a * d + b) / det
    y = c * x + d
    return (x, y)


def intersect_same_family(
    first: Tuple[float, float],
    second: Tuple[float, float],
    eps: float = 1e-9,
) -> Optional[float]:
    """Parameter (y for vertical lines, x for horizontal) where two lines of one family meet"""
    a1, b1 = first
    a2, b2 = second
    if abs(a1 - a2) < eps:
        return None
    return (b2 - b1) / (a1 - a2)
