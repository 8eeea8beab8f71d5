"""
Raster and geometry value types shared by every stage
"""
from dataclasses import dataclass
from typing import Dict, Iterator, List, Tuple

import numpy as np

from ..core.exceptions import InvalidGeometry, ValidationError

Point = Tuple[float, float]


def _frozen_array(values: np.ndarray, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit luminance raster, row-major (height, width)"""

    pixels: np.ndarray

    def __post_init__(self):
        array = np.asarray(self.pixels)
        if array.ndim != 2:
            raise ValidationError(f"GrayImage expects a 2-D raster, got shape {array.shape}", field="pixels")
        if array.shape[0] == 0 or array.shape[1] == 0:
            raise ValidationError("GrayImage must have positive width and height", field="pixels")
        if array.dtype != np.uint8:
            array = np.clip(np.rint(array), 0, 255).astype(np.uint8)
        object.__setattr__(self, "pixels", _frozen_array(array, np.uint8))

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.pixels.shape  # type: ignore[return-value]

    def as_float(self) -> np.ndarray:
        return self.pixels.astype(np.float64)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    def __hash__(self) -> int:
        return hash((self.pixels.shape, self.pixels.tobytes()))


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Thresholded raster, True = positive/ink"""

    bits: np.ndarray

    def __post_init__(self):
        array = np.asarray(self.bits)
        if array.ndim != 2:
            raise ValidationError(f"BinaryMask expects a 2-D raster, got shape {array.shape}", field="bits")
        object.__setattr__(self, "bits", _frozen_array(array.astype(bool), bool))

    @property
    def width(self) -> int:
        return int(self.bits.shape[1])

    @property
    def height(self) -> int:
        return int(self.bits.shape[0])

    def count(self) -> int:
        return int(self.bits.sum())

    def flip180(self) -> "BinaryMask":
        return BinaryMask(self.bits[::-1, ::-1])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return bool(np.array_equal(self.bits, other.bits))

    def __hash__(self) -> int:
        return hash((self.bits.shape, self.bits.tobytes()))


@dataclass(frozen=True, order=True)
class BBox:
    """Axis-aligned box: top-left (x, y), size (w, h) in pixels"""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise InvalidGeometry(
                f"Box must have positive size, got w={self.w}, h={self.h}",
                box=(self.x, self.y, self.w, self.h),
            )

    @classmethod
    def from_corners(cls, x1: int, y1: int, x2: int, y2: int) -> "BBox":
        """Box spanning [x1, x2) × [y1, y2)"""
        return cls(int(x1), int(y1), int(x2 - x1), int(y2 - y1))

    @property
    def x2(self) -> int:
        return self.x + self.w

    @property
    def y2(self) -> int:
        return self.y + self.h

    @property
    def area(self) -> int:
        return self.w * self.h

    def clamp(self, width: int, height: int) -> "BBox":
        """Clip the box to a width × height raster"""
        x1 = min(max(self.x, 0), width - 1)
        y1 = min(max(self.y, 0), height - 1)
        x2 = max(min(self.x2, width), x1 + 1)
        y2 = max(min(self.y2, height), y1 + 1)
        return BBox.from_corners(x1, y1, x2, y2)

    def union(self, other: "BBox") -> "BBox":
        return BBox.from_corners(
            min(self.x, other.x), min(self.y, other.y),
            max(self.x2, other.x2), max(self.y2, other.y2),
        )

    def contains(self, other: "BBox") -> bool:
        return (
            self.x <= other.x and self.y <= other.y
            and other.x2 <= self.x2 and other.y2 <= self.y2
        )

    def intersection_area(self, other: "BBox") -> int:
        ix = max(0, min(self.x2, other.x2) - max(self.x, other.x))
        iy = max(0, min(self.y2, other.y2) - max(self.y, other.y))
        return ix * iy

    def to_dict(self) -> Dict[str, int]:
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h}

    @classmethod
    def from_dict(cls, data: Dict[str, int]) -> "BBox":
        return cls(int(data["x"]), int(data["y"]), int(data["w"]), int(data["h"]))


def _cross(o: Point, a: Point, b: Point) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool:
    d1 = _cross(q1, q2, p1)
    d2 = _cross(q1, q2, p2)
    d3 = _cross(p1, p2, q1)
    d4 = _cross(p1, p2, q2)
    return d1 * d2 < 0 and d3 * d4 < 0


@dataclass(frozen=True)
class Quad:
    """Four corners in order top-left, top-right, bottom-right, bottom-left"""

    corners: Tuple[Point, Point, Point, Point]

    def __post_init__(self):
        if len(self.corners) != 4:
            raise InvalidGeometry("Quad needs exactly 4 corners")
        object.__setattr__(
            self, "corners", tuple((float(x), float(y)) for x, y in self.corners)
        )

    def __iter__(self) -> Iterator[Point]:
        return iter(self.corners)

    @property
    def area(self) -> float:
        """Shoelace area (absolute)"""
        total = 0.0
        for k in range(4):
            x1, y1 = self.corners[k]
            x2, y2 = self.corners[(k + 1) % 4]
            total += x1 * y2 - x2 * y1
        return abs(total) / 2.0

    def is_simple(self) -> bool:
        """No self-intersection and positive area"""
        c = self.corners
        if self.area <= 0.0:
            return False
        # only opposite sides can cross in a quadrilateral
        if _segments_intersect(c[0], c[1], c[2], c[3]):
            return False
        if _segments_intersect(c[1], c[2], c[3], c[0]):
            return False
        return True

    def bbox(self) -> BBox:
        xs = [p[0] for p in self.corners]
        ys = [p[1] for p in self.corners]
        x1, y1 = int(np.floor(min(xs))), int(np.floor(min(ys)))
        x2, y2 = int(np.ceil(max(xs))), int(np.ceil(max(ys)))
        return BBox.from_corners(x1, y1, max(x2, x1 + 1), max(y2, y1 + 1))

    def clamp(self, box: BBox) -> "Quad":
        """Corners clipped into box; bbox() of the result lies inside box"""
        return Quad(tuple(
            (min(max(x, float(box.x)), float(box.x2)), min(max(y, float(box.y)), float(box.y2)))
            for x, y in self.corners
        ))

    def to_list(self) -> List[List[float]]:
        return [[round(x, 3), round(y, 3)] for x, y in self.corners]
