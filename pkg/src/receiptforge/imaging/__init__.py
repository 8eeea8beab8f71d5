"""
Растровые и геометрические примитивы
"""
from .codecs import load_image, save_pgm
from .geometry import intersect_lines, iou
from .models import BBox, BinaryMask, GrayImage, Point, Quad
from .raster import (
    crop,
    flip180,
    pad_border,
    pad_to,
    resize,
    rotate,
    rotate_corners,
    rotate_points,
    rotated_shape,
    to_luminance,
)

__all__ = [
    "BBox",
    "BinaryMask",
    "GrayImage",
    "Point",
    "Quad",
    "crop",
    "flip180",
    "intersect_lines",
    "iou",
    "load_image",
    "pad_border",
    "pad_to",
    "resize",
    "rotate",
    "rotate_corners",
    "rotate_points",
    "rotated_shape",
    "save_pgm",
    "to_luminance",
]
