"""
Pixel operations used by the pipeline stages
"""
import math
from typing import Iterable, List, Tuple

import numpy as np
from PIL import Image
from scipy import ndimage

from ..core.exceptions import DecodeError, InvalidAngle
from .models import BBox, GrayImage, Point

MAX_ROTATION = 45.0

# Rec.601 luma
_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)


def to_luminance(raw: np.ndarray) -> GrayImage:
    """Convert a decoded raster (H×W, H×W×3 or H×W×4) to 8-bit luminance"""
    array = np.asarray(raw)
    if array.ndim == 2:
        return GrayImage(np.clip(np.rint(array.astype(np.float64)), 0, 255).astype(np.uint8))
    if array.ndim != 3 or array.shape[2] not in (3, 4):
        raise DecodeError(f"Unsupported raster shape {array.shape}")
    rgb = array[..., :3].astype(np.float64)
    luma = rgb @ _LUMA
    return GrayImage(np.clip(np.rint(luma), 0, 255).astype(np.uint8))


def _rotated_size(width: int, height: int, angle: float) -> Tuple[int, int]:
    rad = math.radians(angle)
    c, s = abs(math.cos(rad)), abs(math.sin(rad))
    new_w = int(math.ceil(width * c + height * s - 1e-6))
    new_h = int(math.ceil(width * s + height * c - 1e-6))
    return max(new_w, 1), max(new_h, 1)


def _check_angle(angle: float) -> None:
    if abs(angle) > MAX_ROTATION:
        raise InvalidAngle(angle=angle, limit=MAX_ROTATION)


def rotate(img: GrayImage, angle: float, fill: int = 255) -> GrayImage:
    """
    Rotate around the image center, counter-clockwise as displayed for angle > 0.

    Bilinear resampling; the output is enlarged to hold the whole rotated frame
    and samples falling outside the source take `fill`.
    """
    _check_angle(angle)
    if angle == 0:
        return img

    rad = math.radians(angle)
    c, s = math.cos(rad), math.sin(rad)
    new_w, new_h = _rotated_size(img.width, img.height, angle)

    # output (row, col) -> source (row, col)
    matrix = np.array([[c, s], [-s, c]])
    src_center = np.array([(img.height - 1) / 2.0, (img.width - 1) / 2.0])
    dst_center = np.array([(new_h - 1) / 2.0, (new_w - 1) / 2.0])
    offset = src_center - matrix @ dst_center

    out = ndimage.affine_transform(
        img.as_float(),
        matrix,
        offset=offset,
        output_shape=(new_h, new_w),
        order=1,
        mode="constant",
        cval=float(fill),
        prefilter=False,
    )
    return GrayImage(np.clip(np.rint(out), 0, 255).astype(np.uint8))


def rotate_points(
    points: Iterable[Point],
    angle: float,
    shape: Tuple[int, int],
) -> List[Point]:
    """
    Map pixel-center coordinates through `rotate(img, angle)` for an image of `shape` (h, w).
    """
    _check_angle(angle)
    height, width = shape
    rad = math.radians(angle)
    c, s = math.cos(rad), math.sin(rad)
    new_w, new_h = _rotated_size(width, height, angle) if angle != 0 else (width, height)
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    ncx, ncy = (new_w - 1) / 2.0, (new_h - 1) / 2.0
    mapped = []
    for x, y in points:
        dx, dy = x - cx, y - cy
        mapped.append((ncx + c * dx + s * dy, ncy - s * dx + c * dy))
    return mapped


def rotated_shape(shape: Tuple[int, int], angle: float) -> Tuple[int, int]:
    """(h, w) of `rotate` output for an image of `shape`"""
    if angle == 0:
        return shape
    new_w, new_h = _rotated_size(shape[1], shape[0], angle)
    return new_h, new_w


def crop(img: GrayImage, box: BBox) -> GrayImage:
    """Cut `box` out of the image after clamping it to the raster"""
    box = box.clamp(img.width, img.height)
    return GrayImage(img.pixels[box.y:box.y2, box.x:box.x2])


def resize(img: GrayImage, width: int, height: int) -> GrayImage:
    """Bilinear resize to width × height"""
    width, height = max(int(width), 1), max(int(height), 1)
    if (width, height) == (img.width, img.height):
        return img
    pil = Image.fromarray(np.ascontiguousarray(img.pixels))
    return GrayImage(np.asarray(pil.resize((width, height), Image.Resampling.BILINEAR)))


def flip180(img: GrayImage) -> GrayImage:
    return GrayImage(img.pixels[::-1, ::-1])


def pad_to(img: GrayImage, width: int, height: int, fill: int = 255) -> GrayImage:
    """Pad right/bottom so the image is at least width × height"""
    pad_w = max(0, width - img.width)
    pad_h = max(0, height - img.height)
    if pad_w == 0 and pad_h == 0:
        return img
    padded = np.pad(
        img.pixels, ((0, pad_h), (0, pad_w)), mode="constant", constant_values=fill
    )
    return GrayImage(padded)


def pad_border(img: GrayImage, border: int, fill: int) -> GrayImage:
    """Surround the image with a constant border"""
    if border <= 0:
        return img
    return GrayImage(
        np.pad(img.pixels, border, mode="constant", constant_values=fill)
    )


def rotate_corners(
    corners: Iterable[Point],
    angle: float,
    shape: Tuple[int, int],
) -> List[Point]:
    """
    Same mapping as `rotate_points` for continuous coordinates,
    where pixel (i, j) spans [j, j+1) x [i, i+1).
    """
    shifted = [(x - 0.5, y - 0.5) for x, y in corners]
    return [(x + 0.5, y + 0.5) for x, y in rotate_points(shifted, angle, shape)]
