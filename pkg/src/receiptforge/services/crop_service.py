"""
Кадрирование чека: широкий кадр по тепловой карте, затем уточнение
детектором ступенчатых границ (светлая бумага / темный фон) и выравнивание поворотом.
"""
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from ..backends.models import HeatMap
from ..core.base import BaseStage
from ..core.exceptions import DegenerateQuad, EdgeNotFound, NoReceiptRegion
from ..core.settings import CropConfig, DetectionConfig
from ..imaging.geometry import intersect_lines, intersect_same_family
from ..imaging.models import BBox, GrayImage, Point, Quad
from ..imaging.raster import crop, rotate, rotate_corners

QUASI_VERTICAL = "quasi_vertical"
QUASI_HORIZONTAL = "quasi_horizontal"

# сторона границы -> (ориентация, светлая сторона, сканирование с конца)
_EDGE_LAYOUT = {
    "left": (QUASI_VERTICAL, "right", False),
    "right": (QUASI_VERTICAL, "left", True),
    "top": (QUASI_HORIZONTAL, "below", False),
    "bottom": (QUASI_HORIZONTAL, "above", True),
}


@dataclass(frozen=True)
class EdgeLine:
    """
    Граница чека.

    Квази-вертикальная: x = slope·y + offset; квази-горизонтальная: y = slope·x + offset.
    angle - отклонение от номинальной оси в градусах.
    """
    name: str
    orientation: str
    polarity: str
    slope: float
    offset: float
    support: Tuple[Point, ...] = field(repr=False)

    @property
    def angle(self) -> float:
        return math.degrees(math.atan(self.slope))

    @property
    def params(self) -> Tuple[float, float]:
        return self.slope, self.offset

    def to_dict(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "orientation": self.orientation,
            "polarity": self.polarity,
            "angle": round(self.angle, 4),
            "offset": round(self.offset, 3),
            "support": len(self.support),
        }


@dataclass(frozen=True)
class EdgeSet:
    left: EdgeLine
    right: EdgeLine
    top: EdgeLine
    bottom: EdgeLine

    def __iter__(self):
        return iter((self.left, self.right, self.top, self.bottom))


@dataclass(frozen=True, eq=False)
class CropResult:
    wide_box: BBox
    quad: Quad
    rectified: GrayImage
    skew_angle: float
    fallback: bool = False
    fallback_reason: Optional[str] = None

    def to_dict(self) -> Dict[str, object]:
        return {
            "wide_box": self.wide_box.to_dict(),
            "quad": self.quad.to_list(),
            "skew_angle": round(self.skew_angle, 4),
            "fallback": self.fallback,
            "fallback_reason": self.fallback_reason,
            "rectified_size": [self.rectified.width, self.rectified.height],
        }


def box_quad(box: BBox) -> Quad:
    return Quad((
        (float(box.x), float(box.y)),
        (float(box.x2), float(box.y)),
        (float(box.x2), float(box.y2)),
        (float(box.x), float(box.y2)),
    ))


def wide_crop(
    heatmap: HeatMap,
    image_size: Tuple[int, int],
    config: Optional[DetectionConfig] = None,
    margin: float = 0.05,
) -> BBox:
    """
    Объединение окон всех положительных ячеек, расширенное на margin
    от каждого размера и обрезанное по изображению (image_size = (width, height)).
    """
    config = config or DetectionConfig()
    cells = heatmap.positive_cells(config.target_class, config.heat_threshold)
    if not cells:
        raise NoReceiptRegion()
    box = heatmap.cell_rect(*cells[0])
    for i, j in cells[1:]:
        box = box.union(heatmap.cell_rect(i, j))
    dx = int(round(margin * box.w))
    dy = int(round(margin * box.h))
    grown = BBox.from_corners(box.x - dx, box.y - dy, box.x2 + dx, box.y2 + dy)
    return grown.clamp(*image_size)


def _step_response(strips: np.ndarray, width: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Двусторонний фильтр средних по строкам strips.

    Возвращает позиции границ k (между пикселями k-1 и k) и
    разность mean(strip[k:k+w]) - mean(strip[k-w:k]).
    """
    n = strips.shape[1]
    csum = np.cumsum(np.pad(strips, ((0, 0), (1, 0))), axis=1)
    k = np.arange(width, n - width + 1)
    before = (csum[:, k] - csum[:, k - width]) / width
    after = (csum[:, k + width] - csum[:, k]) / width
    return k, after - before


def _outermost_peaks(
    positions: np.ndarray,
    response: np.ndarray,
    contrast: float,
    from_end: bool,
) -> Tuple[np.ndarray, np.ndarray]:
    """Первый со стороны фона локальный максимум выше contrast на каждой строке"""
    if response.shape[1] == 0:
        return np.empty(0, dtype=int), np.empty(0)
    pad = np.full((response.shape[0], 1), -np.inf)
    left = np.concatenate([pad, response[:, :-1]], axis=1)
    right = np.concatenate([response[:, 1:], pad], axis=1)
    peaks = (response > contrast) & (response >= left) & (response > right)

    rows = np.nonzero(peaks.any(axis=1))[0]
    if from_end:
        cols = response.shape[1] - 1 - np.argmax(peaks[rows, ::-1], axis=1)
    else:
        cols = np.argmax(peaks[rows], axis=1)

    # субпиксельное уточнение параболой по трем отсчетам
    last = response.shape[1] - 1
    y0 = response[rows, np.maximum(cols - 1, 0)]
    y1 = response[rows, cols]
    y2 = response[rows, np.minimum(cols + 1, last)]
    denom = y0 - 2.0 * y1 + y2
    with np.errstate(invalid="ignore", divide="ignore"):
        shift = np.where(np.abs(denom) > 1e-9, 0.5 * (y0 - y2) / denom, 0.0)
    shift = np.clip(shift, -0.5, 0.5)
    return rows, positions[cols] + shift


def fit_line(
    along: np.ndarray,
    across: np.ndarray,
    rounds: int = 2,
    residual_floor: float = 1.0,
) -> Tuple[float, float, np.ndarray]:
    """
    МНК across = slope·along + offset с отбрасыванием выбросов:
    точки с остатком > 2·медианы остатков удаляются, прямая пересчитывается.
    """
    keep = np.ones(along.shape[0], dtype=bool)
    slope, offset = np.polyfit(along, across, 1)
    for _ in range(rounds):
        residual = np.abs(across - (slope * along + offset))
        limit = max(2.0 * float(np.median(residual[keep])), residual_floor)
        new_keep = keep & (residual <= limit)
        if new_keep.sum() < 2 or np.array_equal(new_keep, keep):
            break
        keep = new_keep
        slope, offset = np.polyfit(along[keep], across[keep], 1)
    return float(slope), float(offset), keep


def _detect_edge(pixels: np.ndarray, search: BBox, name: str, config: CropConfig) -> EdgeLine:
    orientation, polarity, from_end = _EDGE_LAYOUT[name]
    region = pixels[search.y:search.y2, search.x:search.x2]
    strips = region if orientation == QUASI_VERTICAL else region.T
    positions, response = _step_response(strips, config.strip_width)
    if from_end:
        response = -response
    lines, across = _outermost_peaks(positions, response, config.contrast, from_end)

    if lines.size < config.min_support:
        raise EdgeNotFound(name, int(lines.size))
    if orientation == QUASI_VERTICAL:
        along, across = lines + search.y + 0.5, across + search.x
    else:
        along, across = lines + search.x + 0.5, across + search.y
    slope, offset, keep = fit_line(
        along.astype(np.float64), across, config.outlier_rounds, config.residual_floor
    )
    inliers = int(keep.sum())
    if inliers < config.min_support:
        raise EdgeNotFound(name, inliers)
    if abs(math.degrees(math.atan(slope))) > config.quasi_angle:
        raise EdgeNotFound(name, inliers)

    if orientation == QUASI_VERTICAL:
        support = tuple(zip(across[keep].tolist(), along[keep].tolist()))
    else:
        support = tuple(zip(along[keep].tolist(), across[keep].tolist()))
    return EdgeLine(name, orientation, polarity, slope, offset, support)


def detect_receipt_edges(
    image: GrayImage,
    search: BBox,
    config: Optional[CropConfig] = None,
) -> EdgeSet:
    """Четыре границы чека внутри search (координаты изображения)"""
    config = config or CropConfig()
    search = search.clamp(image.width, image.height)
    pixels = image.as_float()
    edges = {name: _detect_edge(pixels, search, name, config) for name in _EDGE_LAYOUT}
    return EdgeSet(**edges)


def _check_corner(point: Optional[Point], image: GrayImage, factor: float) -> Point:
    if point is None:
        raise DegenerateQuad("Receipt edges are parallel, corner is undefined")
    slack_x = (factor - 1.0) / 2.0 * image.width
    slack_y = (factor - 1.0) / 2.0 * image.height
    x, y = point
    if not (-slack_x <= x <= image.width + slack_x and -slack_y <= y <= image.height + slack_y):
        raise DegenerateQuad(f"Corner ({x:.1f}, {y:.1f}) lies outside {factor}x image bounds")
    return point


def _snap(value: float, eps: float = 1e-6) -> float:
    nearest = round(value)
    return float(nearest) if abs(value - nearest) < eps else value


def inner_box(corners, inset: int = 0) -> BBox:
    """
    Наибольший осевой прямоугольник внутри почти прямоугольного четырехугольника
    (TL, TR, BR, BL), уменьшенный на inset пикселей с каждой стороны.
    Краевые пиксели с примесью фона в него не попадают.
    """
    (tlx, tly), (trx, try_), (brx, bry), (blx, bly) = corners
    x1 = math.ceil(_snap(max(tlx, blx))) + inset
    y1 = math.ceil(_snap(max(tly, try_))) + inset
    x2 = math.floor(_snap(min(trx, brx))) - inset
    y2 = math.floor(_snap(min(bly, bry))) - inset
    if x2 <= x1 or y2 <= y1:
        return Quad(tuple(corners)).bbox()
    return BBox.from_corners(x1, y1, x2, y2)


def rectify(
    image: GrayImage,
    edges: EdgeSet,
    wide_box: Optional[BBox] = None,
    config: Optional[CropConfig] = None,
) -> CropResult:
    """
    Углы - попарные пересечения границ (TL, TR, BR, BL), прижатые к wide_box;
    изображение поворачивается на -skew и обрезается по рамке повернутого четырехугольника.
    """
    config = config or CropConfig()
    factor = config.bounds_factor
    for first, second in ((edges.left, edges.right), (edges.top, edges.bottom)):
        meet = intersect_same_family(first.params, second.params)
        extent = image.height if first.orientation == QUASI_VERTICAL else image.width
        if meet is not None and 0.0 <= meet <= extent:
            raise DegenerateQuad(f"Edges '{first.name}' and '{second.name}' cross inside the image")

    corners = (
        _check_corner(intersect_lines(edges.left.params, edges.top.params), image, factor),
        _check_corner(intersect_lines(edges.right.params, edges.top.params), image, factor),
        _check_corner(intersect_lines(edges.right.params, edges.bottom.params), image, factor),
        _check_corner(intersect_lines(edges.left.params, edges.bottom.params), image, factor),
    )
    quad = Quad(corners)
    if not quad.is_simple():
        raise DegenerateQuad("Receipt quadrilateral is self-intersecting or empty")
    wide = (wide_box or BBox(0, 0, image.width, image.height)).clamp(image.width, image.height)
    quad = quad.clamp(wide)
    if not quad.is_simple():
        raise DegenerateQuad("Receipt quadrilateral collapses inside the wide box")

    skew = (edges.left.angle + edges.right.angle) / 2.0
    if abs(skew) < 1e-6:
        skew = 0.0
    rotated = rotate(image, -skew)
    mapped = rotate_corners(quad.corners, -skew, image.shape)
    rectified = crop(rotated, inner_box(mapped, config.inset))
    return CropResult(wide_box=wide, quad=quad, rectified=rectified, skew_angle=skew)


def fallback_crop(image: GrayImage, wide_box: BBox, reason: str) -> CropResult:
    """Широкий кадр без поворота, когда уточнение невозможно"""
    wide_box = wide_box.clamp(image.width, image.height)
    return CropResult(
        wide_box=wide_box,
        quad=box_quad(wide_box),
        rectified=crop(image, wide_box),
        skew_angle=0.0,
        fallback=True,
        fallback_reason=reason,
    )


class CropService(BaseStage):
    """Шаг 2: широкий кадр, уточненный кадр, запасной вариант"""

    stage_name = "crop"

    def __init__(
        self,
        config: Optional[CropConfig] = None,
        detection: Optional[DetectionConfig] = None,
        logger=None,
    ):
        super().__init__(logger)
        self.config = config or CropConfig()
        self.detection = detection or DetectionConfig()

    def wide_box(self, image: GrayImage, heatmap: Optional[HeatMap]) -> Tuple[BBox, Optional[str]]:
        """Широкий кадр; без положительных ячеек - все изображение и код причины"""
        whole = BBox(0, 0, image.width, image.height)
        if heatmap is None:
            return whole, None
        try:
            box = wide_crop(heatmap, (image.width, image.height), self.detection, self.config.margin)
            return box, None
        except NoReceiptRegion as e:
            return whole, e.error_code

    def refine(
        self,
        image: GrayImage,
        wide_box: BBox,
        sample_id: Optional[str] = None,
    ) -> CropResult:
        """Уточнение внутри wide_box; при неудаче - сам wide_box"""
        try:
            edges = detect_receipt_edges(image, wide_box, self.config)
            return rectify(image, edges, wide_box, self.config)
        except (EdgeNotFound, DegenerateQuad) as e:
            self.logger.info(
                f"Refined crop failed, using wide crop: {e.message}",
                extra={'stage': self.stage_name, 'sample_id': sample_id or '-',
                       'error_type': type(e).__name__},
            )
            return fallback_crop(image, wide_box, e.error_code)

    def crop(
        self,
        image: GrayImage,
        heatmap: Optional[HeatMap],
        sample_id: Optional[str] = None,
    ) -> CropResult:
        """Границы ищутся только внутри широкого кадра (в нем уже есть поле margin)"""
        with self.timed("crop", sample_id):
            wide, reason = self.wide_box(image, heatmap)
            if reason:
                self.logger.info(
                    "No positive heat map cell, searching edges over the whole image",
                    extra={'stage': self.stage_name, 'sample_id': sample_id or '-'},
                )
            return self.refine(image, wide, sample_id)

    def edge_only(self, image: GrayImage, sample_id: Optional[str] = None) -> CropResult:
        """Уточнение по всему изображению, без тепловой карты"""
        whole = BBox(0, 0, image.width, image.height)
        return self.refine(image, whole, sample_id)
