"""
Разметка чека: адаптивная бинаризация (Sauvola) и сегментация проекциями

Иерархия: полосы на всю ширину чека -> подблоки (метка / цена) -> строки текста.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.base import BaseStage
from ..core.settings import BinarizeParams, LayoutConfig
from ..imaging.models import BBox, BinaryMask, GrayImage

BAND = "band"
SUBBLOCK = "subblock"
LINE = "line"

Interval = Tuple[int, int]  # включительные границы [start, end]


@dataclass(frozen=True)
class TextBlock:
    box: BBox
    kind: str
    parent: Optional[int] = None

    def to_dict(self) -> Dict[str, object]:
        return {"kind": self.kind, "parent": self.parent, **self.box.to_dict()}


@dataclass(frozen=True)
class LayoutHierarchy:
    """Полосы, подблоки и строки; parent - индекс в списке уровня выше"""
    width: int
    height: int
    line_height: float
    bands: Tuple[TextBlock, ...]
    subblocks: Tuple[TextBlock, ...]
    lines: Tuple[TextBlock, ...]

    def lines_of(self, subblock_index: int) -> List[Tuple[int, TextBlock]]:
        return [(i, line) for i, line in enumerate(self.lines) if line.parent == subblock_index]

    def to_dict(self) -> Dict[str, object]:
        return {
            "width": self.width,
            "height": self.height,
            "line_height": round(self.line_height, 3),
            "bands": [block.to_dict() for block in self.bands],
            "subblocks": [block.to_dict() for block in self.subblocks],
            "lines": [block.to_dict() for block in self.lines],
        }


def _window_sums(values: np.ndarray, half: int) -> Tuple[np.ndarray, np.ndarray]:
    """Суммы по окну (2·half+1)² через интегральное изображение; окна у края обрезаются"""
    height, width = values.shape
    integral = np.zeros((height + 1, width + 1), dtype=np.int64)
    integral[1:, 1:] = values.cumsum(axis=0).cumsum(axis=1)
    rows = np.arange(height)
    cols = np.arange(width)
    y0 = np.clip(rows - half, 0, height)
    y1 = np.clip(rows + half + 1, 0, height)
    x0 = np.clip(cols - half, 0, width)
    x1 = np.clip(cols + half + 1, 0, width)
    sums = (
        integral[np.ix_(y1, x1)] - integral[np.ix_(y0, x1)]
        - integral[np.ix_(y1, x0)] + integral[np.ix_(y0, x0)]
    )
    counts = np.outer(y1 - y0, x1 - x0)
    return sums, counts


def adaptive_binarize(image: GrayImage, params: Optional[BinarizeParams] = None) -> BinaryMask:
    """Sauvola: чернила, если v < m·(1 + k·(s/R - 1))"""
    params = params or BinarizeParams()
    values = image.pixels.astype(np.int64)
    half = params.window // 2
    sums, counts = _window_sums(values, half)
    squares, _ = _window_sums(values * values, half)
    mean = sums / counts
    variance = np.maximum(squares / counts - mean * mean, 0.0)
    std = np.sqrt(variance)
    threshold = mean * (1.0 + params.k * (std / params.dynamic_range - 1.0))
    return BinaryMask(values < threshold)


def _runs(flags: np.ndarray) -> List[Interval]:
    """Максимальные серии True: [(start, end)] включительно"""
    if flags.size == 0:
        return []
    padded = np.concatenate([[False], flags.astype(bool), [False]])
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return [(int(start), int(stop) - 1) for start, stop in zip(edges[::2], edges[1::2])]


def _merge_runs(runs: List[Interval], min_gap: float) -> List[Interval]:
    merged: List[Interval] = []
    for start, end in runs:
        if merged and start - merged[-1][1] - 1 < min_gap:
            merged[-1] = (merged[-1][0], end)
        else:
            merged.append((start, end))
    return merged


def inked_rows(bits: np.ndarray, row_ink_min: int = 2) -> np.ndarray:
    return bits.sum(axis=1) >= row_ink_min


def estimate_line_height(mask: BinaryMask, row_ink_min: int = 2) -> float:
    """Медианная высота серий строк с чернилами по всей маске"""
    runs = _runs(inked_rows(mask.bits, row_ink_min))
    if not runs:
        return 0.0
    return float(np.median([end - start + 1 for start, end in runs]))


def horizontal_bands(
    mask: BinaryMask,
    min_gap: float,
    row_ink_min: int = 2,
) -> List[Interval]:
    """Серии строк с >= row_ink_min чернил, разделенные >= min_gap пустыми строками"""
    return _merge_runs(_runs(inked_rows(mask.bits, row_ink_min)), min_gap)


def _interior_gaps(inked: np.ndarray) -> List[Interval]:
    """Пустые серии колонок строго между первой и последней колонкой с чернилами"""
    columns = np.flatnonzero(inked)
    if columns.size == 0:
        return []
    first, last = int(columns[0]), int(columns[-1])
    return [(first + s, first + e) for s, e in _runs(~inked[first:last + 1])]


def _overlaps(run: Interval, low: float, high: float) -> bool:
    return run[0] <= high and run[1] >= low


def column_gaps(
    mask: BinaryMask,
    band: Interval,
    min_col_gap: float,
    priors: Sequence[float] = (),
    tolerance: float = 0.03,
    col_ink_min: int = 1,
) -> List[Interval]:
    """
    Пустые серии колонок, по которым полоса делится на подблоки.

    Серии >= min_col_gap принимаются всегда. Для каждой априорной доли p:
    если принятая серия попадает в p·W ± tolerance·W, разрез привязан к ней;
    иначе разрез добавляется по самой широкой пустой серии в этом окне (если есть).
    """
    width = mask.width
    inked = mask.bits[band[0]:band[1] + 1].sum(axis=0) >= col_ink_min
    gaps = _interior_gaps(inked)
    chosen = {gap for gap in gaps if gap[1] - gap[0] + 1 >= min_col_gap}
    for prior in priors:
        center = prior * width
        low, high = center - tolerance * width, center + tolerance * width
        if any(_overlaps(gap, low, high) for gap in chosen):
            continue
        local = [gap for gap in gaps if _overlaps(gap, low, high)]
        if local:
            widest = max(
                local,
                key=lambda g: (g[1] - g[0] + 1, -abs((g[0] + g[1] + 1) / 2.0 - center), -g[0]),
            )
            chosen.add(widest)
    return sorted(chosen)


def median_column_gap(mask: BinaryMask, band: Interval, col_ink_min: int = 1) -> float:
    inked = mask.bits[band[0]:band[1] + 1].sum(axis=0) >= col_ink_min
    gaps = _interior_gaps(inked)
    if not gaps:
        return 0.0
    return float(np.median([end - start + 1 for start, end in gaps]))


def vertical_subblocks(
    mask: BinaryMask,
    band: Interval,
    priors: Sequence[float] = (),
    min_col_gap: Optional[float] = None,
    config: Optional[LayoutConfig] = None,
    line_height: Optional[float] = None,
    parent: Optional[int] = None,
) -> List[TextBlock]:
    """Подблоки полосы: серии колонок с чернилами между выбранными разрезами"""
    config = config or LayoutConfig()
    if min_col_gap is None:
        if line_height is None:
            line_height = estimate_line_height(mask, config.row_ink_min)
        min_col_gap = max(
            config.col_gap_factor * median_column_gap(mask, band, config.col_ink_min),
            config.col_gap_line_factor * line_height,
        )
    inked = mask.bits[band[0]:band[1] + 1].sum(axis=0) >= config.col_ink_min
    columns = np.flatnonzero(inked)
    if columns.size == 0:
        return []
    gaps = column_gaps(
        mask, band, min_col_gap, priors, config.prior_tolerance, config.col_ink_min
    )
    bounds = [int(columns[0])]
    for start, end in gaps:
        bounds.extend([start - 1, end + 1])
    bounds.append(int(columns[-1]))
    top, bottom = band
    return [
        TextBlock(BBox.from_corners(x1, top, x2 + 1, bottom + 1), SUBBLOCK, parent)
        for x1, x2 in zip(bounds[::2], bounds[1::2])
    ]


def segment_lines(
    mask: BinaryMask,
    subblock: TextBlock,
    line_height: float,
    config: Optional[LayoutConfig] = None,
    parent: Optional[int] = None,
) -> List[TextBlock]:
    """Строки подблока: полосы с min_gap = 0.3 высоты строки, рамки по чернилам"""
    config = config or LayoutConfig()
    box = subblock.box
    bits = mask.bits[box.y:box.y2, box.x:box.x2]
    lines: List[TextBlock] = []
    for start, end in horizontal_bands(
        BinaryMask(bits), config.line_gap_factor * line_height, config.row_ink_min
    ):
        columns = np.flatnonzero(bits[start:end + 1].any(axis=0))
        lines.append(TextBlock(
            BBox.from_corners(
                box.x + int(columns[0]), box.y + start,
                box.x + int(columns[-1]) + 1, box.y + end + 1,
            ),
            LINE,
            parent,
        ))
    return lines


def build_hierarchy(
    mask: BinaryMask,
    priors: Sequence[float] = (),
    config: Optional[LayoutConfig] = None,
) -> LayoutHierarchy:
    config = config or LayoutConfig()
    line_height = estimate_line_height(mask, config.row_ink_min)
    bands: List[TextBlock] = []
    subblocks: List[TextBlock] = []
    lines: List[TextBlock] = []
    for interval in horizontal_bands(mask, config.band_gap_factor * line_height, config.row_ink_min):
        band_index = len(bands)
        bands.append(TextBlock(
            BBox.from_corners(0, interval[0], mask.width, interval[1] + 1), BAND
        ))
        for block in vertical_subblocks(
            mask, interval, priors, config=config, line_height=line_height, parent=band_index
        ):
            sub_index = len(subblocks)
            subblocks.append(block)
            lines.extend(segment_lines(mask, block, line_height, config, parent=sub_index))
    return LayoutHierarchy(
        width=mask.width,
        height=mask.height,
        line_height=line_height,
        bands=tuple(bands),
        subblocks=tuple(subblocks),
        lines=tuple(lines),
    )


def ink_bbox(mask: BinaryMask, box: Optional[BBox] = None) -> Optional[BBox]:
    """Плотная рамка чернил внутри box (или всей маски)"""
    box = box or BBox(0, 0, mask.width, mask.height)
    bits = mask.bits[box.y:box.y2, box.x:box.x2]
    rows = np.flatnonzero(bits.any(axis=1))
    cols = np.flatnonzero(bits.any(axis=0))
    if rows.size == 0:
        return None
    return BBox.from_corners(
        box.x + int(cols[0]), box.y + int(rows[0]),
        box.x + int(cols[-1]) + 1, box.y + int(rows[-1]) + 1,
    )


class LayoutService(BaseStage):
    """Шаг 4: иерархия блоков выровненного чека"""

    stage_name = "layout"

    def __init__(self, config: Optional[LayoutConfig] = None, logger=None):
        super().__init__(logger)
        self.config = config or LayoutConfig()

    def analyze(
        self,
        image: GrayImage,
        priors: Sequence[float] = (),
        sample_id: Optional[str] = None,
    ) -> Tuple[LayoutHierarchy, BinaryMask]:
        with self.timed("layout", sample_id):
            mask = adaptive_binarize(image, self.config.binarize)
            hierarchy = build_hierarchy(mask, priors, self.config)
        self.logger.debug(
            f"{len(hierarchy.bands)} bands, {len(hierarchy.subblocks)} subblocks, "
            f"{len(hierarchy.lines)} lines",
            extra={'stage': self.stage_name, 'sample_id': sample_id or '-'},
        )
        return hierarchy, mask
