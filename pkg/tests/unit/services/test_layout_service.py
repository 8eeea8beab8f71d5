"""
Тесты бинаризации и сегментации проекциями
"""
import statistics

import numpy as np
import pytest

from receiptforge.core.settings import LayoutConfig
from receiptforge.imaging.models import BBox, BinaryMask, GrayImage
from receiptforge.services.layout_service import (
    LINE,
    SUBBLOCK,
    LayoutService,
    TextBlock,
    adaptive_binarize,
    build_hierarchy,
    column_gaps,
    estimate_line_height,
    horizontal_bands,
    ink_bbox,
    segment_lines,
    vertical_subblocks,
)

from tests.fixtures.builders import blank, random_mask, text_page


def _runs(flags):
    runs, start = [], None
    for index, flag in enumerate(flags):
        if flag and start is None:
            start = index
        if not flag and start is not None:
            runs.append((start, index - 1))
            start = None
    if start is not None:
        runs.append((start, len(flags) - 1))
    return runs


def _merge(runs, min_gap):
    merged = []
    for start, end in runs:
        if merged and start - merged[-1][1] - 1 < min_gap:
            merged[-1] = (merged[-1][0], end)
        else:
            merged.append((start, end))
    return merged


def _row_bands(rows, min_gap, row_ink_min):
    return _merge(_runs([sum(row) >= row_ink_min for row in rows]), min_gap)


def _reference_hierarchy(bits, config):
    """Прямолинейная сегментация на списках Python"""
    rows = bits.tolist()
    width = len(rows[0])
    runs = _runs([sum(row) >= config.row_ink_min for row in rows])
    line_height = float(statistics.median([e - s + 1 for s, e in runs])) if runs else 0.0

    bands, subblocks, lines = [], [], []
    for top, bottom in _row_bands(rows, config.band_gap_factor * line_height, config.row_ink_min):
        bands.append((0, top, width, bottom + 1))
        inked = [
            sum(rows[r][c] for r in range(top, bottom + 1)) >= config.col_ink_min
            for c in range(width)
        ]
        columns = [c for c, flag in enumerate(inked) if flag]
        if not columns:
            continue
        first, last = columns[0], columns[-1]
        gaps = [(first + s, first + e) for s, e in _runs([not f for f in inked[first:last + 1]])]
        median_gap = float(statistics.median([e - s + 1 for s, e in gaps])) if gaps else 0.0
        min_col_gap = max(
            config.col_gap_factor * median_gap, config.col_gap_line_factor * line_height
        )
        bounds = [first]
        for start, end in gaps:
            if end - start + 1 >= min_col_gap:
                bounds.extend([start - 1, end + 1])
        bounds.append(last)
        for x1, x2 in zip(bounds[::2], bounds[1::2]):
            subblocks.append((x1, top, x2 + 1, bottom + 1))
            sub_rows = [row[x1:x2 + 1] for row in rows[top:bottom + 1]]
            for s, e in _row_bands(sub_rows, config.line_gap_factor * line_height, config.row_ink_min):
                cols = [c for c in range(x2 - x1 + 1) if any(row[c] for row in sub_rows[s:e + 1])]
                lines.append((x1 + cols[0], top + s, x1 + cols[-1] + 1, top + e + 1))
    return line_height, bands, subblocks, lines


def _corners(blocks):
    return [(b.box.x, b.box.y, b.box.x2, b.box.y2) for b in blocks]


class TestBinarize:
    """Тест адаптивной бинаризации"""

    def test_white_page_has_no_ink(self):
        assert adaptive_binarize(blank(120, 80)).count == 0

    def test_text_pixels_are_ink(self):
        image, boxes = text_page(["EPICERIE MARTIN"])
        mask = adaptive_binarize(image)
        assert np.array_equal(mask.bits, image.pixels == 0)
        assert ink_bbox(mask) == boxes[0]

    def test_uneven_lighting(self):
        image, _ = text_page(["EPICERIE MARTIN", "LAIT DEMI ECREME", "MERCI"])
        gradient = np.linspace(0.6, 1.0, image.width)[None, :]
        shaded = GrayImage(image.as_float() * gradient)
        even = adaptive_binarize(image).count
        uneven = adaptive_binarize(shaded).count
        assert abs(uneven - even) <= 0.01 * even


class TestProjections:
    """Тест полос и разрезов по колонкам"""

    def _rows_mask(self, inked_rows, width=20, height=16):
        bits = np.zeros((height, width), dtype=bool)
        for row in inked_rows:
            bits[row, 2:12] = True
        return BinaryMask(bits)

    def test_bands(self):
        mask = self._rows_mask(list(range(0, 5)) + list(range(10, 13)))
        assert horizontal_bands(mask, 3) == [(0, 4), (10, 12)]
        assert horizontal_bands(mask, 6) == [(0, 12)]
        assert estimate_line_height(mask) == 4.0

    def test_sparse_rows_are_empty(self):
        bits = np.zeros((6, 20), dtype=bool)
        bits[2, 5] = True
        assert horizontal_bands(BinaryMask(bits), 1) == []
        assert estimate_line_height(BinaryMask(bits)) == 0.0

    def _two_columns(self):
        bits = np.zeros((10, 200), dtype=bool)
        bits[2:8, 10:152] = True
        bits[2:8, 157:191] = True
        return BinaryMask(bits)

    def test_prior_snaps_to_nearby_gap(self):
        mask = self._two_columns()
        assert column_gaps(mask, (0, 9), 20) == []
        assert column_gaps(mask, (0, 9), 20, priors=[0.78]) == [(152, 156)]

    def test_prior_without_gap_adds_nothing(self):
        mask = self._two_columns()
        assert column_gaps(mask, (0, 9), 20, priors=[0.5]) == []

    def test_wide_gap_is_always_cut(self):
        mask = self._two_columns()
        assert column_gaps(mask, (0, 9), 5) == [(152, 156)]
        blocks = vertical_subblocks(mask, (0, 9), min_col_gap=5)
        assert [b.box for b in blocks] == [BBox.from_corners(10, 0, 152, 10), BBox.from_corners(157, 0, 191, 10)]

    def test_lines_inside_subblock(self):
        bits = np.zeros((30, 40), dtype=bool)
        bits[2:6, 14:21] = True
        bits[12:16, 16:26] = True
        # один пиксель в строке - не строка
        bits[9, 12] = True
        # разрыв в одну пустую строку меньше 0.3 высоты строки
        bits[20:23, 12:15] = True
        bits[24:27, 12:15] = True
        # чернила за пределами подблока
        bits[:, 35] = True
        subblock = TextBlock(BBox(10, 0, 20, 30), SUBBLOCK, 0)

        lines = segment_lines(BinaryMask(bits), subblock, 4.0, parent=3)

        assert [line.box for line in lines] == [BBox(14, 2, 7, 4), BBox(16, 12, 10, 4), BBox(12, 20, 3, 7)]
        assert {line.kind for line in lines} == {LINE}
        assert {line.parent for line in lines} == {3}


class TestHierarchy:
    """Тест иерархии полос, подблоков и строк"""

    def test_text_lines_are_tight(self):
        image, boxes = text_page(["EPICERIE MARTIN", "LAIT DEMI ECREME", "MERCI"], top=6)
        hierarchy = build_hierarchy(adaptive_binarize(image))
        assert hierarchy.line_height == 14.0
        assert [line.box for line in hierarchy.lines] == boxes
        assert all(line.parent == 0 for line in hierarchy.lines)
        assert len(hierarchy.bands) == 1

    def test_lines_of_subblock(self):
        image, _ = text_page(["EPICERIE MARTIN", "MERCI"])
        hierarchy = build_hierarchy(adaptive_binarize(image))
        assert [i for i, _ in hierarchy.lines_of(0)] == [0, 1]
        assert hierarchy.lines_of(5) == []

    def test_empty_mask(self):
        hierarchy = build_hierarchy(BinaryMask(np.zeros((10, 10), dtype=bool)))
        assert hierarchy.bands == () and hierarchy.lines == ()
        assert hierarchy.to_dict()["line_height"] == 0.0

    def test_matches_reference_on_random_masks(self):
        rng = np.random.default_rng(2024)
        config = LayoutConfig()
        for _ in range(1000):
            mask = random_mask(rng)
            hierarchy = build_hierarchy(mask, config=config)
            line_height, bands, subblocks, lines = _reference_hierarchy(mask.bits, config)
            assert hierarchy.line_height == pytest.approx(line_height)
            assert _corners(hierarchy.bands) == bands
            assert _corners(hierarchy.subblocks) == subblocks
            assert _corners(hierarchy.lines) == lines


class TestLayoutService:
    """Тест стадии разметки"""

    def test_analyze(self):
        image, boxes = text_page(["EPICERIE MARTIN", "MERCI"])
        hierarchy, mask = LayoutService().analyze(image, sample_id="r-1")
        assert mask.count == int((image.pixels == 0).sum())
        assert [line.box for line in hierarchy.lines] == boxes
        payload = hierarchy.to_dict()
        assert payload["lines"][0]["kind"] == "line"
        assert payload["subblocks"][0]["parent"] == 0
