"""
Тесты широкого и уточненного кадрирования
"""
import numpy as np
import pytest

from receiptforge.backends.models import HeatMap
from receiptforge.core.exceptions import DegenerateQuad, EdgeNotFound, NoReceiptRegion
from receiptforge.core.settings import BackendSpec, CropConfig
from receiptforge.imaging.models import BBox, GrayImage
from receiptforge.imaging.raster import crop, pad_border, rotate, rotate_corners
from receiptforge.services.crop_service import (
    QUASI_HORIZONTAL,
    QUASI_VERTICAL,
    CropService,
    EdgeLine,
    EdgeSet,
    detect_receipt_edges,
    fit_line,
    inner_box,
    rectify,
    wide_crop,
)

from tests.fixtures.builders import blank, paper_on_background

RECT = (100, 50, 200, 200)


def _heatmap(cells, grid=(4, 3)) -> HeatMap:
    scores = np.zeros(grid)
    for i, j in cells:
        scores[i, j] = 1.0
    return HeatMap.from_probabilities(scores, BackendSpec())


def _line(name, orientation, slope, offset) -> EdgeLine:
    return EdgeLine(name, orientation, "right", slope, offset, ())


def _rotated_paper(angle: float):
    base = paper_on_background(rect=RECT)
    rotated = rotate(base, angle, fill=60)
    x, y, w, h = RECT
    corners = rotate_corners([(x, y), (x + w, y), (x + w, y + h), (x, y + h)], angle, base.shape)
    return rotated, corners


class TestWideCrop:
    """Тест широкого кадра по тепловой карте"""

    def test_single_cell(self):
        box = wide_crop(_heatmap([(1, 2)]), (681, 908), margin=0.0)
        assert box == BBox(454, 227, 227, 227)

    def test_adjacent_cells_union(self):
        box = wide_crop(_heatmap([(0, 0), (0, 1)]), (681, 908), margin=0.0)
        assert box == BBox(0, 0, 454, 227)

    def test_margin_is_clamped(self):
        box = wide_crop(_heatmap([(i, j) for i in range(4) for j in range(3)]), (681, 908))
        assert box == BBox(0, 0, 681, 908)

    def test_margin_grows_box(self):
        box = wide_crop(_heatmap([(1, 1)]), (681, 908), margin=0.1)
        assert box == BBox(227 - 23, 227 - 23, 227 + 46, 227 + 46)

    def test_no_positive_cell(self):
        with pytest.raises(NoReceiptRegion):
            wide_crop(_heatmap([]), (681, 908))


class TestEdges:
    """Тест детектора ступенчатых границ"""

    def test_axis_aligned_rectangle(self):
        image = paper_on_background(rect=RECT)
        edges = detect_receipt_edges(image, BBox(0, 0, image.width, image.height))
        expected = {"left": 100.0, "right": 300.0, "top": 50.0, "bottom": 250.0}
        for edge in edges:
            assert edge.offset == pytest.approx(expected[edge.name], abs=1.0)
            assert abs(edge.angle) < 0.2
            assert len(edge.support) >= 8

    @pytest.mark.parametrize("angle", [5.0, -5.0])
    def test_rotated_rectangle(self, angle):
        image, (tl, tr, br, bl) = _rotated_paper(angle)
        edges = detect_receipt_edges(image, BBox(0, 0, image.width, image.height))

        expected_angle = np.degrees(np.arctan((bl[0] - tl[0]) / (bl[1] - tl[1])))
        for edge in (edges.left, edges.right):
            assert edge.angle == pytest.approx(expected_angle, abs=1.0)
        for edge in (edges.top, edges.bottom):
            assert edge.angle == pytest.approx(-expected_angle, abs=1.0)

        mid_y = (tl[1] + bl[1]) / 2.0
        assert edges.left.slope * mid_y + edges.left.offset == pytest.approx((tl[0] + bl[0]) / 2.0, abs=2.0)
        mid_y = (tr[1] + br[1]) / 2.0
        assert edges.right.slope * mid_y + edges.right.offset == pytest.approx((tr[0] + br[0]) / 2.0, abs=2.0)
        mid_x = (tl[0] + tr[0]) / 2.0
        assert edges.top.slope * mid_x + edges.top.offset == pytest.approx((tl[1] + tr[1]) / 2.0, abs=2.0)
        mid_x = (bl[0] + br[0]) / 2.0
        assert edges.bottom.slope * mid_x + edges.bottom.offset == pytest.approx((bl[1] + br[1]) / 2.0, abs=2.0)

    def test_uniform_image_has_no_edges(self):
        with pytest.raises(EdgeNotFound) as exc:
            detect_receipt_edges(blank(300, 200, level=128), BBox(0, 0, 300, 200))
        assert exc.value.error_code == "EDGE_NOT_FOUND"

    def test_fit_line_drops_outliers(self):
        along = np.arange(50, dtype=float)
        across = 0.1 * along + 20.0
        across[[5, 17, 33]] += 40.0
        slope, offset, keep = fit_line(along, across)
        assert slope == pytest.approx(0.1, abs=1e-6)
        assert offset == pytest.approx(20.0, abs=1e-6)
        assert not keep[[5, 17, 33]].any()
        assert keep.sum() == 47


class TestRectify:
    """Тест выравнивания"""

    def test_axis_aligned_crop(self):
        image = paper_on_background(rect=RECT)
        edges = detect_receipt_edges(image, BBox(0, 0, image.width, image.height))
        result = rectify(image, edges)
        assert result.skew_angle == 0.0
        assert not result.fallback
        assert result.rectified == crop(image, BBox.from_corners(102, 52, 298, 248))
        assert np.all(result.rectified.pixels == 240)
        for (x, y), (ex, ey) in zip(result.quad.corners, [(100, 50), (300, 50), (300, 250), (100, 250)]):
            assert x == pytest.approx(ex, abs=1e-6) and y == pytest.approx(ey, abs=1e-6)

    def test_zero_inset_keeps_whole_paper(self):
        image = paper_on_background(rect=RECT)
        edges = detect_receipt_edges(image, BBox(0, 0, image.width, image.height))
        result = rectify(image, edges, config=CropConfig(inset=0))
        assert result.rectified == crop(image, BBox(*RECT))

    def test_rotated_receipt_is_deskewed(self):
        image, _ = _rotated_paper(5.0)
        result = CropService().edge_only(image)
        assert not result.fallback
        assert result.skew_angle == pytest.approx(5.0, abs=0.5)
        assert result.rectified.pixels.mean() > 200

        framed = pad_border(result.rectified, 20, fill=60)
        edges = detect_receipt_edges(framed, BBox(0, 0, framed.width, framed.height))
        for edge in edges:
            assert abs(edge.angle) < 0.5

    def test_corners_are_clamped_to_wide_box(self):
        image = paper_on_background(rect=RECT)
        edges = detect_receipt_edges(image, BBox(0, 0, image.width, image.height))
        wide = BBox(120, 40, 250, 230)
        result = rectify(image, edges, wide)
        assert result.wide_box == wide
        assert wide.contains(result.quad.bbox())
        expected = [(120, 50), (300, 50), (300, 250), (120, 250)]
        for (x, y), (ex, ey) in zip(result.quad.corners, expected):
            assert x == pytest.approx(ex, abs=1e-6) and y == pytest.approx(ey, abs=1e-6)

    def test_crossing_edges_are_degenerate(self):
        image = paper_on_background(rect=RECT)
        edges = EdgeSet(
            left=_line("left", QUASI_VERTICAL, 0.1, 100.0),
            right=_line("right", QUASI_VERTICAL, -0.1, 140.0),
            top=_line("top", QUASI_HORIZONTAL, 0.0, 50.0),
            bottom=_line("bottom", QUASI_HORIZONTAL, 0.0, 250.0),
        )
        with pytest.raises(DegenerateQuad):
            rectify(image, edges)

    def test_inner_box(self):
        corners = [(10.2, 5.0), (50.0, 4.6), (49.7, 30.0), (10.0, 30.3)]
        assert inner_box(corners) == BBox.from_corners(11, 5, 49, 30)
        assert inner_box(corners, inset=2) == BBox.from_corners(13, 7, 47, 28)
        assert inner_box([(1.0000001, 0.0), (10.0, 0.0), (10.0, 10.0), (1.0000001, 10.0)]) == BBox(1, 0, 9, 10)


class TestCropService:
    """Тест стадии кадрирования"""

    def test_crop_from_heatmap(self):
        image = paper_on_background(size=(681, 454), rect=(150, 80, 300, 300))
        heatmap = HeatMap.from_probabilities(np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0]]), BackendSpec())
        result = CropService().crop(image, heatmap)
        assert not result.fallback
        assert result.wide_box == BBox(0, 0, 477, 454)
        expected = [(150, 80), (450, 80), (450, 380), (150, 380)]
        for (x, y), (ex, ey) in zip(result.quad.corners, expected):
            assert x == pytest.approx(ex, abs=1e-6) and y == pytest.approx(ey, abs=1e-6)

    def test_paper_larger_than_wide_box(self):
        image = paper_on_background(size=(681, 454), rect=(150, 30, 270, 370))
        heatmap = _heatmap([(0, 1)], grid=(2, 3))
        result = CropService().crop(image, heatmap)
        assert result.wide_box == BBox.from_corners(216, 0, 465, 238)
        assert result.fallback
        assert result.wide_box.contains(result.quad.bbox())
        assert result.rectified == crop(image, result.wide_box)

    def test_tilted_paper_stays_inside_wide_box(self):
        image, _ = _rotated_paper(5.0)
        whole = CropService().edge_only(image)
        assert not whole.fallback
        heatmap = _heatmap([(0, 0)], grid=(1, 1))
        result = CropService().crop(image, heatmap)
        assert result.wide_box.contains(result.quad.bbox())

    def test_fallback_on_uniform_image(self):
        image = blank(681, 454, level=200)
        heatmap = HeatMap.from_probabilities(np.ones((2, 3)), BackendSpec())
        result = CropService().crop(image, heatmap)
        assert result.fallback
        assert result.fallback_reason == "EDGE_NOT_FOUND"
        assert result.rectified == image
        assert result.to_dict()["fallback"] is True

    def test_no_positive_cell_searches_whole_image(self):
        image = paper_on_background(size=(681, 454), rect=(150, 80, 300, 300))
        service = CropService()
        box, reason = service.wide_box(image, HeatMap.from_probabilities(np.zeros((2, 3)), BackendSpec()))
        assert box == BBox(0, 0, 681, 454)
        assert reason == "NO_RECEIPT_REGION"
        result = service.crop(image, HeatMap.from_probabilities(np.zeros((2, 3)), BackendSpec()))
        assert not result.fallback
        assert isinstance(result.rectified, GrayImage)
