"""
Тесты тепловой карты и файлового оракула
"""
import numpy as np
import pytest

from receiptforge.backends.models import HeatMap, grid_shape
from receiptforge.backends.oracle import FileOracleBackend, read_heatmap_sidecar, write_heatmap_sidecar
from receiptforge.core.exceptions import ClassMismatch, HeatMapError, OracleLoadError, OracleShapeError
from receiptforge.core.settings import BackendSpec
from receiptforge.imaging.models import BBox

from tests.fixtures.builders import blank


class TestGridShape:
    """Тест размера сетки окон"""

    @pytest.mark.parametrize("height,width,stride,expected", [
        (227, 227, 227, (1, 1)),
        (227, 454, 227, (1, 2)),
        (300, 300, 100, (1, 1)),
        (908, 681, 227, (4, 3)),
        (100, 50, 227, (1, 1)),
    ])
    def test_grid(self, height, width, stride, expected):
        spec = BackendSpec(input_size=227, stride=stride)
        assert grid_shape(height, width, spec) == expected


class TestHeatMap:
    """Тест валидации тепловой карты"""

    def test_from_probabilities(self):
        heatmap = HeatMap.from_probabilities(np.array([[0.9, 0.2]]), BackendSpec())
        assert heatmap.class_labels == ("receipt", "not_receipt")
        assert heatmap.channel("not_receipt")[0, 1] == pytest.approx(0.8)
        assert heatmap.positive_cells("receipt", 0.7) == [(0, 0)]

    def test_cell_rect(self):
        heatmap = HeatMap.from_probabilities(np.zeros((2, 3)), BackendSpec())
        assert heatmap.cell_rect(1, 2) == BBox(454, 227, 227, 227)

    def test_threshold_is_inclusive(self):
        heatmap = HeatMap.from_probabilities(np.array([[0.7, 0.69]]), BackendSpec())
        assert heatmap.positive_cells("receipt", 0.7) == [(0, 0)]

    def test_unknown_class(self):
        heatmap = HeatMap.from_probabilities(np.zeros((1, 1)), BackendSpec())
        with pytest.raises(ClassMismatch):
            heatmap.channel("logo")

    @pytest.mark.parametrize("scores", [
        np.zeros((2, 2)),                                   # не 3-D
        np.zeros((0, 2, 2)),                                # пустая сетка
        np.full((1, 1, 3), 1.0 / 3.0),                      # каналов больше меток
        np.array([[[0.6, 0.6]]]),                           # сумма 1.2
        np.array([[[1.5, -0.5]]]),                          # вне [0, 1]
    ])
    def test_invalid_scores(self, scores):
        with pytest.raises(HeatMapError):
            HeatMap(227, 227, ("receipt", "not_receipt"), scores)

    def test_stride_larger_than_window(self):
        with pytest.raises(HeatMapError):
            HeatMap(300, 227, ("receipt", "not_receipt"), np.array([[[1.0, 0.0]]]))

    def test_scores_are_read_only(self):
        heatmap = HeatMap.from_probabilities(np.zeros((1, 1)), BackendSpec())
        with pytest.raises(ValueError):
            heatmap.scores[0, 0, 0] = 1.0


class TestOracleSidecar:
    """Тест файлового оракула"""

    def _heatmap(self) -> HeatMap:
        rng = np.random.default_rng(3)
        return HeatMap.from_probabilities(rng.random((2, 3)), BackendSpec())

    def test_write_then_read(self, tmp_path):
        heatmap = self._heatmap()
        path = write_heatmap_sidecar(heatmap, tmp_path / "a.heatmap")
        loaded = read_heatmap_sidecar(path)
        assert loaded.class_labels == heatmap.class_labels
        assert (loaded.stride, loaded.input_size) == (227, 227)
        assert np.array_equal(loaded.scores, heatmap.scores)

    def test_backend_replays_map_for_matching_image(self, tmp_path):
        heatmap = self._heatmap()
        backend = FileOracleBackend(write_heatmap_sidecar(heatmap, tmp_path / "a.heatmap"))
        assert backend.spec.class_labels == ["receipt", "not_receipt"]
        replayed = backend.infer_heatmap(blank(681, 454))
        assert np.array_equal(replayed.scores, heatmap.scores)

    def test_backend_rejects_other_grid(self, tmp_path):
        backend = FileOracleBackend(write_heatmap_sidecar(self._heatmap(), tmp_path / "a.heatmap"))
        with pytest.raises(OracleShapeError) as exc:
            backend.infer_heatmap(blank(908, 908))
        assert exc.value.error_code == "ORACLE_SHAPE_ERROR"

    def test_missing_sidecar(self, tmp_path):
        with pytest.raises(OracleLoadError):
            FileOracleBackend(tmp_path / "absent.heatmap")

    @pytest.mark.parametrize("content", [
        "HEATMAP v2\n1 1 2 227 227\nreceipt not_receipt\n1.0 0.0\n",
        "HEATMAP v1\n1 2 2 227 227\nreceipt not_receipt\n1.0 0.0\n",
        "HEATMAP v1\n1 1 3 227 227\nreceipt not_receipt\n1.0 0.0\n",
        "HEATMAP v1\n1 1 2 227 227\nreceipt not_receipt\n0.9 0.3\n",
        "HEATMAP v1\none 1 2 227 227\nreceipt not_receipt\n1.0 0.0\n",
    ])
    def test_malformed_sidecar(self, tmp_path, content):
        path = tmp_path / "bad.heatmap"
        path.write_text(content, encoding="utf-8")
        with pytest.raises(OracleLoadError):
            read_heatmap_sidecar(path)
