"""
Тесты обнаружения чека
"""
import numpy as np
import pytest

from receiptforge.backends.models import HeatMap
from receiptforge.core.exceptions import ConfigError
from receiptforge.core.settings import BackendSpec, DetectionConfig
from receiptforge.services.detection_service import (
    DetectionService,
    class_counts,
    detect_by_image,
    detect_by_text,
    find_product_lines,
    fuse_detection,
    per_class_counts,
)

from tests.fixtures.builders import blank
from tests.mocks.backends import FixedHeatmapBackend


def _grid_with_positive(count: int, value: float = 0.9) -> HeatMap:
    scores = np.zeros(100)
    scores[:count] = value
    return HeatMap.from_probabilities(scores.reshape(10, 10), BackendSpec())


class TestTextDetection:
    """Тест обнаружения по тексту"""

    @pytest.mark.parametrize("line", [
        "2 YAOURT NATURE   1,35",
        "BRICK LP        0.79€",
        "LAIT DEMI ECREME\t0,95 EUR",
        "PAIN   $1.20",
    ])
    def test_product_lines(self, line):
        assert detect_by_text(line)

    @pytest.mark.parametrize("line", [
        "",
        "MERCI DE VOTRE VISITE",
        "Lorem ipsum dolor sit amet, consectetur adipiscing elit",
        "YAOURT 1,35",
        "12 34   5,00",
    ])
    def test_not_product_lines(self, line):
        assert not detect_by_text(line)

    def test_match_fields(self):
        text = "EPICERIE MARTIN\nBRICK LP        0.79€\nMERCI"
        matches = find_product_lines(text)
        assert len(matches) == 1
        assert matches[0].line_index == 1
        assert matches[0].label == "BRICK LP"
        assert matches[0].price == "0.79€"

    def test_single_product_line_among_noise(self):
        rng = np.random.default_rng(5)
        alphabet = list("ABCDEFGHIJKLMNOPQRSTUVWXYZ ")
        lines = ["".join(rng.choice(alphabet, size=int(rng.integers(5, 40)))) for _ in range(100)]
        lines.insert(57, "BANANE   2,10")
        assert [m.line_index for m in find_product_lines("\n".join(lines))] == [57]

    def test_unknown_grammar_version(self):
        with pytest.raises(ConfigError):
            find_product_lines("BANANE   2,10", grammar_version="product-line-v9")


class TestImageDetection:
    """Тест обнаружения по тепловой карте"""

    def test_thirty_percent_positive(self):
        assert detect_by_image(_grid_with_positive(30)) == (True, pytest.approx(0.30))

    def test_ten_percent_positive(self):
        assert detect_by_image(_grid_with_positive(10)) == (False, pytest.approx(0.10))

    def test_ratio_is_inclusive(self):
        hit, ratio = detect_by_image(_grid_with_positive(25))
        assert hit and ratio == 0.25

    def test_threshold_is_inclusive(self):
        hit, _ = detect_by_image(_grid_with_positive(30, value=0.70))
        assert hit
        hit, _ = detect_by_image(_grid_with_positive(30, value=0.69))
        assert not hit

    def test_empty_map(self):
        assert detect_by_image(_grid_with_positive(0)) == (False, 0.0)

    def test_custom_target_class(self):
        config = DetectionConfig(target_class="not_receipt")
        hit, ratio = detect_by_image(_grid_with_positive(10), config)
        assert hit and ratio == pytest.approx(0.90)


class TestFusion:
    """Тест логического ИЛИ и метрик"""

    @pytest.mark.parametrize("text_hit,image_hit,expected", [
        (False, False, False), (True, False, True), (False, True, True), (True, True, True),
    ])
    def test_or(self, text_hit, image_hit, expected):
        assert fuse_detection(text_hit, image_hit) is expected

    def test_service_uses_both_paths(self):
        service = DetectionService()
        backend = FixedHeatmapBackend(np.zeros((1, 1)))
        verdict, heatmap = service.detect(blank(227, 227), backend, "BANANE   2,10")
        assert verdict.text_hit and not verdict.image_hit and verdict.fused
        assert verdict.product_line_count == 1
        assert backend.calls == 1
        assert heatmap.grid_h == 1

        verdict, _ = service.detect(blank(227, 227), FixedHeatmapBackend(np.ones((1, 1))), "")
        assert verdict.image_hit and verdict.fused
        assert verdict.to_dict()["positive_ratio"] == 1.0

    def test_class_counts(self):
        truth = ["receipt", "receipt", "not_receipt", "not_receipt", "receipt"]
        predicted = ["receipt", "not_receipt", "receipt", "not_receipt", "receipt"]
        counts = class_counts(truth, predicted, "receipt")
        assert (counts.tp, counts.fp, counts.fn) == (2, 1, 1)
        assert counts.precision == pytest.approx(2 / 3)
        assert counts.recall == pytest.approx(2 / 3)
        labels = [c.label for c in per_class_counts(truth, predicted)]
        assert labels == ["receipt", "not_receipt"]

    def test_empty_counts_are_zero(self):
        counts = class_counts(["not_receipt"], ["not_receipt"], "receipt")
        assert counts.precision == 0.0 and counts.recall == 0.0
