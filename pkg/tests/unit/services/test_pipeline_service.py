"""
Тесты связки стадий на моках бэкендов
"""
import numpy as np
import pytest

from receiptforge.backends.heuristic import HeuristicReceiptBackend
from receiptforge.monitoring.metrics import metrics_collector
from receiptforge.services.ocr_service import StubOcrBackend
from receiptforge.services.pipeline_service import (
    STATUS_NEEDS_REVIEW,
    STATUS_NOT_RECEIPT,
    ReceiptPipeline,
    build_pipeline,
    run_pipeline,
)

from tests.fixtures.builders import blank
from tests.mocks.backends import FailingOcrBackend, FixedHeatmapBackend

PRODUCT_OCR = [{"text": "BANANE   2,10", "box": {"x": 10, "y": 10, "w": 150, "h": 14}}]


@pytest.fixture
def pipeline(settings, stores, ontology):
    return ReceiptPipeline(settings, FixedHeatmapBackend(np.zeros((2, 3))), stores, ontology)


class TestReceiptPipeline:
    """Тест конвейера по одному изображению"""

    def test_not_receipt_stops_after_detection(self, pipeline):
        result = pipeline.run(blank(681, 454), sample_id="n-1")
        assert result.status == STATUS_NOT_RECEIPT
        assert result.crop is None and result.sign is None
        assert set(result.to_dict()) == {"sample_id", "status", "detection", "stage_errors"}

    def test_text_detection_continues_with_fallback_crop(self, pipeline):
        image = blank(681, 454)
        result = pipeline.run(image, StubOcrBackend(PRODUCT_OCR), sample_id="t-1")
        assert result.verdict.text_hit and not result.verdict.image_hit
        assert result.status == STATUS_NEEDS_REVIEW
        assert result.crop.fallback
        assert result.receipt == image
        assert [e.to_dict()["stage"] for e in result.stage_errors] == ["crop"]
        assert result.stage_errors[0].error_code == "EDGE_NOT_FOUND"
        assert result.sign.logo is None and result.sign.logo_error is None
        assert [line.text for line in result.ocr_lines] == ["BANANE   2,10"]

    def test_ocr_failure_is_recorded(self, pipeline):
        backend = FixedHeatmapBackend(np.ones((2, 3)))
        result = pipeline.run(blank(681, 454), FailingOcrBackend(), "f-1", receipt_backend=backend)
        assert result.verdict.image_hit
        ocr_errors = [e for e in result.stage_errors if e.stage == "ocr"]
        assert ocr_errors and all(e.error_code == "DECODE_ERROR" for e in ocr_errors)
        assert result.status == STATUS_NEEDS_REVIEW

    def test_backend_override(self, pipeline):
        override = FixedHeatmapBackend(np.ones((2, 3)))
        result = pipeline.run(blank(681, 454), receipt_backend=override)
        assert override.calls == 1
        assert pipeline.receipt_backend.calls == 0
        assert result.verdict.fused

    def test_debug_section(self, pipeline):
        report = run_pipeline(
            blank(681, 454), pipeline, debug=True,
            receipt_backend=FixedHeatmapBackend(np.ones((2, 3))),
        )
        assert report["debug"]["heatmap"]["grid"] == [2, 3]
        assert report["debug"]["heatmap"]["scores"] == [[1.0, 1.0, 1.0], [1.0, 1.0, 1.0]]
        assert report["debug"]["ocr"] == []
        assert "layout" in report["debug"]
        assert "debug" not in run_pipeline(blank(681, 454), pipeline)

    def test_stage_metrics(self, pipeline):
        metrics_collector.reset_metrics()
        pipeline.run(blank(681, 454), receipt_backend=FixedHeatmapBackend(np.ones((2, 3))))
        counters = metrics_collector.get_metrics_summary()["counters"]
        assert counters["stages_total[stage=detect,status=success]"] == 1
        assert counters["stages_total[stage=crop,status=fallback]"] == 1
        assert counters["stages_total[stage=layout,status=success]"] == 1


class TestBuildPipeline:
    """Тест сборки конвейера по настройкам"""

    def test_default(self, settings):
        pipeline = build_pipeline(settings)
        assert isinstance(pipeline.receipt_backend, HeuristicReceiptBackend)
        assert not pipeline.sign.has_logo_backends

    def test_with_logo_templates(self, settings, logo_dir):
        pipeline = build_pipeline(settings, logo_templates=logo_dir)
        assert pipeline.sign.has_logo_backends
        assert pipeline.sign.segmentation.spec.class_labels == ["logo", "background"]
