"""
Полная цепочка чтения чека: обнаружение -> кадрирование -> вывеска -> разметка -> товары
"""
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from ..backends.models import HeatMap
from ..backends.registry import create_backend
from ..backends.templates import TemplateLogoClassifier, TemplateLogoSegmentation, load_logo_templates
from ..core.exceptions import ReceiptForgeError
from ..core.interfaces import IClassifierBackend, IOcrBackend, ISegmentationBackend
from ..core.logging import get_logger, log_stage
from ..core.settings import Settings
from ..database.ontology_repository import Ontology
from ..database.store_repository import StoreDatabase
from ..imaging.models import GrayImage
from ..imaging.raster import flip180
from ..monitoring.metrics import metrics_collector
from .crop_service import CropResult, CropService
from .detection_service import DetectionService, DetectionVerdict
from .layout_service import LayoutHierarchy, LayoutService
from .ocr_service import OcrService, TextLine, lines_to_text
from .semantics_service import ProductExtraction, SemanticsService
from .sign_service import INVERTED, UPRIGHT, SignReport, SignService

logger = get_logger(__name__)

STATUS_ACCEPTED = "accepted"
STATUS_NEEDS_REVIEW = "needs_review"
STATUS_NOT_RECEIPT = "not_receipt"


@dataclass(frozen=True)
class StageError:
    stage: str
    error_code: str
    message: str

    def to_dict(self) -> Dict[str, str]:
        return {"stage": self.stage, "error_code": self.error_code, "message": self.message}


@dataclass
class PipelineResult:
    """Промежуточные и итоговые результаты по одному изображению"""
    sample_id: str
    verdict: Optional[DetectionVerdict] = None
    heatmap: Optional[HeatMap] = None
    crop: Optional[CropResult] = None
    orientation: str = UPRIGHT
    receipt: Optional[GrayImage] = None
    sign: Optional[SignReport] = None
    hierarchy: Optional[LayoutHierarchy] = None
    ocr_lines: List[TextLine] = field(default_factory=list)
    extraction: ProductExtraction = field(default_factory=ProductExtraction)
    stage_errors: List[StageError] = field(default_factory=list)

    @property
    def status(self) -> str:
        if self.verdict is None or not self.verdict.fused:
            return STATUS_NOT_RECEIPT
        if self.sign is not None and self.sign.decision.accepted:
            return STATUS_ACCEPTED
        return STATUS_NEEDS_REVIEW

    def record_error(self, stage: str, error: ReceiptForgeError) -> None:
        self.stage_errors.append(StageError(stage, error.error_code, error.message))
        metrics_collector.record_error(error.error_code, stage, self.sample_id)

    def to_dict(self, debug: bool = False) -> Dict[str, Any]:
        report: Dict[str, Any] = {
            "sample_id": self.sample_id,
            "status": self.status,
            "detection": self.verdict.to_dict() if self.verdict else None,
        }
        if self.status != STATUS_NOT_RECEIPT:
            report["crop"] = self.crop.to_dict() if self.crop else None
            report["orientation"] = self.orientation
            report["sign"] = self.sign.to_dict() if self.sign else None
            report.update(self.extraction.to_dict())
        report["stage_errors"] = [error.to_dict() for error in self.stage_errors]
        if debug:
            report["debug"] = self._debug_section()
        return report

    def _debug_section(self) -> Dict[str, Any]:
        section: Dict[str, Any] = {}
        if self.heatmap is not None:
            section["heatmap"] = {
                "grid": [self.heatmap.grid_h, self.heatmap.grid_w],
                "stride": self.heatmap.stride,
                "input_size": self.heatmap.input_size,
                "scores": [
                    [round(float(v), 4) for v in row]
                    for row in self.heatmap.scores[:, :, 0]
                ],
            }
        if self.hierarchy is not None:
            section["layout"] = self.hierarchy.to_dict()
        section["ocr"] = [line.to_dict() for line in self.ocr_lines]
        return section


class ReceiptPipeline:
    """Связка стадий с общими настройками и справочниками"""

    def __init__(
        self,
        settings: Settings,
        receipt_backend: ISegmentationBackend,
        store_db: StoreDatabase,
        ontology: Ontology,
        logo_segmentation: Optional[ISegmentationBackend] = None,
        logo_classifier: Optional[IClassifierBackend] = None,
    ):
        self.settings = settings
        self.receipt_backend = receipt_backend
        self.store_db = store_db
        self.detection = DetectionService(settings.detection)
        self.cropper = CropService(settings.crop, settings.detection)
        self.sign = SignService(
            store_db, settings.sign, logo_segmentation, logo_classifier, settings.layout
        )
        self.layout = LayoutService(settings.layout)
        self.semantics = SemanticsService(
            ontology, settings.semantics, settings.detection.grammar_version
        )

    def _timed_stage(self, stage: str, started: float, status: str = "success") -> None:
        metrics_collector.record_stage(stage, time.perf_counter() - started, status)

    def run(
        self,
        image: GrayImage,
        ocr: Optional[IOcrBackend] = None,
        sample_id: str = "-",
        receipt_backend: Optional[ISegmentationBackend] = None,
    ) -> PipelineResult:
        """
        Прогон одного изображения. Не-чек завершает цепочку после обнаружения;
        ошибки стадий записываются в отчет, а стадия переходит на запасной вариант.
        receipt_backend заменяет бэкенд конвейера для этого изображения (оракул).
        """
        result = PipelineResult(sample_id=sample_id)
        backend = receipt_backend or self.receipt_backend
        reader = OcrService(ocr) if ocr is not None else None

        started = time.perf_counter()
        text = ""
        if reader is not None:
            try:
                text = reader.read_text(image, sample_id)
            except ReceiptForgeError as e:
                result.record_error("ocr", e)
        result.verdict, result.heatmap = self.detection.detect(
            image, backend, text, sample_id
        )
        self._timed_stage("detect", started)
        if not result.verdict.fused:
            log_stage(logger, "detect", sample_id, "Not a receipt, pipeline stops")
            return result

        started = time.perf_counter()
        result.crop = self.cropper.crop(image, result.heatmap, sample_id)
        receipt = result.crop.rectified
        if result.crop.fallback:
            result.stage_errors.append(StageError(
                "crop", result.crop.fallback_reason or "FALLBACK", "Refined crop replaced by wide crop"
            ))
        self._timed_stage("crop", started, "fallback" if result.crop.fallback else "success")

        started = time.perf_counter()
        logo, logo_error = self.sign.find_logo(receipt, sample_id)
        if logo_error:
            result.stage_errors.append(StageError("sign", logo_error, "Logo not found"))
        if logo is not None and logo.orientation == INVERTED:
            receipt = flip180(receipt)
            result.orientation = INVERTED
        result.receipt = receipt

        receipt_text = text
        if reader is not None:
            try:
                result.ocr_lines = reader.read_lines(receipt, None, sample_id)
                receipt_text = lines_to_text(result.ocr_lines)
            except ReceiptForgeError as e:
                result.record_error("ocr", e)
        result.sign = self.sign.decide(receipt_text, logo, logo_error, sample_id)
        self._timed_stage("sign", started)

        started = time.perf_counter()
        priors: List[float] = []
        if result.sign.decision.accepted:
            store = self.store_db.get(result.sign.decision.store_id or "")
            priors = list(store.layout_priors) if store else []
        result.hierarchy, _ = self.layout.analyze(receipt, priors, sample_id)
        self._timed_stage("layout", started)

        if ocr is not None:
            started = time.perf_counter()
            result.extraction = self.semantics.extract(receipt, result.hierarchy, ocr, sample_id)
            self._timed_stage("semantics", started)

        log_stage(
            logger, "pipeline", sample_id,
            f"status={result.status} products={len(result.extraction.products)}",
        )
        return result


def build_pipeline(
    settings: Settings,
    receipt_backend: str = "heuristic",
    store_db: Optional[StoreDatabase] = None,
    ontology: Optional[Ontology] = None,
    logo_templates: Optional[Union[str, Path]] = None,
) -> ReceiptPipeline:
    """
    Конвейер по дескриптору бэкенда чека (`heuristic`, `oracle:<path>`)
    и каталогу шаблонов логотипов; без шаблонов логотип не ищется.
    """
    segmentation: Optional[ISegmentationBackend] = None
    classifier: Optional[IClassifierBackend] = None
    if logo_templates is not None:
        templates = load_logo_templates(logo_templates)
        logo_spec = settings.sign.logo_backend
        segmentation = TemplateLogoSegmentation(templates, spec=logo_spec, pool=settings.sign.logo_pool)
        classifier = TemplateLogoClassifier(
            templates, logo_spec.input_size, settings.sign.softmax_temperature
        )
    return ReceiptPipeline(
        settings,
        create_backend(receipt_backend, settings),
        store_db or StoreDatabase.builtin(),
        ontology or Ontology.builtin(),
        segmentation,
        classifier,
    )


def run_pipeline(
    image: GrayImage,
    pipeline: ReceiptPipeline,
    ocr: Optional[IOcrBackend] = None,
    sample_id: str = "-",
    debug: bool = False,
    receipt_backend: Optional[ISegmentationBackend] = None,
) -> Dict[str, Any]:
    """JSON-отчет по чеку"""
    return pipeline.run(image, ocr, sample_id, receipt_backend).to_dict(debug=debug)
