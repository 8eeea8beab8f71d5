"""
Стадии конвейера чтения чека
"""
from .crop_service import CropResult, CropService
from .detection_service import DetectionService, DetectionVerdict
from .error_handler import ErrorHandler, ExitCode, error_handler
from .layout_service import LayoutHierarchy, LayoutService, TextBlock
from .ocr_service import NoisyOcrBackend, OcrService, StubOcrBackend, TextLine, TextSidecarOcrBackend
from .pipeline_service import PipelineResult, ReceiptPipeline, build_pipeline, run_pipeline
from .semantics_service import MatchResult, ProductLine, SemanticsService
from .sign_service import LogoResult, SignDecision, SignEvidence, SignService

__all__ = [
    "CropResult",
    "CropService",
    "DetectionService",
    "DetectionVerdict",
    "ErrorHandler",
    "ExitCode",
    "LayoutHierarchy",
    "LayoutService",
    "LogoResult",
    "MatchResult",
    "NoisyOcrBackend",
    "OcrService",
    "PipelineResult",
    "ProductLine",
    "ReceiptPipeline",
    "SemanticsService",
    "SignDecision",
    "SignEvidence",
    "SignService",
    "StubOcrBackend",
    "TextBlock",
    "TextLine",
    "TextSidecarOcrBackend",
    "build_pipeline",
    "error_handler",
    "run_pipeline",
]
