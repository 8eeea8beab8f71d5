"""
Моки бэкендов для тестов
"""
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from receiptforge.backends.models import HeatMap
from receiptforge.core.exceptions import DecodeError
from receiptforge.core.interfaces import IClassifierBackend, IOcrBackend, ISegmentationBackend
from receiptforge.core.settings import BackendSpec
from receiptforge.imaging.models import BBox, GrayImage
from receiptforge.services.ocr_service import TextLine


class FixedHeatmapBackend(ISegmentationBackend):
    """Отдает заранее заданную карту вероятностей первого класса"""

    def __init__(self, receipt_scores, spec: Optional[BackendSpec] = None):
        self._spec = spec or BackendSpec()
        self.scores = np.asarray(receipt_scores, dtype=np.float64)
        self.calls = 0

    @property
    def spec(self) -> BackendSpec:
        return self._spec

    def infer_heatmap(self, image: GrayImage, sample_id: Optional[str] = None) -> HeatMap:
        self.calls += 1
        return HeatMap.from_probabilities(self.scores, self._spec)


class FixedClassifier(IClassifierBackend):
    """Классификатор с одинаковым ответом на любое изображение"""

    def __init__(self, ranking: Sequence[Tuple[str, float]]):
        self.ranking = sorted(ranking, key=lambda item: (-item[1], item[0]))

    @property
    def class_labels(self) -> List[str]:
        return sorted(label for label, _ in self.ranking)

    def rank(self, image: GrayImage) -> List[Tuple[str, float]]:
        return list(self.ranking)


class FailingOcrBackend(IOcrBackend):
    """OCR, который всегда падает ошибкой домена"""

    def recognize(self, image, region=None, sample_id=None) -> List[TextLine]:
        raise DecodeError("OCR engine unavailable", path="ocr")


class ScriptedOcrBackend(IOcrBackend):
    """Обертка над OCR, подменяющая тексты строк по словарю"""

    def __init__(self, inner: IOcrBackend, replacements: Dict[str, str]):
        self.inner = inner
        self.replacements = dict(replacements)

    def recognize(self, image, region: Optional[BBox] = None, sample_id=None) -> List[TextLine]:
        return [
            TextLine(self.replacements.get(line.text, line.text), line.confidence, line.box)
            for line in self.inner.recognize(image, region, sample_id)
        ]


class RegionOcrBackend(IOcrBackend):
    """OCR с заранее заданным текстом для каждой области"""

    def __init__(self, texts: Dict[BBox, str]):
        self.texts = dict(texts)
        self.regions: List[BBox] = []

    def recognize(self, image, region: Optional[BBox] = None, sample_id=None) -> List[TextLine]:
        self.regions.append(region)
        text = self.texts.get(region)
        return [] if text is None else [TextLine(text, 1.0, region)]
