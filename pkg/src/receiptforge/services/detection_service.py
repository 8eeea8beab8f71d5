"""
Сервис обнаружения чека: текстовый путь, путь по изображению и их слияние (ИЛИ)
"""
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from ..backends.models import HeatMap
from ..core.base import BaseStage
from ..core.interfaces import ISegmentationBackend
from ..core.settings import DetectionConfig
from ..imaging.models import GrayImage
from ..utils.validators import get_product_line_pattern


@dataclass(frozen=True)
class ProductLineMatch:
    """Строка текста, удовлетворяющая грамматике товарной строки"""
    line_index: int
    text: str
    label: str
    price: str


@dataclass(frozen=True)
class DetectionVerdict:
    """Вердикт receipt / not-receipt"""
    text_hit: bool
    image_hit: bool
    fused: bool
    positive_ratio: float
    product_line_count: int

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


def find_product_lines(text: str, grammar_version: str = "product-line-v1") -> List[ProductLineMatch]:
    """Все строки текста, совпадающие с якорной грамматикой товарной строки"""
    if not text:
        return []
    pattern = get_product_line_pattern(grammar_version)
    matches: List[ProductLineMatch] = []
    for index, raw in enumerate(text.splitlines()):
        line = raw.rstrip()
        match = pattern.match(line)
        if match is None:
            continue
        price = line[match.end("gap"):]
        matches.append(ProductLineMatch(index, line, match.group("label"), price))
    return matches


def detect_by_text(text: str, grammar_version: str = "product-line-v1") -> bool:
    """Чек найден, если в тексте есть хотя бы одна товарная строка"""
    return len(find_product_lines(text, grammar_version)) >= 1


def detect_by_image(heatmap: HeatMap, config: Optional[DetectionConfig] = None) -> Tuple[bool, float]:
    """
    Порог по карте целевого класса (score >= tau включительно) и доля положительных ячеек.
    """
    config = config or DetectionConfig()
    plane = heatmap.channel(config.target_class)
    positive = int((plane >= config.heat_threshold).sum())
    ratio = positive / plane.size
    return ratio >= config.receipt_ratio, ratio


def fuse_detection(text_hit: bool, image_hit: bool) -> bool:
    return bool(text_hit or image_hit)


@dataclass(frozen=True)
class ClassCounts:
    """TP/FP/FN одного класса и производные точность и полнота"""
    label: str
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        predicted = self.tp + self.fp
        return self.tp / predicted if predicted else 0.0

    @property
    def recall(self) -> float:
        positives = self.tp + self.fn
        return self.tp / positives if positives else 0.0

    def to_dict(self) -> Dict[str, object]:
        return {
            "label": self.label,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": round(self.precision, 6),
            "recall": round(self.recall, 6),
        }


def class_counts(truth: Sequence[str], predicted: Sequence[str], label: str) -> ClassCounts:
    """Подсчет TP/FP/FN класса label по парам (истина, предсказание)"""
    tp = fp = fn = 0
    for expected, actual in zip(truth, predicted):
        if actual == label and expected == label:
            tp += 1
        elif actual == label:
            fp += 1
        elif expected == label:
            fn += 1
    return ClassCounts(label, tp, fp, fn)


def per_class_counts(
    truth: Sequence[str],
    predicted: Sequence[str],
    labels: Iterable[str] = ("receipt", "not_receipt"),
) -> List[ClassCounts]:
    return [class_counts(truth, predicted, label) for label in labels]


class DetectionService(BaseStage):
    """Шаг 1: чек или не чек"""

    stage_name = "detect"

    def __init__(self, config: Optional[DetectionConfig] = None, logger=None):
        super().__init__(logger)
        self.config = config or DetectionConfig()

    def detect(
        self,
        image: GrayImage,
        backend: ISegmentationBackend,
        text: str = "",
        sample_id: Optional[str] = None,
    ) -> Tuple[DetectionVerdict, HeatMap]:
        """Вердикт и тепловая карта (она нужна широкому кадрированию)"""
        with self.timed("detect", sample_id):
            lines = find_product_lines(text, self.config.grammar_version)
            heatmap = backend.infer_heatmap(image, sample_id=sample_id)
            image_hit, ratio = detect_by_image(heatmap, self.config)
            text_hit = len(lines) >= 1
            verdict = DetectionVerdict(
                text_hit=text_hit,
                image_hit=image_hit,
                fused=fuse_detection(text_hit, image_hit),
                positive_ratio=ratio,
                product_line_count=len(lines),
            )
        self.logger.debug(
            f"text_hit={text_hit} image_hit={image_hit} ratio={ratio:.3f}",
            extra={'stage': self.stage_name, 'sample_id': sample_id or '-'},
        )
        return verdict, heatmap
