"""
Распознавание вывески магазина: три текстовых критерия, поиск логотипа и правила слияния
"""
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple

import numpy as np
from scipy import ndimage

from ..core.base import BaseStage
from ..core.exceptions import NoLogo, ReceiptForgeError
from ..core.interfaces import IClassifierBackend, ISegmentationBackend
from ..core.settings import LayoutConfig, SignConfig
from ..database.store_repository import StoreDatabase
from ..imaging.models import BBox, GrayImage
from ..imaging.raster import crop, flip180, resize
from ..utils.phone_normalizer import extract_phone_numbers
from ..utils.text_normalizer import best_window_dice, normalize_text
from .layout_service import (
    adaptive_binarize,
    estimate_line_height,
    horizontal_bands,
    ink_bbox,
    vertical_subblocks,
)

UPRIGHT = "upright"
INVERTED = "inverted"

ACCEPTED = "accepted"
NEEDS_REVIEW = "needs_review"
TEXT_UNANIMOUS = "text_unanimous"
TEXT2_PLUS_LOGO = "text2_plus_logo"

CRITERIA = ("name", "phone", "terminology")

_SCORE_EPS = 1e-12


def _normalized_lines(text: str) -> List[str]:
    return [line for line in (normalize_text(raw) for raw in text.splitlines()) if line]


def name_scores(text: str, store_db: StoreDatabase, config: Optional[SignConfig] = None) -> Dict[str, float]:
    """Лучший оконный Дайс по вариантам названия для каждого магазина"""
    config = config or SignConfig()
    lines = _normalized_lines(text)
    scores: Dict[str, float] = {}
    for store in store_db:
        best = 0.0
        for variant in store.name_variants:
            target = normalize_text(variant)
            for line in lines:
                score = best_window_dice(
                    line, target, config.name_window_slack, config.name_threshold
                )
                best = max(best, score)
        scores[store.store_id] = best
    return scores


def criterion_name(text: str, store_db: StoreDatabase, config: Optional[SignConfig] = None) -> List[str]:
    """Магазин(ы) с максимальным оконным Дайсом не ниже порога; при равенстве - все"""
    config = config or SignConfig()
    scores = name_scores(text, store_db, config)
    passing = {sid: s for sid, s in scores.items() if s >= config.name_threshold}
    if not passing:
        return []
    top = max(passing.values())
    return sorted(sid for sid, s in passing.items() if s >= top - _SCORE_EPS)


def criterion_phone(text: str, store_db: StoreDatabase, config: Optional[SignConfig] = None) -> List[str]:
    """Точное совпадение нормализованного номера с базой"""
    config = config or SignConfig()
    found: Set[str] = set()
    for phone in extract_phone_numbers(text, config.default_country_code):
        store_id = store_db.store_for_phone(phone)
        if store_id is not None:
            found.add(store_id)
    return sorted(found)


def criterion_terminology(text: str, store_db: StoreDatabase, config: Optional[SignConfig] = None) -> List[str]:
    """Слоган, программа лояльности или бренд в окне той же длины с Дайсом >= 0.85"""
    config = config or SignConfig()
    lines = _normalized_lines(text)
    found: Set[str] = set()
    for store in store_db:
        for phrase in store.terminology:
            target = normalize_text(phrase)
            if any(
                best_window_dice(line, target, 0, config.terminology_threshold)
                >= config.terminology_threshold
                for line in lines
            ):
                found.add(store.store_id)
                break
    return sorted(found)


@dataclass(frozen=True)
class SignEvidence:
    """Пары (store_id, вес) по убыванию веса, затем по store_id"""
    entries: Tuple[Tuple[str, int], ...] = ()

    def weight_of(self, store_id: str) -> int:
        for sid, weight in self.entries:
            if sid == store_id:
                return weight
        return 0

    @property
    def top(self) -> Optional[str]:
        return self.entries[0][0] if self.entries else None

    def __len__(self) -> int:
        return len(self.entries)

    def to_list(self) -> List[Dict[str, object]]:
        return [{"store_id": sid, "weight": weight} for sid, weight in self.entries]


def aggregate_text_evidence(*criteria: Iterable[str]) -> SignEvidence:
    """Вес магазина = число критериев, назвавших его"""
    weights: Counter = Counter()
    for stores in criteria:
        weights.update(set(stores))
    ordered = sorted(weights.items(), key=lambda item: (-item[1], item[0]))
    return SignEvidence(tuple((sid, int(w)) for sid, w in ordered))


@dataclass(frozen=True)
class LogoResult:
    """Найденный логотип; box в координатах выровненного чека"""
    box: BBox
    store_id: str
    probability: float
    orientation: str
    used_ratio: str
    ranking: Tuple[Tuple[str, float], ...] = ()

    @property
    def top2(self) -> Tuple[str, ...]:
        return tuple(label for label, _ in self.ranking[:2])

    def to_dict(self) -> Dict[str, object]:
        return {
            "box": self.box.to_dict(),
            "store_id": self.store_id,
            "probability": round(self.probability, 6),
            "orientation": self.orientation,
            "used_ratio": self.used_ratio,
            "ranking": [[label, round(p, 6)] for label, p in self.ranking[:2]],
        }


@dataclass(frozen=True)
class SignDecision:
    outcome: str
    store_id: Optional[str] = None
    basis: Optional[str] = None
    evidence: SignEvidence = field(default_factory=SignEvidence)

    @property
    def accepted(self) -> bool:
        return self.outcome == ACCEPTED

    def to_dict(self) -> Dict[str, object]:
        payload: Dict[str, object] = {"outcome": self.outcome}
        if self.accepted:
            payload.update(store_id=self.store_id, basis=self.basis)
        else:
            payload["evidence"] = self.evidence.to_list()
        return payload


def fuse_sign(evidence: SignEvidence, logo: Optional[LogoResult]) -> SignDecision:
    """
    Принять магазин, если его назвали все три критерия, либо логотип
    совпал с магазином, названным не менее чем двумя критериями
    """
    for store_id, weight in evidence.entries:
        if weight == 3:
            return SignDecision(ACCEPTED, store_id, TEXT_UNANIMOUS, evidence)
    if logo is not None and evidence.weight_of(logo.store_id) >= 2:
        return SignDecision(ACCEPTED, logo.store_id, TEXT2_PLUS_LOGO, evidence)
    return SignDecision(NEEDS_REVIEW, evidence=evidence)


def _candidate_boxes(image: GrayImage, layout: LayoutConfig) -> List[BBox]:
    """Плотные рамки чернил: вся маска, полосы и их подблоки"""
    mask = adaptive_binarize(image, layout.binarize)
    boxes: List[BBox] = []
    whole = ink_bbox(mask)
    if whole is None:
        return boxes
    boxes.append(whole)
    line_height = estimate_line_height(mask, layout.row_ink_min)
    for top, bottom in horizontal_bands(mask, max(1.0, layout.band_gap_factor * line_height), layout.row_ink_min):
        band = ink_bbox(mask, BBox.from_corners(0, top, mask.width, bottom + 1))
        if band is not None:
            boxes.append(band)
        for block in vertical_subblocks(mask, (top, bottom), config=layout, line_height=line_height):
            tight = ink_bbox(mask, block.box)
            if tight is not None:
                boxes.append(tight)
    # без повторов, в порядке появления
    return list(dict.fromkeys(boxes))


def refined_ranking(
    image: GrayImage,
    classifier: IClassifierBackend,
    layout: Optional[LayoutConfig] = None,
) -> Tuple[BBox, List[Tuple[str, float]]]:
    """
    Лучший кандидат: исходный кадр или одна из плотных рамок.
    Возвращает рамку победителя в координатах image и его ранжирование.
    """
    layout = layout or LayoutConfig()
    best_box = BBox(0, 0, image.width, image.height)
    best = classifier.rank(image)
    for box in _candidate_boxes(image, layout):
        ranking = classifier.rank(crop(image, box))
        if ranking[0][1] > best[0][1]:
            best_box, best = box, ranking
    return best_box, best


def refine_logo_crop(
    image: GrayImage,
    classifier: IClassifierBackend,
    layout: Optional[LayoutConfig] = None,
) -> Tuple[str, float]:
    """Максимум вероятности по исходному кадру и его плотным текстовым рамкам"""
    _, ranking = refined_ranking(image, classifier, layout)
    label, probability = ranking[0]
    return label, float(probability)


def _logo_regions(plane: np.ndarray, threshold: float) -> List[List[Tuple[int, int]]]:
    labels, count = ndimage.label(plane >= threshold)
    regions = []
    for index in range(1, count + 1):
        rows, cols = np.nonzero(labels == index)
        regions.append(list(zip(rows.tolist(), cols.tolist())))
    return regions


def _search_half(
    half: GrayImage,
    aspect: float,
    segmentation: ISegmentationBackend,
    classifier: IClassifierBackend,
    config: SignConfig,
    layout: LayoutConfig,
    sample_id: Optional[str],
) -> Optional[Tuple[BBox, List[Tuple[str, float]]]]:
    """Одна попытка: масштабирование, карта логотипа, лучшая по классификатору область"""
    input_size = segmentation.spec.input_size
    sx = input_size / (config.logo_width_fraction * half.width)
    sy = aspect * sx
    scaled = resize(half, round(half.width * sx), round(half.height * sy))
    heatmap = segmentation.infer_heatmap(scaled, sample_id=sample_id)
    plane = heatmap.channel(segmentation.spec.class_labels[0])

    best: Optional[Tuple[BBox, List[Tuple[str, float]]]] = None
    for cells in _logo_regions(plane, config.logo_threshold):
        window = heatmap.cell_rect(*cells[0])
        for i, j in cells[1:]:
            window = window.union(heatmap.cell_rect(i, j))
        box = BBox.from_corners(
            int(np.floor(window.x / sx)), int(np.floor(window.y / sy)),
            int(np.ceil(window.x2 / sx)), int(np.ceil(window.y2 / sy)),
        ).clamp(half.width, half.height)
        inner, ranking = refined_ranking(crop(half, box), classifier, layout)
        box = BBox(box.x + inner.x, box.y + inner.y, inner.w, inner.h)
        if best is None or ranking[0][1] > best[1][0][1]:
            best = (box, ranking)
    return best


def locate_logo(
    receipt: GrayImage,
    segmentation: ISegmentationBackend,
    classifier: IClassifierBackend,
    config: Optional[SignConfig] = None,
    layout: Optional[LayoutConfig] = None,
    sample_id: Optional[str] = None,
) -> LogoResult:
    """
    Четыре попытки по порядку: верх/long, верх/short, низ/long, низ/short.

    Нижняя половина просматривается повернутой на 180°: логотип перевернутого
    чека стоит внизу вверх ногами. Рамка возвращается в исходных координатах чека.
    """
    config = config or SignConfig()
    layout = layout or LayoutConfig()
    height, width = receipt.height, receipt.width
    upper_rows = max(1, (height + 1) // 2)
    lower_top = min(height // 2, height - 1)
    upper = crop(receipt, BBox(0, 0, width, upper_rows))
    lower = flip180(crop(receipt, BBox(0, lower_top, width, height - lower_top)))
    ratios = (("long", config.long_ratio), ("short", config.short_ratio))

    for orientation, half in ((UPRIGHT, upper), (INVERTED, lower)):
        for ratio_name, aspect in ratios:
            found = _search_half(
                half, aspect, segmentation, classifier, config, layout, sample_id
            )
            if found is None:
                continue
            box, ranking = found
            if orientation == INVERTED:
                box = BBox(
                    half.width - box.x2,
                    lower_top + half.height - box.y2,
                    box.w,
                    box.h,
                )
            return LogoResult(
                box=box,
                store_id=ranking[0][0],
                probability=float(ranking[0][1]),
                orientation=orientation,
                used_ratio=ratio_name,
                ranking=tuple((label, float(p)) for label, p in ranking),
            )
    raise NoLogo()


@dataclass(frozen=True)
class SignReport:
    """Критерии, логотип и итоговое решение по одному чеку"""
    criteria: Dict[str, List[str]]
    evidence: SignEvidence
    logo: Optional[LogoResult]
    decision: SignDecision
    logo_error: Optional[str] = None

    def to_dict(self) -> Dict[str, object]:
        return {
            "criteria": {name: list(self.criteria.get(name, [])) for name in CRITERIA},
            "evidence": self.evidence.to_list(),
            "logo": self.logo.to_dict() if self.logo else None,
            "logo_error": self.logo_error,
            "decision": self.decision.to_dict(),
        }


class SignService(BaseStage):
    """Шаг 3: вывеска магазина"""

    stage_name = "sign"

    def __init__(
        self,
        store_db: StoreDatabase,
        config: Optional[SignConfig] = None,
        segmentation: Optional[ISegmentationBackend] = None,
        classifier: Optional[IClassifierBackend] = None,
        layout: Optional[LayoutConfig] = None,
        logger=None,
    ):
        super().__init__(logger)
        self.store_db = store_db
        self.config = config or SignConfig()
        self.segmentation = segmentation
        self.classifier = classifier
        self.layout = layout or LayoutConfig()

    @property
    def has_logo_backends(self) -> bool:
        return self.segmentation is not None and self.classifier is not None

    def find_logo(
        self,
        receipt: GrayImage,
        sample_id: Optional[str] = None,
    ) -> Tuple[Optional[LogoResult], Optional[str]]:
        """Логотип или код ошибки (NO_LOGO, ...); без бэкендов - (None, None)"""
        if not self.has_logo_backends:
            return None, None
        try:
            with self.timed("locate_logo", sample_id):
                logo = locate_logo(
                    receipt, self.segmentation, self.classifier,
                    self.config, self.layout, sample_id,
                )
        except ReceiptForgeError as e:
            self.logger.info(
                f"No logo: {e.message}",
                extra={'stage': self.stage_name, 'sample_id': sample_id or '-'},
            )
            return None, e.error_code
        return logo, None

    def decide(
        self,
        text: str,
        logo: Optional[LogoResult] = None,
        logo_error: Optional[str] = None,
        sample_id: Optional[str] = None,
    ) -> SignReport:
        with self.timed("text_criteria", sample_id):
            criteria = {
                "name": criterion_name(text, self.store_db, self.config),
                "phone": criterion_phone(text, self.store_db, self.config),
                "terminology": criterion_terminology(text, self.store_db, self.config),
            }
        evidence = aggregate_text_evidence(*(criteria[name] for name in CRITERIA))
        decision = fuse_sign(evidence, logo)
        self.logger.debug(
            f"evidence={evidence.entries} logo={logo.store_id if logo else None} "
            f"outcome={decision.outcome}",
            extra={'stage': self.stage_name, 'sample_id': sample_id or '-'},
        )
        return SignReport(criteria, evidence, logo, decision, logo_error)

    def recognize(
        self,
        receipt: GrayImage,
        text: str,
        sample_id: Optional[str] = None,
    ) -> SignReport:
        logo, logo_error = self.find_logo(receipt, sample_id)
        return self.decide(text, logo, logo_error, sample_id)
