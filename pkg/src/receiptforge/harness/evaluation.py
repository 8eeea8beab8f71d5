"""
Оценка конвейера на синтетическом корпусе

Для каждого образца прогоняется полный конвейер и три варианта локализации
(только края, только тепловая карта, вместе). Итоговый отчет собирается
из счетчиков, сумма которых не зависит от порядка образцов.
"""
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from ..core.exceptions import EmptyCorpus
from ..core.interfaces import IOcrBackend, ISegmentationBackend
from ..core.logging import get_logger
from ..core.settings import Settings
from ..imaging.geometry import iou
from ..monitoring.metrics import metrics_collector
from ..services.detection_service import per_class_counts
from ..services.ocr_service import NoisyOcrBackend, StubOcrBackend
from ..services.pipeline_service import ReceiptPipeline, build_pipeline
from .corpus import NOT_RECEIPT, RECEIPT, Corpus, CorpusSample, load_corpus

logger = get_logger(__name__)

CLASSES = (RECEIPT, NOT_RECEIPT)
CLEAN_MAX_ROTATION = 5.0
LOCALIZATION_MODES = ("edge_only", "heatmap_only", "combined")


def _label(hit: bool) -> str:
    return RECEIPT if hit else NOT_RECEIPT


@dataclass
class SampleOutcome:
    """Все, что оценка берет из одного образца"""
    sample_id: str
    truth: str
    text: str
    image: str
    fused: str
    clean: bool = False
    iou: Dict[str, float] = field(default_factory=dict)
    truth_store: Optional[str] = None
    text_top1: Optional[str] = None
    logo_top2: Tuple[str, ...] = ()
    accepted_store: Optional[str] = None
    truth_concepts: List[str] = field(default_factory=list)
    matched_concepts: List[str] = field(default_factory=list)


def sample_ocr(sample: CorpusSample, settings: Settings, noise: Optional[float] = None) -> IOcrBackend:
    """Эталонный OCR образца, зашумленный с частотой из параметров образца (или noise)"""
    backend: IOcrBackend = StubOcrBackend.load(sample.ocr_path, settings.ocr.min_overlap)
    rate = sample.spec.ocr_noise_rate if noise is None else noise
    if rate > 0.0:
        backend = NoisyOcrBackend(backend, rate, seed=sample.spec.seed)
    return backend


def evaluate_sample(
    sample: CorpusSample,
    pipeline: ReceiptPipeline,
    settings: Settings,
    use_oracle: bool = False,
    ocr_noise: Optional[float] = None,
) -> SampleOutcome:
    image = sample.load_image()
    truth = sample.load_truth()
    backend: Optional[ISegmentationBackend] = sample.oracle_backend() if use_oracle else None
    result = pipeline.run(image, sample_ocr(sample, settings, ocr_noise), sample.sample_id, backend)
    verdict = result.verdict

    outcome = SampleOutcome(
        sample_id=sample.sample_id,
        truth=_label(truth.present),
        text=_label(verdict.text_hit),
        image=_label(verdict.image_hit),
        fused=_label(verdict.fused),
    )
    if not truth.present or truth.quad is None:
        return outcome

    outcome.clean = (
        sample.spec.background == "plain" and abs(sample.spec.rotation) <= CLEAN_MAX_ROTATION
    )
    target = truth.quad.bbox()
    cropper = pipeline.cropper
    edge = cropper.edge_only(image, sample.sample_id)
    wide, reason = cropper.wide_box(image, result.heatmap)
    combined = result.crop or cropper.crop(image, result.heatmap, sample.sample_id)
    outcome.iou = {
        "edge_only": iou(edge.quad.bbox(), target),
        "heatmap_only": 0.0 if reason else iou(wide, target),
        "combined": iou(combined.quad.bbox(), target),
    }

    outcome.truth_store = truth.store_id
    outcome.truth_concepts = [product.concept_id for product in truth.products]
    if result.sign is not None:
        outcome.text_top1 = result.sign.evidence.top
        if result.sign.logo is not None:
            outcome.logo_top2 = result.sign.logo.top2
        if result.sign.decision.accepted:
            outcome.accepted_store = result.sign.decision.store_id
    outcome.matched_concepts = [
        item.match.concept_id for item in result.extraction.products if item.match.matched
    ]
    return outcome


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def _ratio(numerator: int, denominator: int) -> float:
    return numerator / denominator if denominator else 0.0


def association_counts(truth: Sequence[str], matched: Sequence[str]) -> Tuple[int, int]:
    """(верно сопоставленные, всего по разметке): сумма min(count) по понятиям"""
    expected, found = Counter(truth), Counter(matched)
    return sum(min(count, found[concept]) for concept, count in expected.items()), len(truth)


@dataclass
class EvalReport:
    samples: int
    receipts: int
    detection: Dict[str, List[Dict[str, Any]]]
    localization: Dict[str, Any]
    sign: Dict[str, Any]
    association: Dict[str, Any]
    seed: int = 0
    use_oracle: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "samples": self.samples,
            "receipts": self.receipts,
            "seed": self.seed,
            "heatmap_source": "oracle" if self.use_oracle else "backend",
            "detection": self.detection,
            "localization": self.localization,
            "sign": self.sign,
            "association": self.association,
        }


def summarize(outcomes: Sequence[SampleOutcome], seed: int = 0, use_oracle: bool = False) -> EvalReport:
    """Свертка результатов образцов в отчет"""
    truth = [o.truth for o in outcomes]
    detection = {
        mode: [counts.to_dict() for counts in per_class_counts(truth, [getattr(o, mode) for o in outcomes], CLASSES)]
        for mode in ("text", "image", "fused")
    }

    receipts = [o for o in outcomes if o.truth == RECEIPT and o.iou]
    clean = [o for o in receipts if o.clean]
    localization: Dict[str, Any] = {
        mode: round(_mean([o.iou[mode] for o in receipts]), 6) for mode in LOCALIZATION_MODES
    }
    localization["clean"] = {
        mode: round(_mean([o.iou[mode] for o in clean]), 6) for mode in LOCALIZATION_MODES
    }
    localization["clean_count"] = len(clean)

    n = len(receipts)
    accepted = [o for o in receipts if o.accepted_store is not None]
    text_hits = sum(1 for o in receipts if o.text_top1 == o.truth_store)
    logo_top1 = sum(1 for o in receipts if o.logo_top2[:1] == (o.truth_store,))
    logo_top2 = sum(1 for o in receipts if o.truth_store in o.logo_top2)
    fused_hits = sum(1 for o in accepted if o.accepted_store == o.truth_store)
    sign = {
        "text_top1": round(_ratio(text_hits, n), 6),
        "logo_top1": round(_ratio(logo_top1, n), 6),
        "logo_top2": round(_ratio(logo_top2, n), 6),
        "fused_accuracy": round(_ratio(fused_hits, len(accepted)), 6),
        "fused_top1": round(_ratio(fused_hits, n), 6),
        "acceptance_rate": round(_ratio(len(accepted), n), 6),
        "counts": {
            "receipts": n,
            "accepted": len(accepted),
            "text_correct": text_hits,
            "logo_top1_correct": logo_top1,
            "logo_top2_correct": logo_top2,
            "fused_correct": fused_hits,
        },
    }

    matched = total = 0
    for o in receipts:
        hit, expected = association_counts(o.truth_concepts, o.matched_concepts)
        matched += hit
        total += expected
    association = {"rate": round(_ratio(matched, total), 6), "matched": matched, "products": total}

    return EvalReport(len(outcomes), n, detection, localization, sign, association, seed, use_oracle)


# Конвейер процесса-исполнителя
_worker: Dict[str, Any] = {}


def _init_worker(settings: Settings, root: str, use_oracle: bool, ocr_noise: Optional[float]) -> None:
    corpus = load_corpus(root)
    _worker.update(
        settings=settings,
        pipeline=corpus_pipeline(corpus, settings),
        use_oracle=use_oracle,
        ocr_noise=ocr_noise,
    )


def _evaluate_in_worker(sample: CorpusSample) -> SampleOutcome:
    return evaluate_sample(
        sample, _worker["pipeline"], _worker["settings"], _worker["use_oracle"], _worker["ocr_noise"]
    )


def corpus_pipeline(corpus: Corpus, settings: Settings) -> ReceiptPipeline:
    logos = corpus.logos_dir if corpus.logos_dir.is_dir() else None
    return build_pipeline(settings, "heuristic", corpus.stores, corpus.ontology, logos)


def evaluate(
    root: Union[str, Path],
    settings: Settings,
    use_oracle: bool = False,
    ocr_noise: Optional[float] = None,
) -> EvalReport:
    """
    Оценка корпуса. use_oracle подставляет сохраненные тепловые карты вместо
    бэкенда; ocr_noise заменяет частоту шума OCR из параметров образцов.
    """
    corpus = load_corpus(root)
    if not corpus.samples:
        raise EmptyCorpus(str(root))

    with metrics_collector.timer("eval.corpus"):
        if settings.jobs > 1 and len(corpus.samples) > 1:
            with ProcessPoolExecutor(
                max_workers=settings.jobs,
                initializer=_init_worker,
                initargs=(settings, str(corpus.root), use_oracle, ocr_noise),
            ) as pool:
                outcomes = list(pool.map(_evaluate_in_worker, corpus.samples, chunksize=4))
        else:
            pipeline = corpus_pipeline(corpus, settings)
            outcomes = [
                evaluate_sample(sample, pipeline, settings, use_oracle, ocr_noise)
                for sample in corpus.samples
            ]

    report = summarize(outcomes, corpus.seed, use_oracle)
    logger.info(
        f"Evaluated {report.samples} samples ({report.receipts} receipts)",
        extra={'stage': 'eval', 'action': 'evaluate'},
    )
    return report
