"""
Тесты генератора синтетических чеков
"""
import numpy as np
import pytest

from receiptforge.core.settings import BackendSpec, CorpusConfig
from receiptforge.harness.synth import (
    GroundTruth,
    SyntheticSpec,
    format_cents,
    format_phone,
    generate,
    oracle_heatmap,
    oracle_spec,
    sample_spec,
    short_label,
)
from receiptforge.imaging.models import BBox
from receiptforge.services.crop_service import wide_crop
from receiptforge.services.ocr_service import OCR_TRUTH_SCHEMA
from receiptforge.services.semantics_service import match_concept
from receiptforge.services.sign_service import INVERTED, UPRIGHT


def _spec(**kwargs) -> SyntheticSpec:
    data = {"sample_id": "r-1", "store_id": "s01", "product_count": 4, "seed": 5}
    data.update(kwargs)
    return SyntheticSpec(**data)


class TestFormatting:
    """Тест печатных форм цен и телефонов"""

    def test_cents(self):
        assert format_cents(1240) == "12,40"
        assert format_cents(5) == "0,05"

    def test_phone(self):
        assert format_phone("0450096543", True) == "04.50.09.65.43"
        assert format_phone("0450096543", False) == "04 50 09 65 43"


class TestShortLabel:
    """Тест коротких меток понятий"""

    def test_labels_match_back(self, ontology):
        rng = np.random.default_rng(0)
        labels = {c.id: short_label(c.id, ontology, rng) for c in ontology}
        printable = {cid: label for cid, label in labels.items() if label is not None}
        assert len(printable) >= len(labels) // 2
        for concept_id, label in printable.items():
            assert len(label) <= 16
            assert match_concept(label, ontology).concept_id == concept_id

    def test_unknown_concept(self, ontology):
        assert short_label("c999", ontology, np.random.default_rng(0)) is None


class TestGenerate:
    """Тест генерации образца"""

    def test_same_spec_same_sample(self, stores, ontology):
        first = generate(_spec(rotation=4.5, background="textured"), stores, ontology)
        second = generate(_spec(rotation=4.5, background="textured"), stores, ontology)
        assert first.image == second.image
        assert first.truth.to_dict() == second.truth.to_dict()

    def test_upright_truth(self, stores, ontology):
        sample = generate(_spec(), stores, ontology)
        truth = sample.truth
        assert truth.present and truth.store_id == "s01"
        assert truth.orientation == UPRIGHT
        assert sample.image.shape == (911, 683)

        paper_w, paper_h = truth.paper_size
        box = truth.quad.bbox()
        assert (box.w, box.h) == (paper_w, paper_h)
        assert sample.coverage.sum() == pytest.approx(paper_w * paper_h)
        assert truth.logo_box.y == 16
        assert 1 <= len(truth.products) <= 4
        assert truth.lines[0].text in stores.get("s01").name_variants

    def test_inverted_logo_box(self, stores, ontology):
        truth = generate(_spec(logo_placement="bottom-inverted"), stores, ontology).truth
        assert truth.orientation == INVERTED
        _, paper_h = truth.paper_size
        assert truth.logo_box.y2 == paper_h - 16

    def test_no_logo(self, stores, ontology):
        assert generate(_spec(logo_placement="none"), stores, ontology).truth.logo_box is None

    def test_not_receipt(self, stores, ontology):
        sample = generate(SyntheticSpec(sample_id="n-1", seed=3), stores, ontology)
        assert not sample.truth.present
        assert sample.truth.quad is None
        assert not sample.coverage.any()

    def test_truth_serialization(self, stores, ontology):
        truth = generate(_spec(rotation=-3.0), stores, ontology).truth
        assert GroundTruth.from_dict(truth.to_dict()).to_dict() == truth.to_dict()
        payload = truth.ocr_payload()
        assert payload["schema"] == OCR_TRUTH_SCHEMA
        assert [payload["width"], payload["height"]] == list(truth.paper_size)
        assert len(payload["lines"]) == len(truth.lines)


class TestOracleHeatmap:
    """Тест тепловой карты-оракула"""

    def test_coverage_per_cell(self):
        coverage = np.zeros((908, 681))
        coverage[:227, :227] = 1.0
        coverage[227:454, 227:454] = 0.5
        heatmap = oracle_heatmap(coverage, BackendSpec())
        receipt = heatmap.channel("receipt")
        assert receipt.shape == (4, 3)
        assert receipt[0, 0] == pytest.approx(1.0)
        assert receipt[1, 1] == pytest.approx(0.5)
        assert receipt.sum() == pytest.approx(1.5)

    def test_corpus_windows_reach_past_paper(self):
        spec = oracle_spec(BackendSpec(), CorpusConfig())
        assert (spec.stride, spec.input_size) == (57, 227)
        coverage = np.zeros((911, 683))
        coverage[100:800, 150:570] = 1.0
        heatmap = oracle_heatmap(coverage, spec)
        assert heatmap.channel("receipt").shape == (13, 9)
        box = wide_crop(heatmap, (683, 911), margin=0.0)
        assert box == BBox.from_corners(114, 57, 626, 854)


class TestSampleSpec:
    """Тест случайных параметров образцов"""

    def test_deterministic_and_in_range(self):
        config = CorpusConfig()
        store_ids = ["s01", "s02", "s03"]
        first = [sample_spec(f"r{k}", store_ids, k, True, config, np.random.default_rng(9)) for k in range(4)]
        second = [sample_spec(f"r{k}", store_ids, k, True, config, np.random.default_rng(9)) for k in range(4)]
        assert first == second
        assert [spec.store_id for spec in first] == ["s01", "s02", "s03", "s01"]
        for spec in first:
            assert 3 <= spec.product_count <= 8
            assert abs(spec.rotation) <= config.max_rotation

    def test_non_receipt(self):
        spec = sample_spec("n0", ["s01"], 0, False, CorpusConfig(), np.random.default_rng(1))
        assert spec.store_id is None and not spec.is_receipt
