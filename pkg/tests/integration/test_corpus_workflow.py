"""
Интеграционные тесты: генерация корпуса и оценка
"""
import pytest

from receiptforge.core.settings import load_settings
from receiptforge.harness.corpus import generate_corpus
from receiptforge.harness.evaluation import evaluate

NOISE_RATES = (0.0, 0.05, 0.15, 0.3)


@pytest.fixture
def corpus_root(settings, tmp_path):
    config = load_settings(seed=5, corpus={"receipts": 3, "non_receipts": 1, "stores": 3, "max_rotation": 3.0})
    return generate_corpus(tmp_path / "corpus", config).root


@pytest.fixture(scope="module")
def default_corpus(tmp_path_factory):
    """Корпус по умолчанию: 200 чеков, 100 не-чеков, 10 магазинов, seed 42"""
    config = load_settings(seed=42)
    root = generate_corpus(tmp_path_factory.mktemp("default") / "corpus", config).root
    return root, config


@pytest.fixture(scope="module")
def default_report(default_corpus):
    root, config = default_corpus
    return evaluate(root, config, use_oracle=True, ocr_noise=0.05).to_dict()


@pytest.fixture(scope="module")
def association_by_noise(tmp_path_factory):
    config = load_settings(seed=42, corpus={"receipts": 30, "non_receipts": 0})
    root = generate_corpus(tmp_path_factory.mktemp("noise") / "corpus", config).root
    return [
        evaluate(root, config, use_oracle=True, ocr_noise=rate).to_dict()["association"]
        for rate in NOISE_RATES
    ]


def _rows(report, mode):
    return {row["label"]: row for row in report["detection"][mode]}


class TestCorpusWorkflow:
    """Тест воспроизводимости и оракульной оценки корпуса"""

    def test_evaluation_is_reproducible_on_corpus(self, settings, corpus_root):
        first = evaluate(corpus_root, settings, use_oracle=True, ocr_noise=0.0).to_dict()
        second = evaluate(corpus_root, settings, use_oracle=True, ocr_noise=0.0).to_dict()
        assert first == second
        parallel = evaluate(corpus_root, load_settings(jobs=2), use_oracle=True, ocr_noise=0.0).to_dict()
        assert parallel == first

    def test_oracle_with_clean_ocr_detects_every_receipt_in_corpus(self, settings, corpus_root):
        report = evaluate(corpus_root, settings, use_oracle=True, ocr_noise=0.0).to_dict()
        assert (report["samples"], report["receipts"]) == (4, 3)
        assert report["heatmap_source"] == "oracle"
        fused = _rows(report, "fused")["receipt"]
        assert fused["precision"] == 1.0 and fused["recall"] == 1.0
        assert _rows(report, "text")["receipt"]["recall"] == 1.0
        assert report["sign"]["text_top1"] == 1.0
        association = report["association"]
        assert association["products"] > 0
        assert association["matched"] == association["products"]
        assert report["localization"]["combined"] > 0.5


class TestDefaultCorpus:
    """Тест соотношений метрик на корпусе по умолчанию (OCR-шум 0.05)"""

    def test_fused_detection_recall_on_default_corpus(self, default_report):
        assert (default_report["samples"], default_report["receipts"]) == (300, 200)
        text = _rows(default_report, "text")["receipt"]["recall"]
        image = _rows(default_report, "image")["receipt"]["recall"]
        fused = _rows(default_report, "fused")["receipt"]["recall"]
        assert fused >= max(text, image)
        assert fused >= 0.99

    def test_combined_localization_on_default_corpus(self, default_report):
        localization = default_report["localization"]
        assert localization["combined"] >= localization["edge_only"]
        assert localization["combined"] >= localization["heatmap_only"]
        assert localization["clean_count"] > 0
        assert localization["clean"]["combined"] >= 0.85

    def test_fused_sign_accuracy_on_default_corpus(self, default_report):
        sign = default_report["sign"]
        assert sign["counts"]["accepted"] > 0
        assert sign["fused_accuracy"] >= max(sign["text_top1"], sign["logo_top1"])

    def test_association_degrades_with_noise_on_corpus(self, association_by_noise):
        rates = [entry["rate"] for entry in association_by_noise]
        assert association_by_noise[0]["products"] > 0
        assert rates[0] == 1.0
        assert rates[1] >= 0.75
        assert all(low <= high for high, low in zip(rates, rates[1:]))
        assert rates[-1] < rates[0]
