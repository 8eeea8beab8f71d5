"""
Синтетический корпус на диске

    manifest.json            схема corpus-v1, seed, параметры, список образцов
    stores.json              база магазинов
    ontology.json            онтология
    abbreviations.tsv        сокращения
    logos/<store_id>_0.pgm   шаблоны логотипов
    <id>.pgm / <id>.gt.json / <id>.ocr.json / <id>.heatmap
"""
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError as PydanticValidationError

from ..backends.oracle import FileOracleBackend, write_heatmap_sidecar
from ..core.exceptions import EmptyCorpus, OracleLoadError
from ..core.logging import get_logger
from ..core.settings import Settings
from ..database.ontology_repository import Ontology
from ..database.store_repository import StoreDatabase
from ..imaging.codecs import load_image, save_pgm
from ..imaging.models import GrayImage
from .logos import write_logo_templates
from .synth import GroundTruth, SyntheticSpec, generate, oracle_heatmap, oracle_spec, sample_spec

logger = get_logger(__name__)

MANIFEST_SCHEMA = "corpus-v1"
RECEIPT = "receipt"
NOT_RECEIPT = "not_receipt"


def dump_json(payload: Any) -> str:
    """Детерминированный JSON: сортированные ключи, без лишних пробелов в конце"""
    return json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class CorpusSample:
    """Образец корпуса и пути его файлов"""
    spec: SyntheticSpec
    kind: str
    root: Path

    @property
    def sample_id(self) -> str:
        return self.spec.sample_id

    @property
    def image_path(self) -> Path:
        return self.root / f"{self.sample_id}.pgm"

    @property
    def truth_path(self) -> Path:
        return self.root / f"{self.sample_id}.gt.json"

    @property
    def ocr_path(self) -> Path:
        return self.root / f"{self.sample_id}.ocr.json"

    @property
    def heatmap_path(self) -> Path:
        return self.root / f"{self.sample_id}.heatmap"

    def load_image(self) -> GrayImage:
        return load_image(self.image_path)

    def load_truth(self) -> GroundTruth:
        try:
            return GroundTruth.from_dict(json.loads(self.truth_path.read_text(encoding="utf-8")))
        except FileNotFoundError:
            raise OracleLoadError(f"Ground truth not found: {self.truth_path}", path=str(self.truth_path))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise OracleLoadError(f"Malformed ground truth {self.truth_path}: {e}", path=str(self.truth_path))

    def oracle_backend(self) -> FileOracleBackend:
        return FileOracleBackend(self.heatmap_path)


@dataclass
class Corpus:
    root: Path
    seed: int
    samples: List[CorpusSample]
    stores: StoreDatabase
    ontology: Ontology

    @property
    def logos_dir(self) -> Path:
        return self.root / "logos"

    def __len__(self) -> int:
        return len(self.samples)


def plan_corpus(settings: Settings, stores: StoreDatabase) -> List[Tuple[str, SyntheticSpec]]:
    """
    Спецификации образцов: сначала чеки r0000.., затем n0000..
    Магазины идут по кругу среди первых `corpus.stores`.
    """
    config = settings.corpus
    store_ids = stores.store_ids[:config.stores]
    rng = np.random.default_rng(settings.seed)
    plan: List[Tuple[str, SyntheticSpec]] = []
    for index in range(config.receipts):
        plan.append((RECEIPT, sample_spec(f"r{index:04d}", store_ids, index, True, config, rng)))
    for index in range(config.non_receipts):
        plan.append((NOT_RECEIPT, sample_spec(f"n{index:04d}", store_ids, index, False, config, rng)))
    return plan


# Состояние процесса-исполнителя
_worker: Dict[str, Any] = {}


def _init_worker(settings: Settings, stores: StoreDatabase, ontology: Ontology, root: Path) -> None:
    _worker.update(settings=settings, stores=stores, ontology=ontology, root=root)


def write_sample(
    spec: SyntheticSpec,
    root: Path,
    settings: Settings,
    stores: StoreDatabase,
    ontology: Ontology,
) -> str:
    sample = generate(spec, stores, ontology, settings.corpus)
    save_pgm(sample.image, root / f"{spec.sample_id}.pgm")
    (root / f"{spec.sample_id}.gt.json").write_text(dump_json(sample.truth.to_dict()), encoding="utf-8")
    (root / f"{spec.sample_id}.ocr.json").write_text(dump_json(sample.truth.ocr_payload()), encoding="utf-8")
    write_heatmap_sidecar(
        oracle_heatmap(sample.coverage, oracle_spec(settings.receipt_backend, settings.corpus)),
        root / f"{spec.sample_id}.heatmap",
    )
    return spec.sample_id


def _write_in_worker(spec: SyntheticSpec) -> str:
    return write_sample(
        spec, _worker["root"], _worker["settings"], _worker["stores"], _worker["ontology"]
    )


def generate_corpus(
    root: Union[str, Path],
    settings: Settings,
    stores: Optional[StoreDatabase] = None,
    ontology: Optional[Ontology] = None,
) -> Corpus:
    """Сгенерировать корпус; при jobs > 1 образцы пишутся пулом процессов"""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    stores = stores or StoreDatabase.builtin()
    ontology = ontology or Ontology.builtin()

    plan = plan_corpus(settings, stores)
    stores.save(root / "stores.json")
    ontology.save(root / "ontology.json")
    ontology.save_abbreviations(root / "abbreviations.tsv")
    write_logo_templates(stores, root / "logos")

    specs = [spec for _, spec in plan]
    if settings.jobs > 1 and len(specs) > 1:
        with ProcessPoolExecutor(
            max_workers=settings.jobs,
            initializer=_init_worker,
            initargs=(settings, stores, ontology, root),
        ) as pool:
            list(pool.map(_write_in_worker, specs, chunksize=8))
    else:
        for spec in specs:
            write_sample(spec, root, settings, stores, ontology)

    manifest = {
        "schema": MANIFEST_SCHEMA,
        "seed": settings.seed,
        "corpus": settings.corpus.model_dump(),
        "samples": [
            {"id": spec.sample_id, "kind": kind, "spec": spec.model_dump()} for kind, spec in plan
        ],
    }
    (root / "manifest.json").write_text(dump_json(manifest), encoding="utf-8")
    logger.info(
        f"Corpus written to {root}: {len(plan)} samples",
        extra={'stage': 'synth', 'action': 'generate_corpus'},
    )
    return Corpus(root, settings.seed, [CorpusSample(spec, kind, root) for kind, spec in plan], stores, ontology)


def load_corpus(root: Union[str, Path]) -> Corpus:
    """Прочитать manifest.json и справочники корпуса"""
    root = Path(root)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise EmptyCorpus(str(root))
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise OracleLoadError(f"Cannot read corpus manifest {manifest_path}: {e}", path=str(manifest_path))
    if not isinstance(manifest, dict) or manifest.get("schema") != MANIFEST_SCHEMA:
        raise OracleLoadError(f"{manifest_path} is not a '{MANIFEST_SCHEMA}' manifest", path=str(manifest_path))

    try:
        samples = [
            CorpusSample(SyntheticSpec(**entry["spec"]), entry["kind"], root)
            for entry in manifest.get("samples", [])
        ]
    except (KeyError, TypeError, PydanticValidationError) as e:
        raise OracleLoadError(f"Malformed sample entry in {manifest_path}: {e}", path=str(manifest_path))
    if not samples:
        raise EmptyCorpus(str(root))

    stores_path = root / "stores.json"
    stores = StoreDatabase.load(stores_path) if stores_path.is_file() else StoreDatabase.builtin()
    ontology_path = root / "ontology.json"
    if ontology_path.is_file():
        abbreviations = root / "abbreviations.tsv"
        ontology = Ontology.load(ontology_path, abbreviations if abbreviations.is_file() else None)
    else:
        ontology = Ontology.builtin()
    return Corpus(root, int(manifest.get("seed", 0)), samples, stores, ontology)
