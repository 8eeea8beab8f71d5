"""
Репозиторий онтологии товаров (ontology-v1) и таблицы сокращений
"""
import json
from importlib import resources
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Union

from pydantic import ValidationError as PydanticValidationError

from ..core.base import BaseValidator
from ..core.exceptions import ConfigError
from ..core.logging import get_logger
from ..utils.text_normalizer import normalize_text
from .models import Category, Concept

logger = get_logger(__name__)

ONTOLOGY_SCHEMA = "ontology-v1"


class OntologyValidator(BaseValidator):
    """Проверка ссылочной целостности онтологии"""

    def validate(self, categories: List[Category], concepts: List[Concept]) -> bool:
        self.clear_errors()
        category_ids = set()
        for category in categories:
            if category.id in category_ids:
                self.add_error(f"Duplicate category '{category.id}'")
            category_ids.add(category.id)

        concept_ids = set()
        for concept in concepts:
            if concept.id in concept_ids:
                self.add_error(f"Duplicate concept '{concept.id}'")
            concept_ids.add(concept.id)
            if concept.category not in category_ids:
                self.add_error(f"Concept '{concept.id}' refers to unknown category '{concept.category}'")
        return not self.has_errors()


def parse_abbreviations(text: str, source: str = "<memory>") -> Dict[str, str]:
    """Две колонки через табуляцию: сокращение, полная форма. # - комментарий"""
    table: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [part.strip() for part in line.split("\t")]
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise ConfigError(f"{source}:{number}: expected 2 tab-separated columns", config_key="abbreviations")
        key = normalize_text(parts[0])
        if key:
            table[key] = parts[1].upper()
    return table


def load_abbreviations(path: Union[str, Path]) -> Dict[str, str]:
    path = Path(path)
    try:
        return parse_abbreviations(path.read_text(encoding="utf-8"), source=str(path))
    except FileNotFoundError:
        raise ConfigError(f"Abbreviation table not found: {path}", config_key="abbreviations")


class Ontology:
    """Неизменяемая после загрузки онтология"""

    def __init__(
        self,
        categories: Iterable[Category],
        concepts: Iterable[Concept],
        abbreviations: Optional[Dict[str, str]] = None,
    ):
        category_list = list(categories)
        concept_list = list(concepts)
        validator = OntologyValidator()
        if not validator.validate(category_list, concept_list):
            raise ConfigError("; ".join(validator.get_errors()), config_key="ontology")
        self._categories = {category.id: category for category in category_list}
        # порядок по concept_id задает детерминированный разбор ничьих
        self._concepts = {concept.id: concept for concept in sorted(concept_list, key=lambda c: c.id)}
        self.abbreviations: Dict[str, str] = dict(abbreviations or {})

    @classmethod
    def from_payload(
        cls,
        payload: Any,
        abbreviations: Optional[Dict[str, str]] = None,
        source: str = "<memory>",
    ) -> "Ontology":
        if not isinstance(payload, dict) or payload.get("schema") != ONTOLOGY_SCHEMA:
            raise ConfigError(f"{source}: unsupported ontology schema", config_key="ontology")
        try:
            categories = [Category(**raw) for raw in payload.get("categories", [])]
            concepts = [Concept(**raw) for raw in payload.get("concepts", [])]
        except (PydanticValidationError, TypeError) as e:
            raise ConfigError(f"{source}: invalid ontology entry: {e}", config_key="ontology")
        return cls(categories, concepts, abbreviations)

    @classmethod
    def load(
        cls,
        path: Union[str, Path],
        abbreviations_path: Optional[Union[str, Path]] = None,
    ) -> "Ontology":
        """Загрузить онтологию из JSON (и таблицу сокращений из TSV)"""
        path = Path(path)
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"Ontology not found: {path}", config_key="ontology")
        except json.JSONDecodeError as e:
            raise ConfigError(f"Ontology {path} is not valid JSON: {e}", config_key="ontology")
        abbreviations = load_abbreviations(abbreviations_path) if abbreviations_path else None
        ontology = cls.from_payload(payload, abbreviations, source=str(path))
        logger.debug(f"Loaded {len(ontology)} concepts from {path}")
        return ontology

    @classmethod
    def builtin(cls) -> "Ontology":
        """Мини-онтология и сокращения, поставляемые с пакетом"""
        data = resources.files("receiptforge.data")
        payload = json.loads(data.joinpath("ontology.json").read_text(encoding="utf-8"))
        abbreviations = parse_abbreviations(
            data.joinpath("abbreviations.tsv").read_text(encoding="utf-8"),
            source="abbreviations.tsv",
        )
        return cls.from_payload(payload, abbreviations, source="ontology.json")

    def to_payload(self) -> Dict[str, Any]:
        return {
            "schema": ONTOLOGY_SCHEMA,
            "categories": [category.model_dump() for category in self._categories.values()],
            "concepts": [concept.model_dump() for concept in self._concepts.values()],
        }

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_payload(), ensure_ascii=False, indent=2), encoding="utf-8")
        return path

    def save_abbreviations(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        lines = [f"{key}\t{value}" for key, value in sorted(self.abbreviations.items())]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    def get(self, concept_id: str) -> Optional[Concept]:
        return self._concepts.get(concept_id)

    @property
    def concepts(self) -> List[Concept]:
        return list(self._concepts.values())

    @property
    def categories(self) -> List[Category]:
        return list(self._categories.values())

    def __iter__(self) -> Iterator[Concept]:
        return iter(self._concepts.values())

    def __len__(self) -> int:
        return len(self._concepts)
