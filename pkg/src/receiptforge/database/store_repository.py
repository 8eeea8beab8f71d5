"""
Репозиторий магазинов (storedb-v1)
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
from .models import StoreRecord

logger = get_logger(__name__)

STORE_DB_SCHEMA = "storedb-v1"


class StoreDatabaseValidator(BaseValidator):
    """Проверка целостности базы магазинов"""

    def validate(self, stores: List[StoreRecord]) -> bool:
        self.clear_errors()
        seen_ids: Dict[str, int] = {}
        phrase_owner: Dict[str, str] = {}
        phone_owner: Dict[str, str] = {}

        for store in stores:
            if store.store_id in seen_ids:
                self.add_error(f"Duplicate store_id '{store.store_id}'")
            seen_ids[store.store_id] = 1

            for phrase in store.terminology:
                key = normalize_text(phrase)
                if not key:
                    self.add_error(f"Store '{store.store_id}' has an empty terminology phrase")
                    continue
                owner = phrase_owner.get(key)
                if owner is not None and owner != store.store_id:
                    self.add_error(
                        f"Terminology phrase '{phrase}' is shared by '{owner}' and '{store.store_id}'"
                    )
                phrase_owner[key] = store.store_id

            for phone in store.phones:
                owner = phone_owner.get(phone)
                if owner is not None and owner != store.store_id:
                    self.add_error(f"Phone {phone} is shared by '{owner}' and '{store.store_id}'")
                phone_owner[phone] = store.store_id

        return not self.has_errors()


class StoreDatabase:
    """Неизменяемая после загрузки база магазинов"""

    def __init__(self, stores: Iterable[StoreRecord]):
        records = list(stores)
        validator = StoreDatabaseValidator()
        if not validator.validate(records):
            raise ConfigError("; ".join(validator.get_errors()), config_key="stores")
        self._stores: Dict[str, StoreRecord] = {store.store_id: store for store in records}
        self._by_phone: Dict[str, str] = {
            phone: store.store_id for store in records for phone in store.phones
        }

    @classmethod
    def load(cls, path: Union[str, Path]) -> "StoreDatabase":
        """Загрузить базу из JSON файла"""
        path = Path(path)
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"Store database not found: {path}", config_key="stores")
        except json.JSONDecodeError as e:
            raise ConfigError(f"Store database {path} is not valid JSON: {e}", config_key="stores")
        database = cls.from_payload(payload, source=str(path))
        logger.debug(f"Loaded {len(database)} stores from {path}")
        return database

    @classmethod
    def from_payload(cls, payload: Any, source: str = "<memory>") -> "StoreDatabase":
        if isinstance(payload, list):
            raise ConfigError(
                f"{source}: expected an object with \"schema\": \"{STORE_DB_SCHEMA}\"",
                config_key="stores",
            )
        if not isinstance(payload, dict) or payload.get("schema") != STORE_DB_SCHEMA:
            raise ConfigError(f"{source}: unsupported store database schema", config_key="stores")
        records = []
        for index, raw in enumerate(payload.get("stores", [])):
            try:
                records.append(StoreRecord(**raw))
            except (PydanticValidationError, TypeError) as e:
                raise ConfigError(f"{source}: store #{index} is invalid: {e}", config_key="stores")
        return cls(records)

    @classmethod
    def builtin(cls) -> "StoreDatabase":
        """База из 10 синтетических магазинов, поставляемая с пакетом"""
        text = resources.files("receiptforge.data").joinpath("stores.json").read_text(encoding="utf-8")
        return cls.from_payload(json.loads(text), source="stores.json")

    def to_payload(self) -> Dict[str, Any]:
        return {
            "schema": STORE_DB_SCHEMA,
            "stores": [store.model_dump() for store in self._stores.values()],
        }

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_payload(), ensure_ascii=False, indent=2), encoding="utf-8")
        return path

    def get(self, store_id: str) -> Optional[StoreRecord]:
        return self._stores.get(store_id)

    def store_for_phone(self, phone: str) -> Optional[str]:
        return self._by_phone.get(phone)

    @property
    def store_ids(self) -> List[str]:
        return sorted(self._stores)

    def __iter__(self) -> Iterator[StoreRecord]:
        return iter(self._stores.values())

    def __len__(self) -> int:
        return len(self._stores)

    def __contains__(self, store_id: object) -> bool:
        return store_id in self._stores
