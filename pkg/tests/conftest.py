"""
Конфигурация pytest для ReceiptForge
"""
import logging
import os

import pytest

from receiptforge.core.settings import Settings, load_settings
from receiptforge.database.ontology_repository import Ontology
from receiptforge.database.store_repository import StoreDatabase
from receiptforge.harness.logos import make_logos, write_logo_templates


@pytest.fixture
def settings(monkeypatch, tmp_path) -> Settings:
    """Настройки по умолчанию без влияния окружения"""
    monkeypatch.chdir(tmp_path)
    for key in list(os.environ):
        if key.startswith("RECEIPTFORGE_"):
            monkeypatch.delenv(key, raising=False)
    return load_settings()


@pytest.fixture(autouse=True)
def reset_logging():
    """Снять обработчики логгеров после теста"""
    yield
    for name in ("receiptforge", "receiptforge.metrics"):
        logging.getLogger(name).handlers.clear()


@pytest.fixture(scope="session")
def stores() -> StoreDatabase:
    return StoreDatabase.builtin()


@pytest.fixture(scope="session")
def ontology() -> Ontology:
    return Ontology.builtin()


@pytest.fixture(scope="session")
def logos(stores):
    """Эталонные логотипы встроенных магазинов"""
    return make_logos(stores)


@pytest.fixture
def logo_dir(tmp_path, stores):
    """Каталог шаблонов логотипов `<store>_0.pgm`"""
    directory = tmp_path / "logos"
    write_logo_templates(stores, directory)
    return directory


def pytest_configure(config):
    """Конфигурация pytest"""
    config.addinivalue_line("markers", "unit: Unit тесты")
    config.addinivalue_line("markers", "integration: Интеграционные тесты")
    config.addinivalue_line("markers", "slow: Медленные тесты (синтетический корпус)")


def pytest_collection_modifyitems(config, items):
    """Модификация собранных тестов"""
    for item in items:
        path = str(item.fspath)
        if "integration" in path:
            item.add_marker(pytest.mark.integration)
        else:
            item.add_marker(pytest.mark.unit)

        if "corpus" in item.name or "slow" in item.name:
            item.add_marker(pytest.mark.slow)
