"""
Базовые классы для компонентов системы
"""
import logging
import time
from contextlib import contextmanager
from typing import Iterator, List, Optional

from .logging import get_logger, log_performance


class BaseStage:
    """Базовый класс для стадий конвейера"""

    stage_name: str = "stage"

    def __init__(self, logger: Optional[logging.Logger] = None):
        self.logger = logger or get_logger(f"services.{self.stage_name}")

    @contextmanager
    def timed(self, operation: str, sample_id: Optional[str] = None) -> Iterator[None]:
        """Замерить длительность операции и записать её в лог"""
        started = time.perf_counter()
        try:
            yield
        finally:
            log_performance(
                self.logger,
                operation,
                time.perf_counter() - started,
                stage=self.stage_name,
                sample_id=sample_id or "-",
            )


class BaseValidator:
    """Базовый класс для валидаторов"""

    def __init__(self, logger: Optional[logging.Logger] = None):
        self.logger = logger or get_logger(f"validators.{self.__class__.__name__}")
        self._errors: List[str] = []

    def add_error(self, error: str) -> None:
        """Добавить ошибку валидации"""
        self._errors.append(error)

    def get_errors(self) -> List[str]:
        """Получить список ошибок"""
        return self._errors.copy()

    def clear_errors(self) -> None:
        """Очистить список ошибок"""
        self._errors.clear()

    def has_errors(self) -> bool:
        """Проверить наличие ошибок"""
        return len(self._errors) > 0
