"""
Централизованная обработка ошибок: уровень серьезности, код выхода CLI и JSON-строка ошибки
"""
import traceback
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Any, Callable, Dict, Optional, Type

from ..core.exceptions import (
    AssetError,
    ClassMismatch,
    ConfigError,
    DecodeError,
    EmptyCorpus,
    OracleLoadError,
    OracleShapeError,
    ReceiptForgeError,
)
from ..core.logging import get_logger

logger = get_logger(__name__)


class ErrorSeverity(Enum):
    """Уровни серьезности ошибок"""
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


class ExitCode(IntEnum):
    """Коды завершения CLI"""
    OK = 0
    NOT_RECEIPT = 2
    NEEDS_REVIEW = 3
    INPUT_ERROR = 4
    CONFIG_ERROR = 5
    PROCESSING_ERROR = 6
    UNEXPECTED_ERROR = 7
    USAGE_ERROR = 8


@dataclass(frozen=True)
class ErrorOutcome:
    """Результат обработки ошибки"""
    exit_code: ExitCode
    severity: ErrorSeverity
    payload: Dict[str, Any]


ErrorClassifier = Callable[[BaseException], ErrorOutcome]


class ErrorHandler:
    """Централизованный обработчик ошибок"""

    def __init__(self):
        self.error_handlers: Dict[Type[BaseException], ErrorClassifier] = {}
        self.fallback_handler: Optional[ErrorClassifier] = None
        self._setup_default_handlers()

    def _setup_default_handlers(self) -> None:
        """Настройка обработчиков ошибок по умолчанию"""
        for error_type in (DecodeError, AssetError, OracleLoadError, OracleShapeError,
                           EmptyCorpus, FileNotFoundError):
            self.register_handler(error_type, self._handle_input_error)
        self.register_handler(ConfigError, self._handle_config_error)
        self.register_handler(ClassMismatch, self._handle_config_error)
        self.register_handler(ReceiptForgeError, self._handle_processing_error)

    def register_handler(self, exception_type: Type[BaseException],
                         handler: ErrorClassifier) -> None:
        """
        Регистрация обработчика для типа ошибки
        Args:
            exception_type: Тип исключения
            handler: Функция, возвращающая ErrorOutcome
        """
        self.error_handlers[exception_type] = handler
        logger.debug(f"Registered error handler for {exception_type.__name__}")

    def set_fallback_handler(self, handler: ErrorClassifier) -> None:
        """Установка обработчика по умолчанию"""
        self.fallback_handler = handler

    def handle_error(self, error: BaseException,
                     context: Optional[Dict[str, Any]] = None) -> ErrorOutcome:
        """
        Обработка ошибки
        Args:
            error: Исключение для обработки
            context: Дополнительный контекст (команда, путь, sample_id)
        Returns:
            Код выхода, серьезность и JSON-совместимое описание
        """
        handler = self._find_handler(error)
        try:
            outcome = handler(error) if handler else self._handle_fallback(error)
        except Exception as handler_error:
            logger.error(f"Error in error handler: {handler_error}")
            outcome = self._handle_unexpected_error(error)
        if context:
            outcome.payload['context'] = dict(context)
        self._log_error(error, outcome)
        return outcome

    def _find_handler(self, error: BaseException) -> Optional[ErrorClassifier]:
        """Поиск подходящего обработчика: точный тип, затем ближайший предок"""
        if type(error) in self.error_handlers:
            return self.error_handlers[type(error)]
        for klass in type(error).__mro__[1:]:
            if klass in self.error_handlers:
                return self.error_handlers[klass]
        return None

    def _handle_fallback(self, error: BaseException) -> ErrorOutcome:
        if self.fallback_handler:
            return self.fallback_handler(error)
        return self._handle_unexpected_error(error)

    def _log_error(self, error: BaseException, outcome: ErrorOutcome) -> None:
        """Логирование ошибки в зависимости от серьезности"""
        extra = {
            'action': 'error',
            'error_type': type(error).__name__,
        }
        message = f"{outcome.payload.get('error_code')}: {outcome.payload.get('message')}"
        if outcome.severity == ErrorSeverity.CRITICAL:
            logger.critical(message, extra=extra, exc_info=error)
        elif outcome.severity == ErrorSeverity.HIGH:
            logger.error(message, extra=extra)
        elif outcome.severity == ErrorSeverity.MEDIUM:
            logger.warning(message, extra=extra)
        else:
            logger.info(message, extra=extra)

    @staticmethod
    def _payload(error: BaseException) -> Dict[str, Any]:
        if isinstance(error, ReceiptForgeError):
            return {'status': 'error', **error.to_dict()}
        return {
            'status': 'error',
            'type': type(error).__name__,
            'error_code': 'INPUT_ERROR' if isinstance(error, OSError) else 'UNEXPECTED_ERROR',
            'message': str(error),
            'details': {},
        }

    def _handle_input_error(self, error: BaseException) -> ErrorOutcome:
        """Неверный вход: файл, изображение, оракул или ресурсы генератора"""
        return ErrorOutcome(ExitCode.INPUT_ERROR, ErrorSeverity.MEDIUM, self._payload(error))

    def _handle_config_error(self, error: BaseException) -> ErrorOutcome:
        return ErrorOutcome(ExitCode.CONFIG_ERROR, ErrorSeverity.HIGH, self._payload(error))

    def _handle_processing_error(self, error: BaseException) -> ErrorOutcome:
        return ErrorOutcome(ExitCode.PROCESSING_ERROR, ErrorSeverity.HIGH, self._payload(error))

    def _handle_unexpected_error(self, error: BaseException) -> ErrorOutcome:
        payload = self._payload(error)
        payload['error_code'] = 'UNEXPECTED_ERROR'
        payload['traceback'] = traceback.format_exception(type(error), error, error.__traceback__)
        return ErrorOutcome(ExitCode.UNEXPECTED_ERROR, ErrorSeverity.CRITICAL, payload)


# Глобальный экземпляр обработчика ошибок
error_handler = ErrorHandler()
