"""
Сбор метрик производительности стадий

Метрики пишутся только в логгер 'receiptforge.metrics' и никогда не попадают
в отчеты: отчеты должны быть побайтно воспроизводимыми.
"""
import json
import time
from collections import defaultdict
from contextlib import contextmanager
from datetime import datetime, timezone
from typing import Any, Dict, Iterator, Optional

from ..core.logging import get_logger, get_metrics_logger

logger = get_logger(__name__)


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


class MetricsCollector:
    """Сборщик метрик: счетчики и таймеры"""

    def __init__(self):
        self.counters: Dict[str, int] = defaultdict(int)
        self.durations: Dict[str, list] = defaultdict(list)
        self.logger = get_metrics_logger()

    def _build_key(self, metric_name: str, tags: Optional[Dict[str, str]] = None) -> str:
        """
        Построение ключа метрики с тегами
        Args:
            metric_name: Название метрики
            tags: Теги для метрики
        Returns:
            Ключ метрики
        """
        if not tags:
            return metric_name
        tag_str = ",".join(f"{k}={v}" for k, v in sorted(tags.items()))
        return f"{metric_name}[{tag_str}]"

    def _emit(self, payload: Dict[str, Any]) -> None:
        payload['timestamp'] = _utcnow()
        self.logger.info(json.dumps(payload, ensure_ascii=False))

    def increment(self, metric_name: str, value: int = 1,
                  tags: Optional[Dict[str, str]] = None) -> None:
        """Увеличение счетчика"""
        self.counters[self._build_key(metric_name, tags)] += value
        self._emit({'type': 'counter', 'metric': metric_name, 'value': value, 'tags': tags or {}})

    def record_duration(self, metric_name: str, duration: float,
                        tags: Optional[Dict[str, str]] = None) -> None:
        self.durations[self._build_key(metric_name, tags)].append(duration)
        self._emit({'type': 'timer', 'metric': metric_name, 'duration': duration, 'tags': tags or {}})

    @contextmanager
    def timer(self, metric_name: str, tags: Optional[Dict[str, str]] = None) -> Iterator[None]:
        """Замер длительности блока"""
        started = time.perf_counter()
        try:
            yield
        finally:
            self.record_duration(metric_name, time.perf_counter() - started, tags)

    def record_stage(self, stage: str, duration: float, status: str = "success") -> None:
        """
        Запись выполнения стадии конвейера
        Args:
            stage: Название стадии (detect, crop, sign, layout, semantics)
            duration: Время выполнения в секундах
            status: success, fallback или error
        """
        tags = {'stage': stage, 'status': status}
        self.record_duration('stage_duration', duration, tags)
        self.increment('stages_total', 1, tags)

    def record_error(self, error_type: str, stage: str, sample_id: Optional[str] = None) -> None:
        """Запись ошибки стадии"""
        tags = {'error_type': error_type, 'stage': stage}
        self.increment('errors_total', 1, tags)
        self.logger.warning(json.dumps({
            'type': 'error',
            'error_type': error_type,
            'stage': stage,
            'sample_id': sample_id,
            'timestamp': _utcnow(),
        }, ensure_ascii=False))

    def get_metrics_summary(self) -> Dict[str, Any]:
        """
        Получение сводки по метрикам
        Returns:
            Счетчики и средние длительности
        """
        return {
            'counters': dict(self.counters),
            'mean_durations': {
                key: sum(values) / len(values)
                for key, values in self.durations.items() if values
            },
            'timestamp': _utcnow(),
        }

    def reset_metrics(self) -> None:
        """Сброс всех метрик"""
        self.counters.clear()
        self.durations.clear()
        logger.debug("Metrics reset")


# Глобальный экземпляр сборщика метрик
metrics_collector = MetricsCollector()
