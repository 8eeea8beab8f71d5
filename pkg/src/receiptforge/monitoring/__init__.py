"""
Мониторинг: метрики стадий конвейера
"""
from .metrics import MetricsCollector, metrics_collector

__all__ = ['MetricsCollector', 'metrics_collector']
