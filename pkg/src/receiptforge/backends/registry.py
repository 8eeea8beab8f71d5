"""
Реестр бэкендов: строка вида `heuristic`, `oracle:<sidecar>`, `template:<dir>`
превращается в готовый экземпляр
"""
from typing import Callable, Dict, Optional

from ..core.exceptions import ConfigError
from ..core.interfaces import ISegmentationBackend
from ..core.settings import Settings
from .heuristic import HeuristicReceiptBackend
from .oracle import FileOracleBackend
from .templates import TemplateLogoSegmentation, load_logo_templates

BackendFactory = Callable[[Optional[str], Settings], ISegmentationBackend]


class BackendRegistry:
    """Фабрики сегментационных бэкендов по схеме"""

    def __init__(self):
        self._factories: Dict[str, BackendFactory] = {}

    def register_factory(self, scheme: str, factory: BackendFactory) -> None:
        """Зарегистрировать фабрику"""
        self._factories[scheme] = factory

    def is_registered(self, scheme: str) -> bool:
        return scheme in self._factories

    def create(self, descriptor: str, settings: Settings) -> ISegmentationBackend:
        """Создать бэкенд по дескриптору `scheme[:argument]`"""
        scheme, sep, argument = descriptor.partition(":")
        factory = self._factories.get(scheme)
        if factory is None:
            raise ConfigError(
                f"Unknown backend '{scheme}', expected one of {sorted(self._factories)}",
                config_key="backend",
            )
        return factory(argument if sep else None, settings)

    def get_registered_backends(self) -> Dict[str, str]:
        return {scheme: factory.__name__ for scheme, factory in self._factories.items()}


def _heuristic(argument: Optional[str], settings: Settings) -> ISegmentationBackend:
    return HeuristicReceiptBackend(settings.receipt_backend, settings.heuristic)


def _oracle(argument: Optional[str], settings: Settings) -> ISegmentationBackend:
    if not argument:
        raise ConfigError("oracle backend needs a sidecar path: oracle:<path>", config_key="backend")
    return FileOracleBackend(argument)


def _template(argument: Optional[str], settings: Settings) -> ISegmentationBackend:
    if not argument:
        raise ConfigError("template backend needs a directory: template:<dir>", config_key="backend")
    return TemplateLogoSegmentation(
        load_logo_templates(argument),
        spec=settings.sign.logo_backend,
        pool=settings.sign.logo_pool,
    )


# Глобальный реестр
registry = BackendRegistry()
registry.register_factory("heuristic", _heuristic)
registry.register_factory("oracle", _oracle)
registry.register_factory("template", _template)


def create_backend(descriptor: str, settings: Settings) -> ISegmentationBackend:
    return registry.create(descriptor, settings)
