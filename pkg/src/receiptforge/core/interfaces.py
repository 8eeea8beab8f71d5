"""
Интерфейсы для подключаемых бэкендов
"""
from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple

if TYPE_CHECKING:
    from ..backends.models import HeatMap
    from ..imaging.models import BBox, GrayImage
    from ..core.settings import BackendSpec
    from ..services.ocr_service import TextLine


class ISegmentationBackend(ABC):
    """Оценка вероятностей классов по скользящему окну"""

    @property
    @abstractmethod
    def spec(self) -> "BackendSpec":
        """Геометрия окна и список классов"""

    @abstractmethod
    def infer_heatmap(self, image: "GrayImage", sample_id: Optional[str] = None) -> "HeatMap":
        """Построить карту вероятностей для изображения"""


class IClassifierBackend(ABC):
    """Классификация целого изображения"""

    @property
    @abstractmethod
    def class_labels(self) -> Sequence[str]:
        """Список классов"""

    @abstractmethod
    def rank(self, image: "GrayImage") -> List[Tuple[str, float]]:
        """Классы по убыванию вероятности"""

    def classify(self, image: "GrayImage") -> Tuple[str, float]:
        """Лучший класс и его вероятность"""
        return self.rank(image)[0]


class IOcrBackend(ABC):
    """Распознавание текста внутри области чека"""

    @abstractmethod
    def recognize(
        self,
        image: "GrayImage",
        region: Optional["BBox"] = None,
        sample_id: Optional[str] = None,
    ) -> List["TextLine"]:
        """Строки текста сверху вниз"""
