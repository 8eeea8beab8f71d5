"""
Кастомные исключения для системы
"""
from typing import Any, Dict, Optional


class ReceiptForgeError(Exception):
    """Базовое исключение для ReceiptForge"""

    def __init__(
        self,
        message: str,
        error_code: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message)
        self.message = message
        self.error_code = error_code or "RECEIPTFORGE_ERROR"
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """Преобразование ошибки в словарь"""
        return {
            'type': self.__class__.__name__,
            'error_code': self.error_code,
            'message': self.message,
            'details': self.details,
        }


class ValidationError(ReceiptForgeError):
    """Ошибка валидации данных"""

    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        value: Optional[Any] = None
    ):
        super().__init__(message, "VALIDATION_ERROR", {'field': field})
        self.field = field
        self.value = value


class ConfigError(ReceiptForgeError):
    """Ошибка конфигурации"""

    def __init__(self, message: str, config_key: Optional[str] = None):
        super().__init__(message, "CONFIG_ERROR", {'config_key': config_key})
        self.config_key = config_key


class InvalidGeometry(ReceiptForgeError):
    """Вырожденный прямоугольник (w или h <= 0)"""

    def __init__(self, message: str, box: Optional[Any] = None):
        super().__init__(message, "INVALID_GEOMETRY", {'box': repr(box)})
        self.box = box


class InvalidAngle(ReceiptForgeError):
    """Угол поворота вне режима выравнивания"""

    def __init__(self, angle: float, limit: float):
        super().__init__(
            f"Rotation angle {angle:.3f} exceeds +/-{limit:.0f} degrees",
            "INVALID_ANGLE",
            {'angle': angle, 'limit': limit},
        )
        self.angle = angle


class DecodeError(ReceiptForgeError):
    """Изображение не удалось декодировать"""

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(message, "DECODE_ERROR", {'path': path})
        self.path = path


class AssetError(ReceiptForgeError):
    """Отсутствуют ресурсы генератора (шрифт, логотипы, фоны)"""

    def __init__(self, message: str, asset: Optional[str] = None):
        super().__init__(message, "ASSET_ERROR", {'asset': asset})
        self.asset = asset


class OracleLoadError(ReceiptForgeError):
    """Файл-оракул отсутствует или поврежден"""

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(message, "ORACLE_LOAD_ERROR", {'path': path})
        self.path = path


class OracleShapeError(ReceiptForgeError):
    """Размер сетки оракула не совпадает с изображением"""

    def __init__(self, expected: tuple, actual: tuple):
        super().__init__(
            f"Oracle grid {actual[0]}x{actual[1]} does not match expected "
            f"{expected[0]}x{expected[1]}",
            "ORACLE_SHAPE_ERROR",
            {'expected': list(expected), 'actual': list(actual)},
        )
        self.expected = expected
        self.actual = actual


class HeatMapError(ReceiptForgeError):
    """Некорректная тепловая карта"""

    def __init__(self, message: str):
        super().__init__(message, "HEATMAP_ERROR")


class ClassMismatch(ReceiptForgeError):
    """Целевой класс отсутствует в тепловой карте"""

    def __init__(self, target_class: str, available: Optional[list] = None):
        super().__init__(
            f"Class '{target_class}' is not produced by this backend",
            "CLASS_MISMATCH",
            {'target_class': target_class, 'available': available or []},
        )
        self.target_class = target_class


class NoReceiptRegion(ReceiptForgeError):
    """Нет положительных ячеек для широкого кадрирования"""

    def __init__(self, message: str = "Heat map has no positive cell"):
        super().__init__(message, "NO_RECEIPT_REGION")


class EdgeNotFound(ReceiptForgeError):
    """Не найдена одна из четырех границ чека"""

    def __init__(self, which_edge: str, inliers: int = 0):
        super().__init__(
            f"Receipt edge '{which_edge}' not found ({inliers} inliers)",
            "EDGE_NOT_FOUND",
            {'which_edge': which_edge, 'inliers': inliers},
        )
        self.which_edge = which_edge


class DegenerateQuad(ReceiptForgeError):
    """Четырехугольник вырожден или выходит за допустимые границы"""

    def __init__(self, message: str):
        super().__init__(message, "DEGENERATE_QUAD")


class NoLogo(ReceiptForgeError):
    """Логотип не найден ни в одной из четырех попыток"""

    def __init__(self, message: str = "No logo area detected"):
        super().__init__(message, "NO_LOGO")


class NotAProductLine(ReceiptForgeError):
    """Строка не соответствует грамматике товарной строки"""

    def __init__(self, line: str):
        super().__init__(f"Not a product line: {line!r}", "NOT_A_PRODUCT_LINE", {'line': line})
        self.line = line


class EmptyCorpus(ReceiptForgeError):
    """Корпус для оценки пуст"""

    def __init__(self, path: str):
        super().__init__(f"Corpus at {path} has no samples", "EMPTY_CORPUS", {'path': path})
        self.path = path
