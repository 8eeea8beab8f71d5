"""
OCR: эталонный бэкенд по файлу-оракулу, адаптер текстовых файлов,
инжектор шума и контекстное исправление путаницы букв и цифр
"""
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import regex

from ..core.base import BaseStage
from ..core.exceptions import InvalidGeometry, OracleLoadError, ValidationError
from ..core.interfaces import IOcrBackend
from ..core.logging import get_logger
from ..core.settings import OcrConfig
from ..imaging.models import BBox, GrayImage
from ..utils.validators import CURRENCY_SYMBOLS, is_price_token

logger = get_logger(__name__)

OCR_TRUTH_SCHEMA = "ocr-truth-v1"

PRICE_COLUMN = "price_column"
FREE_TEXT = "free_text"

SWAP = "swap"
DELETE = "delete"
INSERT = "insert"
NOISE_OPERATIONS = (SWAP, DELETE, INSERT)

_UPPER = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
_DIGITS = "0123456789"


@dataclass(frozen=True)
class TextLine:
    """Строка OCR с уверенностью; box - в координатах переданного изображения"""
    text: str
    confidence: float = 1.0
    box: Optional[BBox] = None

    def to_dict(self) -> Dict[str, object]:
        return {
            "text": self.text,
            "confidence": round(self.confidence, 6),
            "box": self.box.to_dict() if self.box else None,
        }


def lines_to_text(lines: Sequence[TextLine]) -> str:
    return "\n".join(line.text for line in lines)


class ConfusionTable:
    """
    Пары буква <-> цифра, которые OCR путает.

    В числовом контексте буквы заменяются цифрами, в буквенном - наоборот;
    длина строки не меняется.
    """

    DEFAULT_PAIRS: Tuple[Tuple[str, str], ...] = (
        ("I", "1"), ("l", "1"), ("O", "0"), ("o", "0"), ("S", "5"), ("B", "8"),
    )

    def __init__(self, pairs: Optional[Sequence[Tuple[str, str]]] = None):
        self.pairs = tuple(pairs if pairs is not None else self.DEFAULT_PAIRS)
        self.to_digit: Dict[str, str] = {}
        self.to_letter: Dict[str, str] = {}
        for letter, digit in self.pairs:
            self.to_digit[letter] = digit
            # первая пара задает обратное направление (1 -> I, не l)
            self.to_letter.setdefault(digit, letter)

    def is_confusable(self, ch: str) -> bool:
        return ch in self.to_digit

    def partner(self, ch: str) -> Optional[str]:
        return self.to_digit.get(ch) or self.to_letter.get(ch)

    def digits(self, text: str) -> str:
        return "".join(self.to_digit.get(ch, ch) for ch in text)

    def letters(self, text: str) -> str:
        return "".join(self.to_letter.get(ch, ch) for ch in text)


DEFAULT_CONFUSIONS = ConfusionTable()

_CURRENCY_SPLIT = regex.compile(
    rf"^(?P<pre>{CURRENCY_SYMBOLS})?(?P<core>.*?)(?P<post>{CURRENCY_SYMBOLS})?$",
    regex.IGNORECASE,
)
_TOKENS = regex.compile(r"(\s+)")
# валюта словом: буквы O и S в ней не цифры
_CURRENCY_WORD = regex.compile(r"^(?:EUROS?|EUR|€|\$|£)$", regex.IGNORECASE)


def _repair_token(token: str, table: ConfusionTable) -> str:
    if not token or is_price_token(token) or _CURRENCY_WORD.match(token):
        return token
    parts = _CURRENCY_SPLIT.match(token)
    pre, core, post = parts.group("pre") or "", parts.group("core"), parts.group("post") or ""
    alnum = [ch for ch in core if ch.isalnum()]
    if not alnum:
        return token
    digit_like = sum(1 for ch in alnum if ch.isdigit() or table.is_confusable(ch))
    if digit_like * 2 <= len(alnum):
        return token
    candidate = pre + table.digits(core) + post
    return candidate if is_price_token(candidate) else token


def repair_numeric(
    text: str,
    context: str = PRICE_COLUMN,
    table: ConfusionTable = DEFAULT_CONFUSIONS,
) -> str:
    """
    В колонке цен токен, где цифры и похожие на них буквы составляют большинство,
    переводится в цифры, если после этого он разбирается как цена.
    Свободный текст не меняется.
    """
    if context != PRICE_COLUMN:
        return text
    return "".join(
        part if part.isspace() else _repair_token(part, table)
        for part in _TOKENS.split(text)
    )


def _substitute(ch: str, pick: int, table: ConfusionTable) -> str:
    partner = table.partner(ch)
    if partner is not None:
        return partner
    if ch.isdigit():
        pool = _DIGITS.replace(ch, "")
    elif ch.isalpha():
        pool = _UPPER.replace(ch.upper(), "")
    else:
        return ""
    return pool[pick % len(pool)]


def corrupt_text(
    text: str,
    rate: float,
    rng: np.random.Generator,
    table: ConfusionTable = DEFAULT_CONFUSIONS,
    operations: Sequence[str] = NOISE_OPERATIONS,
) -> Tuple[str, int]:
    """
    Порча символов с вероятностью rate: замена по таблице, удаление или вставка пробела.

    На каждый символ тянутся одни и те же случайные величины при любом rate,
    поэтому множества испорченных позиций вложены по росту rate.
    Возвращает текст и число испорченных символов.
    """
    out: List[str] = []
    corrupted = 0
    for ch in text:
        u = rng.random()
        op = operations[int(rng.integers(6)) % len(operations)]
        pick = int(rng.integers(1 << 16))
        if u >= rate:
            out.append(ch)
            continue
        corrupted += 1
        if op == SWAP:
            out.append(_substitute(ch, pick, table))
        elif op == INSERT:
            out.append(ch + " ")
        # DELETE: символ пропадает
    return "".join(out), corrupted


def _overlap_ratio(segment: BBox, region: BBox) -> float:
    return segment.intersection_area(region) / segment.area


class StubOcrBackend(IOcrBackend):
    """
    Эталонный OCR по файлу `<id>.ocr.json` генератора.

    Строка состоит из сегментов (метка, цена); область возвращает сегменты,
    покрытые ею не менее чем на min_overlap их площади. Полностью покрытая
    строка отдается целиком, с исходными пробелами.
    """

    def __init__(self, lines: Sequence[Dict], min_overlap: float = 0.5, source: str = "<memory>"):
        self.min_overlap = min_overlap
        self.source = source
        self._lines: List[Tuple[str, BBox, List[Tuple[str, BBox]]]] = []
        try:
            for raw in lines:
                box = BBox.from_dict(raw["box"])
                segments = [
                    (seg["text"], BBox.from_dict(seg["box"]))
                    for seg in raw.get("segments") or [{"text": raw["text"], "box": raw["box"]}]
                ]
                self._lines.append((raw["text"], box, segments))
        except (KeyError, TypeError, ValueError, InvalidGeometry) as e:
            raise OracleLoadError(f"Malformed OCR truth in {source}: {e}", path=source)
        self._lines.sort(key=lambda item: (item[1].y, item[1].x))

    @classmethod
    def load(cls, path: Union[str, Path], min_overlap: float = 0.5) -> "StubOcrBackend":
        path = Path(path)
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise OracleLoadError(f"OCR truth sidecar not found: {path}", path=str(path))
        except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
            raise OracleLoadError(f"Cannot read OCR truth {path}: {e}", path=str(path))
        if not isinstance(payload, dict) or payload.get("schema") != OCR_TRUTH_SCHEMA:
            raise OracleLoadError(f"{path} is not an '{OCR_TRUTH_SCHEMA}' sidecar", path=str(path))
        return cls(payload.get("lines", []), min_overlap, source=str(path))

    def recognize(
        self,
        image: GrayImage,
        region: Optional[BBox] = None,
        sample_id: Optional[str] = None,
    ) -> List[TextLine]:
        result: List[TextLine] = []
        for text, box, segments in self._lines:
            if region is None:
                result.append(TextLine(text, 1.0, box))
                continue
            hits = [
                (seg_text, seg_box) for seg_text, seg_box in segments
                if _overlap_ratio(seg_box, region) >= self.min_overlap
            ]
            if not hits:
                continue
            covered = hits[0][1]
            for _, seg_box in hits[1:]:
                covered = covered.union(seg_box)
            line_text = text if len(hits) == len(segments) else " ".join(t for t, _ in hits)
            result.append(TextLine(line_text, 1.0, covered))
        return result


class TextSidecarOcrBackend(IOcrBackend):
    """
    Обмен с внешним OCR через файлы.

    Файл: весь текст, по строке на строку, для любого запроса.
    Каталог: `full.txt` для всего чека и `region_<x>_<y>_<w>_<h>.txt` для областей.
    """

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        if not self.path.exists():
            raise OracleLoadError(f"OCR text sidecar not found: {self.path}", path=str(self.path))

    def _target(self, region: Optional[BBox]) -> Path:
        if self.path.is_file():
            return self.path
        if region is None:
            return self.path / "full.txt"
        return self.path / f"region_{region.x}_{region.y}_{region.w}_{region.h}.txt"

    def recognize(
        self,
        image: GrayImage,
        region: Optional[BBox] = None,
        sample_id: Optional[str] = None,
    ) -> List[TextLine]:
        target = self._target(region)
        try:
            content = target.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise OracleLoadError(f"OCR text sidecar not found: {target}", path=str(target))
        except (OSError, UnicodeDecodeError) as e:
            raise OracleLoadError(f"Cannot read OCR text {target}: {e}", path=str(target))
        return [TextLine(line.rstrip("\r"), 1.0, None) for line in content.split("\n") if line.strip()]


class NoisyOcrBackend(IOcrBackend):
    """Обертка, портящая вывод внутреннего бэкенда; случайность зависит от (seed, область)"""

    def __init__(
        self,
        inner: IOcrBackend,
        rate: float,
        seed: int = 0,
        table: ConfusionTable = DEFAULT_CONFUSIONS,
        operations: Sequence[str] = NOISE_OPERATIONS,
    ):
        if not 0.0 <= rate <= 0.3:
            raise ValidationError(f"OCR noise rate must lie in [0, 0.3], got {rate}", field="rate", value=rate)
        self.inner = inner
        self.rate = rate
        self.seed = seed
        self.table = table
        self.operations = tuple(operations)

    def _rng(self, region: Optional[BBox]) -> np.random.Generator:
        key = [self.seed] if region is None else [self.seed, region.x + 1, region.y + 1, region.w, region.h]
        return np.random.default_rng([abs(int(v)) for v in key])

    def recognize(
        self,
        image: GrayImage,
        region: Optional[BBox] = None,
        sample_id: Optional[str] = None,
    ) -> List[TextLine]:
        lines = self.inner.recognize(image, region, sample_id)
        if self.rate == 0.0:
            return lines
        rng = self._rng(region)
        noisy: List[TextLine] = []
        for line in lines:
            text, _ = corrupt_text(line.text, self.rate, rng, self.table, self.operations)
            noisy.append(TextLine(text, line.confidence, line.box))
        return noisy


def build_ocr_backend(
    truth: Optional[Union[str, Path]] = None,
    text: Optional[Union[str, Path]] = None,
    config: Optional[OcrConfig] = None,
    seed: int = 0,
) -> Optional[IOcrBackend]:
    """Бэкенд по файлу-оракулу (json) или текстовому файлу, с шумом из конфигурации"""
    config = config or OcrConfig()
    backend: Optional[IOcrBackend] = None
    if truth is not None:
        backend = StubOcrBackend.load(truth, config.min_overlap)
    elif text is not None:
        backend = TextSidecarOcrBackend(text)
    if backend is not None and config.noise_rate > 0.0:
        backend = NoisyOcrBackend(backend, config.noise_rate, seed)
    return backend


class OcrService(BaseStage):
    """Обертка над бэкендом OCR с логированием стадии"""

    stage_name = "ocr"

    def __init__(self, backend: IOcrBackend, logger=None):
        super().__init__(logger)
        self.backend = backend

    def read_lines(
        self,
        image: GrayImage,
        region: Optional[BBox] = None,
        sample_id: Optional[str] = None,
    ) -> List[TextLine]:
        with self.timed("recognize", sample_id):
            return self.backend.recognize(image, region, sample_id)

    def read_text(self, image: GrayImage, sample_id: Optional[str] = None) -> str:
        return lines_to_text(self.read_lines(image, None, sample_id))
