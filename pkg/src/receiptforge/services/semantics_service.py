"""
Семантика чека: разбор товарных строк и сопоставление коротких меток с онтологией
"""
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal, InvalidOperation
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import regex

from ..core.base import BaseStage
from ..core.exceptions import NotAProductLine, ReceiptForgeError
from ..core.interfaces import IOcrBackend
from ..core.settings import SemanticsConfig
from ..database.ontology_repository import Ontology
from ..imaging.models import BBox, GrayImage
from ..utils.text_normalizer import token_set_similarity, tokenize
from ..utils.validators import get_product_line_pattern
from .layout_service import LayoutHierarchy, TextBlock
from .ocr_service import PRICE_COLUMN, repair_numeric

CURRENCIES = {"€": "EUR", "EUR": "EUR", "$": "USD", "£": "GBP"}
CURRENCY_SUFFIX = {"EUR": "€", "USD": "$", "GBP": "£"}
UNKNOWN_CURRENCY = "unknown"

_QUANTITY = regex.compile(r"^(?P<qty>\d+)\s*[xX]\s+(?P<rest>\S.*)$")


@dataclass(frozen=True)
class ProductLine:
    """Товарная строка; суммы в минимальных единицах (центах)"""
    label: str
    quantity: int
    line_price: int
    unit_price: Optional[int]
    currency: str = UNKNOWN_CURRENCY

    def to_dict(self) -> Dict[str, object]:
        return {
            "label": self.label,
            "quantity": self.quantity,
            "unit_price": self.unit_price,
            "line_price": self.line_price,
            "currency": self.currency,
        }


def _to_minor_units(amount: str) -> int:
    try:
        value = Decimal(amount.replace(",", "."))
    except InvalidOperation:
        raise NotAProductLine(amount)
    return int((value * 100).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def parse_product_line(line: str, grammar_version: str = "product-line-v1") -> ProductLine:
    """
    Разбор строки по якорной грамматике: метка, разрыв, цена.

    "2 x YAOURT NAT   2,70" -> количество 2, метка "YAOURT NAT", 270 центов.
    """
    text = line.rstrip()
    match = get_product_line_pattern(grammar_version).match(text)
    if match is None:
        raise NotAProductLine(line)

    label = match.group("label").strip()
    quantity = 1
    prefixed = _QUANTITY.match(label)
    if prefixed and int(prefixed.group("qty")) >= 1:
        quantity = int(prefixed.group("qty"))
        label = prefixed.group("rest").strip()

    symbol = match.group("pre") or match.group("post")
    currency = CURRENCIES.get(symbol.upper(), UNKNOWN_CURRENCY) if symbol else UNKNOWN_CURRENCY
    line_price = _to_minor_units(match.group("amount"))
    unit_price = line_price // quantity if line_price % quantity == 0 else None
    return ProductLine(label, quantity, line_price, unit_price, currency)


def format_price(cents: int, currency: str = UNKNOWN_CURRENCY) -> str:
    return f"{cents // 100}.{cents % 100:02d}{CURRENCY_SUFFIX.get(currency, '')}"


def render_product_line(product: ProductLine, gap: int = 2) -> str:
    """Каноническая форма: [N X ]МЕТКА, разрыв, цена с точкой и символом валюты"""
    label = f"{product.quantity} X {product.label}" if product.quantity > 1 else product.label
    return f"{label}{' ' * max(gap, 2)}{format_price(product.line_price, product.currency)}"


@dataclass(frozen=True)
class MatchResult:
    """Matched(concept_id, score) или NoMatch(лучший score)"""
    matched: bool
    score: float
    concept_id: Optional[str] = None
    category_id: Optional[str] = None

    def to_dict(self) -> Dict[str, object]:
        return {
            "matched": self.matched,
            "concept_id": self.concept_id,
            "category_id": self.category_id,
            "score": round(self.score, 6),
        }


def expand_label(label: str, abbreviations: Dict[str, str]) -> List[str]:
    """Токены метки без чисто цифровых, с раскрытыми сокращениями"""
    tokens: List[str] = []
    for token in tokenize(label):
        if token.isdigit():
            continue
        expansion = abbreviations.get(token)
        tokens.extend(tokenize(expansion) if expansion else [token])
    return tokens


def concept_scores(tokens: Sequence[str], ontology: Ontology) -> Iterable[Tuple[str, str, float]]:
    """(concept_id, category_id, лучший по терминам score) в порядке concept_id"""
    for concept in ontology:
        best = max(token_set_similarity(tokens, tokenize(term)) for term in concept.terms)
        yield concept.id, concept.category, best


def match_concept(label: str, ontology: Ontology, threshold: float = 0.65) -> MatchResult:
    tokens = expand_label(label, ontology.abbreviations)
    if not tokens:
        return MatchResult(False, 0.0)
    best: Optional[Tuple[str, str, float]] = None
    for candidate in concept_scores(tokens, ontology):
        # строго больше: при равенстве остается меньший concept_id
        if best is None or candidate[2] > best[2]:
            best = candidate
    if best is None or best[2] < threshold:
        return MatchResult(False, best[2] if best else 0.0)
    return MatchResult(True, best[2], best[0], best[1])


def is_stop_line(label: str, stop_words: Iterable[str]) -> bool:
    stops = {token for word in stop_words for token in tokenize(word)}
    return any(token in stops for token in tokenize(label))


@dataclass(frozen=True)
class ExtractedProduct:
    box: BBox
    text: str
    product: ProductLine
    match: MatchResult

    def to_dict(self) -> Dict[str, object]:
        return {
            "box": self.box.to_dict(),
            "text": self.text,
            **self.product.to_dict(),
            "match": self.match.to_dict(),
        }


@dataclass(frozen=True)
class SkippedLine:
    box: BBox
    text: str
    error_code: str
    message: str

    def to_dict(self) -> Dict[str, object]:
        return {
            "box": self.box.to_dict(),
            "text": self.text,
            "error_code": self.error_code,
            "message": self.message,
        }


@dataclass
class ProductExtraction:
    products: List[ExtractedProduct] = field(default_factory=list)
    skipped: List[SkippedLine] = field(default_factory=list)
    excluded: List[str] = field(default_factory=list)

    @property
    def matched_count(self) -> int:
        return sum(1 for item in self.products if item.match.matched)

    def to_dict(self) -> Dict[str, object]:
        return {
            "products": [item.to_dict() for item in self.products],
            "skipped": [item.to_dict() for item in self.skipped],
            "excluded": list(self.excluded),
        }


def _rows(lines: List[Tuple[int, TextBlock]]) -> List[List[Tuple[int, TextBlock]]]:
    """Строки разных подблоков одной полосы, перекрывающиеся по вертикали"""
    rows: List[Tuple[int, int, List[Tuple[int, TextBlock]]]] = []
    for entry in sorted(lines, key=lambda item: (item[1].box.y, item[1].box.x)):
        box = entry[1].box
        if rows and box.y < rows[-1][1]:
            top, bottom, members = rows[-1]
            members.append(entry)
            rows[-1] = (top, max(bottom, box.y2), members)
        else:
            rows.append((box.y, box.y2, [entry]))
    return [members for _, _, members in rows]


_TRAILING_PRICE = regex.compile(r"^(?P<head>.*\S(?: {2,}|\t+))(?P<tail>\S+)$")


def repair_trailing_price(text: str) -> str:
    """Строка целиком: ремонт только токена после разрыва (2+ пробела или табуляция)"""
    parts = _TRAILING_PRICE.match(text)
    if parts is None:
        return text
    return parts.group("head") + repair_numeric(parts.group("tail"), PRICE_COLUMN)


def _read(ocr: IOcrBackend, image: GrayImage, box: BBox, sample_id: Optional[str]) -> List[str]:
    return [text for text in (t.text.strip() for t in ocr.recognize(image, box, sample_id)) if text]


def extract_products(
    hierarchy: LayoutHierarchy,
    image: GrayImage,
    ocr: IOcrBackend,
    ontology: Ontology,
    config: Optional[SemanticsConfig] = None,
    grammar_version: str = "product-line-v1",
    sample_id: Optional[str] = None,
) -> ProductExtraction:
    """
    Каждая строка каждой полосы читается и разбирается. В полосе из нескольких
    подблоков правый подблок - колонка цен, ее текст ремонтируется отдельно;
    в полосе из одного подблока строка читается целиком. Стоп-строки попадают
    в excluded, остальные неразобранные - в skipped. Порядок - сверху вниз.
    """
    config = config or SemanticsConfig()
    result = ProductExtraction()
    for band_index, _ in enumerate(hierarchy.bands):
        sub_indices = sorted(
            (i for i, block in enumerate(hierarchy.subblocks) if block.parent == band_index),
            key=lambda i: hierarchy.subblocks[i].box.x,
        )
        price_sub = sub_indices[-1] if len(sub_indices) > 1 else None
        band_lines = [
            (sub, line) for sub in sub_indices for _, line in hierarchy.lines_of(sub)
        ]
        for row in _rows(band_lines):
            row_box = row[0][1].box
            for _, line in row[1:]:
                row_box = row_box.union(line.box)
            labels: List[str] = []
            prices: List[str] = []
            try:
                for sub, line in sorted(row, key=lambda item: item[1].box.x):
                    target = prices if sub == price_sub else labels
                    target.extend(_read(ocr, image, line.box, sample_id))
            except ReceiptForgeError as e:
                result.skipped.append(SkippedLine(row_box, "", e.error_code, e.message))
                continue
            label_text = " ".join(labels)
            if price_sub is None:
                text = repair_trailing_price(label_text)
            else:
                text = f"{label_text}  {repair_numeric(' '.join(prices), PRICE_COLUMN)}".strip()
            try:
                product = parse_product_line(text, grammar_version)
            except NotAProductLine as e:
                if text and is_stop_line(text, config.stop_words):
                    result.excluded.append(text)
                else:
                    result.skipped.append(SkippedLine(row_box, text, e.error_code, e.message))
                continue
            if is_stop_line(product.label, config.stop_words):
                result.excluded.append(product.label)
                continue
            match = match_concept(product.label, ontology, config.match_threshold)
            result.products.append(ExtractedProduct(row_box, text, product, match))
    return result


class SemanticsService(BaseStage):
    """Шаг 5: товары и их понятия"""

    stage_name = "semantics"

    def __init__(
        self,
        ontology: Ontology,
        config: Optional[SemanticsConfig] = None,
        grammar_version: str = "product-line-v1",
        logger=None,
    ):
        super().__init__(logger)
        self.ontology = ontology
        self.config = config or SemanticsConfig()
        self.grammar_version = grammar_version

    def extract(
        self,
        image: GrayImage,
        hierarchy: LayoutHierarchy,
        ocr: IOcrBackend,
        sample_id: Optional[str] = None,
    ) -> ProductExtraction:
        with self.timed("extract_products", sample_id):
            extraction = extract_products(
                hierarchy, image, ocr, self.ontology, self.config,
                self.grammar_version, sample_id,
            )
        self.logger.debug(
            f"{len(extraction.products)} products, {extraction.matched_count} matched, "
            f"{len(extraction.skipped)} skipped",
            extra={'stage': self.stage_name, 'sample_id': sample_id or '-'},
        )
        return extraction
