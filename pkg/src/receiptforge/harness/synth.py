"""
Генератор синтетических чеков с эталонной разметкой

Чек рисуется на белой ленте встроенным шрифтом: логотип, шапка (название,
телефон, слоган), товарные строки с ценами, итог и подвал. Лента поворачивается,
накладывается на фон и зашумляется. Один SyntheticSpec однозначно задает образец.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy import ndimage

from ..backends.models import HeatMap, grid_shape
from ..core.exceptions import AssetError
from ..core.settings import BackendSpec, CorpusConfig
from ..database.models import StoreRecord
from ..database.ontology_repository import Ontology
from ..database.store_repository import StoreDatabase
from ..imaging.models import BBox, GrayImage, Quad
from ..imaging.raster import rotate, rotate_corners
from ..services.ocr_service import OCR_TRUTH_SCHEMA
from ..services.semantics_service import match_concept
from ..services.sign_service import INVERTED, UPRIGHT
from ..utils.text_normalizer import tokenize
from .font import advance, draw_text, text_width
from .logos import make_logo

BACKGROUNDS = ("plain", "textured", "photo-tile")
PLACEMENTS = ("top", "bottom-inverted", "none")

MARGIN_X = 10
LINE_PITCH = 22
MAX_LABEL = 16
MAX_PAPER_HEIGHT = 720
MIN_PAPER_HEIGHT = 480


class SyntheticSpec(BaseModel):
    """Параметры одного образца; store_id=None - изображение без чека"""

    model_config = {"frozen": True}

    sample_id: str = Field(min_length=1)
    store_id: Optional[str] = None
    product_count: int = Field(default=5, ge=1, le=12)
    rotation: float = Field(default=0.0, ge=-45.0, le=45.0)
    background: Literal["plain", "textured", "photo-tile"] = "plain"
    noise_sigma: float = Field(default=4.0, ge=0.0)
    logo_placement: Literal["top", "bottom-inverted", "none"] = "top"
    ocr_noise_rate: float = Field(default=0.05, ge=0.0, le=0.3)
    seed: int = 0

    @property
    def is_receipt(self) -> bool:
        return self.store_id is not None


@dataclass(frozen=True)
class TruthLine:
    text: str
    box: BBox
    segments: Tuple[Tuple[str, BBox], ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        segments = self.segments or ((self.text, self.box),)
        return {
            "text": self.text,
            "box": self.box.to_dict(),
            "segments": [{"text": text, "box": box.to_dict()} for text, box in segments],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TruthLine":
        segments = tuple(
            (seg["text"], BBox.from_dict(seg["box"])) for seg in data.get("segments", [])
        )
        return cls(data["text"], BBox.from_dict(data["box"]), segments)


@dataclass(frozen=True)
class TruthProduct:
    label: str
    concept_id: str
    quantity: int
    line_price: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "concept_id": self.concept_id,
            "quantity": self.quantity,
            "line_price": self.line_price,
        }


@dataclass(frozen=True)
class GroundTruth:
    """
    Разметка образца. Четырехугольник - в координатах изображения; строки
    и товары - в координатах ленты в прямом положении; рамка логотипа -
    в координатах ленты как она снята (для перевернутого чека - перевернута).
    """
    sample_id: str
    present: bool
    quad: Optional[Quad] = None
    store_id: Optional[str] = None
    logo_box: Optional[BBox] = None
    orientation: str = UPRIGHT
    paper_size: Optional[Tuple[int, int]] = None
    lines: Tuple[TruthLine, ...] = ()
    products: Tuple[TruthProduct, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sample_id": self.sample_id,
            "present": self.present,
            "quad": self.quad.to_list() if self.quad else None,
            "store_id": self.store_id,
            "logo_box": self.logo_box.to_dict() if self.logo_box else None,
            "orientation": self.orientation,
            "paper_size": list(self.paper_size) if self.paper_size else None,
            "lines": [line.to_dict() for line in self.lines],
            "products": [product.to_dict() for product in self.products],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GroundTruth":
        quad = data.get("quad")
        logo_box = data.get("logo_box")
        paper_size = data.get("paper_size")
        return cls(
            sample_id=data["sample_id"],
            present=bool(data["present"]),
            quad=Quad(tuple(tuple(p) for p in quad)) if quad else None,
            store_id=data.get("store_id"),
            logo_box=BBox.from_dict(logo_box) if logo_box else None,
            orientation=data.get("orientation", UPRIGHT),
            paper_size=tuple(paper_size) if paper_size else None,
            lines=tuple(TruthLine.from_dict(line) for line in data.get("lines", [])),
            products=tuple(TruthProduct(**product) for product in data.get("products", [])),
        )

    def ocr_payload(self) -> Dict[str, Any]:
        """Содержимое `<id>.ocr.json` для StubOcrBackend"""
        width, height = self.paper_size or (0, 0)
        return {
            "schema": OCR_TRUTH_SCHEMA,
            "width": width,
            "height": height,
            "lines": [line.to_dict() for line in self.lines],
        }


@dataclass(frozen=True)
class SyntheticSample:
    spec: SyntheticSpec
    image: GrayImage
    truth: GroundTruth
    coverage: np.ndarray = field(repr=False)  # доля ленты в каждом пикселе, [0, 1]


def format_cents(cents: int) -> str:
    return f"{cents // 100},{cents % 100:02d}"


def format_phone(phone: str, dotted: bool) -> str:
    pairs = [phone[k:k + 2] for k in range(0, len(phone), 2)]
    return ("." if dotted else " ").join(pairs)


def _reverse_abbreviations(abbreviations: Dict[str, str]) -> Dict[Tuple[str, ...], str]:
    reverse: Dict[Tuple[str, ...], str] = {}
    for short, full in sorted(abbreviations.items()):
        reverse.setdefault(tuple(tokenize(full)), short.upper())
    return reverse


def _abbreviate(tokens: List[str], reverse: Dict[Tuple[str, ...], str], rng: np.random.Generator,
                probability: float) -> List[str]:
    """Жадная замена самых длинных известных форм их сокращениями"""
    out: List[str] = []
    k = 0
    while k < len(tokens):
        for span in (3, 2, 1):
            key = tuple(tokens[k:k + span])
            if len(key) == span and key in reverse and (probability >= 1.0 or rng.random() < probability):
                out.append(reverse[key])
                k += span
                break
        else:
            out.append(tokens[k])
            k += 1
    return out


def short_label(
    concept_id: str,
    ontology: Ontology,
    rng: np.random.Generator,
    max_length: int = MAX_LABEL,
) -> Optional[str]:
    """
    Короткая метка понятия длиной не более max_length, которую сопоставление
    возвращает к этому же понятию; None, если такой метки нет.
    """
    concept = ontology.get(concept_id)
    if concept is None:
        return None
    reverse = _reverse_abbreviations(ontology.abbreviations)
    term = concept.terms[int(rng.integers(len(concept.terms)))]
    tokens = tokenize(term)
    candidates = [
        " ".join(_abbreviate(tokens, reverse, rng, 0.6)),
        " ".join(_abbreviate(tokens, reverse, rng, 1.0)),
        " ".join(tokens),
    ]
    for label in candidates:
        if not label or len(label) > max_length:
            continue
        if match_concept(label, ontology).concept_id == concept_id:
            return label
    return None


def _store(stores: StoreDatabase, store_id: str) -> StoreRecord:
    store = stores.get(store_id)
    if store is None:
        raise AssetError(f"Unknown store {store_id!r}", asset="stores")
    return store


def _receipt_lines(
    spec: SyntheticSpec,
    store: StoreRecord,
    ontology: Ontology,
    rng: np.random.Generator,
) -> Tuple[List[List[Tuple[str, Optional[str]]]], List[TruthProduct]]:
    """
    Блоки строк ленты. Строка - (левый текст, правый текст или None).
    Порядок вызовов rng фиксирован.
    """
    header: List[Tuple[str, Optional[str]]] = [
        (store.name_variants[int(rng.integers(len(store.name_variants)))], None)
    ]
    if store.phones and rng.random() < 0.7:
        phone = store.phones[int(rng.integers(len(store.phones)))]
        header.append((f"TEL {format_phone(phone, bool(rng.random() < 0.5))}", None))
    if store.terminology and rng.random() < 0.8:
        header.append((store.terminology[0], None))

    concepts = ontology.concepts
    products: List[TruthProduct] = []
    product_rows: List[Tuple[str, Optional[str]]] = []
    attempts = 0
    while len(products) < spec.product_count and attempts < spec.product_count * 20:
        attempts += 1
        concept = concepts[int(rng.integers(len(concepts)))]
        label = short_label(concept.id, ontology, rng)
        if label is None:
            continue
        quantity = 2 if len(label) <= 12 and rng.random() < 0.2 else 1
        unit = int(rng.integers(50, 3000))
        line_price = unit * quantity
        price = format_cents(line_price) + ("€" if rng.random() < 0.3 else "")
        printed = f"{quantity} X {label}" if quantity > 1 else label
        product_rows.append((printed, price))
        products.append(TruthProduct(label, concept.id, quantity, line_price))
    if not products:
        raise AssetError("Ontology yields no printable product label", asset="ontology")

    total = sum(product.line_price for product in products)
    totals: List[Tuple[str, Optional[str]]] = [("TOTAL", format_cents(total))]
    if rng.random() < 0.5:
        totals.append(("CB", format_cents(total)))

    footer: List[Tuple[str, Optional[str]]] = []
    if len(store.terminology) > 1 and rng.random() < 0.5:
        footer.append((store.terminology[1], None))
    footer.append(("MERCI DE VOTRE VISITE", None))
    return [header, product_rows, totals, footer], products


def render_paper(
    spec: SyntheticSpec,
    store: StoreRecord,
    ontology: Ontology,
    rng: np.random.Generator,
    font_scale: int = 2,
) -> Tuple[np.ndarray, List[TruthLine], List[TruthProduct], Optional[BBox]]:
    """Лента в прямом положении: пиксели, строки, товары, рамка логотипа"""
    paper_width = int(rng.integers(400, 421))
    paper_level = int(rng.integers(235, 251))
    ink = int(rng.integers(20, 51))
    blocks, products = _receipt_lines(spec, store, ontology, rng)
    extra = int(rng.integers(0, 61))

    logo = make_logo(store) if spec.logo_placement != "none" else None
    content = 16 + (logo.height + 24 if logo is not None else 8)
    content += sum(len(block) for block in blocks) * LINE_PITCH + (len(blocks) - 1) * LINE_PITCH + 16
    height = min(max(content + extra, MIN_PAPER_HEIGHT), MAX_PAPER_HEIGHT)
    if content > height:
        raise AssetError(f"Receipt content ({content}px) does not fit the paper", asset="layout")

    paper = np.full((height, paper_width), paper_level, dtype=np.uint8)
    logo_box: Optional[BBox] = None
    y = 16
    if logo is not None:
        x = (paper_width - logo.width) // 2
        # логотип рисуется чернилами ленты
        stamp = np.where(logo.pixels < 128, ink, paper_level).astype(np.uint8)
        paper[y:y + logo.height, x:x + logo.width] = stamp
        logo_box = BBox(x, y, logo.width, logo.height)
        y += logo.height + 24
    else:
        y += 8

    lines: List[TruthLine] = []
    for index, block in enumerate(blocks):
        if index:
            y += LINE_PITCH
        for left, right in block:
            left_box = draw_text(paper, MARGIN_X, y, left, font_scale, ink)
            if right is None:
                lines.append(TruthLine(left, left_box))
            else:
                right_x = paper_width - MARGIN_X - text_width(right, font_scale)
                right_box = draw_text(paper, right_x, y, right, font_scale, ink)
                spaces = max(2, (right_box.x - left_box.x2) // advance(font_scale))
                lines.append(TruthLine(
                    f"{left}{' ' * spaces}{right}",
                    left_box.union(right_box),
                    ((left, left_box), (right, right_box)),
                ))
            y += LINE_PITCH
    return paper, lines, products, logo_box


def _background(kind: str, shape: Tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    """Темный фон: однотонный, текстура или полосатая «фотоплитка»; среднее <= 110"""
    height, width = shape
    level = float(rng.integers(40, 91))
    if kind == "plain":
        return np.full(shape, level)
    if kind == "textured":
        grain = ndimage.gaussian_filter(rng.normal(0.0, 25.0, shape), sigma=3.0)
        return np.clip(level + 3.0 * grain, 0.0, 150.0)
    if kind == "photo-tile":
        period = float(rng.integers(24, 64))
        phase = float(rng.random() * 2.0 * np.pi)
        xx, yy = np.meshgrid(np.arange(width), np.arange(height))
        stripes = np.sin(2.0 * np.pi * (xx + 0.5 * yy) / period + phase)
        return np.clip(level + 20.0 + 30.0 * stripes, 0.0, 150.0)
    raise AssetError(f"Unknown background {kind!r}", asset="background")


def _blobs(canvas: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Серые пятна для изображений без чека"""
    height, width = canvas.shape
    weights = np.zeros(canvas.shape)
    for _ in range(int(rng.integers(3, 8))):
        cy, cx = int(rng.integers(height)), int(rng.integers(width))
        weights[cy, cx] = 1.0
    weights = ndimage.gaussian_filter(weights, sigma=float(rng.integers(30, 60)))
    if weights.max() > 0:
        weights /= weights.max()
    level = float(rng.integers(100, 171))
    return canvas * (1.0 - weights) + level * weights


def oracle_spec(spec: BackendSpec, config: CorpusConfig) -> BackendSpec:
    """Геометрия бэкенда с шагом оракула корпуса"""
    return spec.model_copy(update={"stride": min(config.oracle_stride, spec.input_size)})


def oracle_heatmap(coverage: np.ndarray, spec: BackendSpec) -> HeatMap:
    """Тепловая карта-оракул: доля ленты в окне каждой ячейки"""
    height, width = coverage.shape
    grid_h, grid_w = grid_shape(height, width, spec)
    probabilities = np.zeros((grid_h, grid_w))
    size = spec.input_size
    for i in range(grid_h):
        for j in range(grid_w):
            window = coverage[i * spec.stride:i * spec.stride + size, j * spec.stride:j * spec.stride + size]
            probabilities[i, j] = float(window.sum()) / float(size * size)
    return HeatMap.from_probabilities(probabilities, spec)


def generate(
    spec: SyntheticSpec,
    stores: StoreDatabase,
    ontology: Ontology,
    config: Optional[CorpusConfig] = None,
) -> SyntheticSample:
    """Изображение и разметка по параметрам образца; одинаковые spec дают одинаковые пиксели"""
    config = config or CorpusConfig()
    rng = np.random.default_rng(spec.seed)
    shape = (config.canvas_height, config.canvas_width)
    canvas = _background(spec.background, shape, rng)
    coverage = np.zeros(shape)

    if not spec.is_receipt:
        canvas = _blobs(canvas, rng)
        truth = GroundTruth(sample_id=spec.sample_id, present=False)
    else:
        store = _store(stores, spec.store_id)
        paper, lines, products, logo_box = render_paper(
            spec, store, ontology, rng, config.font_scale
        )
        paper_h, paper_w = paper.shape
        orientation = UPRIGHT
        if spec.logo_placement == "bottom-inverted":
            paper = paper[::-1, ::-1]
            orientation = INVERTED
            if logo_box is not None:
                logo_box = BBox(paper_w - logo_box.x2, paper_h - logo_box.y2, logo_box.w, logo_box.h)

        rotated = rotate(GrayImage(paper), spec.rotation, fill=0).as_float()
        alpha = rotate(
            GrayImage(np.full(paper.shape, 255, dtype=np.uint8)), spec.rotation, fill=0
        ).as_float() / 255.0
        rot_h, rot_w = rotated.shape
        if rot_h > shape[0] or rot_w > shape[1]:
            raise AssetError(
                f"Rotated paper {rot_w}x{rot_h} does not fit the canvas", asset="canvas"
            )
        oy = int(rng.integers(0, shape[0] - rot_h + 1))
        ox = int(rng.integers(0, shape[1] - rot_w + 1))
        region = canvas[oy:oy + rot_h, ox:ox + rot_w]
        # rotate с fill=0 уже умножает ленту на alpha
        canvas[oy:oy + rot_h, ox:ox + rot_w] = rotated + (1.0 - alpha) * region
        coverage[oy:oy + rot_h, ox:ox + rot_w] = alpha

        corners = [(0.0, 0.0), (float(paper_w), 0.0), (float(paper_w), float(paper_h)), (0.0, float(paper_h))]
        mapped = rotate_corners(corners, spec.rotation, (paper_h, paper_w))
        quad = Quad(tuple((x + ox, y + oy) for x, y in mapped))
        truth = GroundTruth(
            sample_id=spec.sample_id,
            present=True,
            quad=quad,
            store_id=spec.store_id,
            logo_box=logo_box,
            orientation=orientation,
            paper_size=(paper_w, paper_h),
            lines=tuple(lines),
            products=tuple(products),
        )

    if spec.noise_sigma > 0:
        canvas = canvas + rng.normal(0.0, spec.noise_sigma, shape)
    image = GrayImage(np.clip(np.rint(canvas), 0, 255).astype(np.uint8))
    return SyntheticSample(spec, image, truth, coverage)


def sample_spec(
    sample_id: str,
    store_ids: Sequence[str],
    index: int,
    receipt: bool,
    config: CorpusConfig,
    rng: np.random.Generator,
) -> SyntheticSpec:
    """Случайные параметры образца; все величины тянутся всегда, в одном порядке"""
    product_count = int(rng.integers(3, 9))
    rotation = round(float(rng.uniform(-config.max_rotation, config.max_rotation)), 2)
    background = BACKGROUNDS[int(rng.integers(len(BACKGROUNDS)))]
    u = float(rng.random())
    placement = "top" if u < 0.7 else ("bottom-inverted" if u < 0.85 else "none")
    seed = int(rng.integers(0, 2**31 - 1))
    return SyntheticSpec(
        sample_id=sample_id,
        store_id=store_ids[index % len(store_ids)] if receipt else None,
        product_count=product_count,
        rotation=rotation,
        background=background,
        noise_sigma=config.noise_sigma,
        logo_placement=placement,
        ocr_noise_rate=config.ocr_noise_rate,
        seed=seed,
    )
