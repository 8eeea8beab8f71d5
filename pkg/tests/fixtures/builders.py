"""
Построители тестовых изображений и масок
"""
from typing import List, Sequence, Tuple

import numpy as np

from receiptforge.harness.font import draw_text, text_width
from receiptforge.imaging.models import BBox, BinaryMask, GrayImage


def blank(width: int, height: int, level: int = 255) -> GrayImage:
    return GrayImage(np.full((height, width), level, dtype=np.uint8))


def paper_on_background(
    size: Tuple[int, int] = (400, 300),
    rect: Tuple[int, int, int, int] = (100, 50, 200, 200),
    paper: int = 240,
    background: int = 60,
) -> GrayImage:
    """Светлый прямоугольник (x, y, w, h) на темном фоне"""
    width, height = size
    pixels = np.full((height, width), background, dtype=np.uint8)
    x, y, w, h = rect
    pixels[y:y + h, x:x + w] = paper
    return GrayImage(pixels)


def text_page(
    lines: Sequence[str],
    width: int = 300,
    top: int = 0,
    pitch: int = 22,
    x: int = 10,
    height: int = None,
) -> Tuple[GrayImage, List[BBox]]:
    """Белая страница со строками текста шрифта 5x7; возвращает плотные рамки строк"""
    height = height or top + pitch * len(lines) + 10
    canvas = np.full((height, width), 255, dtype=np.uint8)
    boxes = [draw_text(canvas, x, top + k * pitch, text) for k, text in enumerate(lines)]
    return GrayImage(canvas), boxes


def two_column_row(label: str, price: str, width: int = 300, y: int = 4) -> Tuple[GrayImage, BBox, BBox]:
    """Строка товара: метка слева, цена у правого края"""
    canvas = np.full((y + 24, width), 255, dtype=np.uint8)
    left = draw_text(canvas, 10, y, label)
    right = draw_text(canvas, width - 10 - text_width(price, 2), y, price)
    return GrayImage(canvas), left, right


def random_mask(rng: np.random.Generator, max_height: int = 32, max_width: int = 48) -> BinaryMask:
    """Маска из нескольких прямоугольников чернил и редких точек"""
    height = int(rng.integers(4, max_height + 1))
    width = int(rng.integers(4, max_width + 1))
    bits = np.zeros((height, width), dtype=bool)
    for _ in range(int(rng.integers(0, 9))):
        y = int(rng.integers(0, height))
        x = int(rng.integers(0, width))
        bits[y:y + int(rng.integers(1, 6)), x:x + int(rng.integers(1, 12))] = True
    bits |= rng.random((height, width)) < 0.02
    return BinaryMask(bits)
