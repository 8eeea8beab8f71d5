"""
Встроенный растровый шрифт 5x7 (ASCII + буквы Latin-1, сведенные к базовому глифу)
"""
from functools import lru_cache
from typing import Dict, Tuple

import numpy as np

from ..core.exceptions import AssetError
from ..imaging.models import BBox
from ..utils.text_normalizer import strip_diacritics

GLYPH_WIDTH = 5
GLYPH_HEIGHT = 7
SPACING = 1

_GLYPHS: Dict[str, Tuple[str, ...]] = {
    "A": (".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"),
    "B": ("####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."),
    "C": (".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."),
    "D": ("###..", "#..#.", "#...#", "#...#", "#...#", "#..#.", "###.."),
    "E": ("#####", "#....", "#....", "####.", "#....", "#....", "#####"),
    "F": ("#####", "#....", "#....", "####.", "#....", "#....", "#...."),
    "G": (".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".####"),
    "H": ("#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"),
    "I": (".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."),
    "J": ("..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."),
    "K": ("#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"),
    "L": ("#....", "#....", "#....", "#....", "#....", "#....", "#####"),
    "M": ("#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"),
    "N": ("#...#", "#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#"),
    "O": (".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."),
    "P": ("####.", "#...#", "#...#", "####.", "#....", "#....", "#...."),
    "Q": (".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"),
    "R": ("####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"),
    "S": (".####", "#....", "#....", ".###.", "....#", "....#", "####."),
    "T": ("#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."),
    "U": ("#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."),
    "V": ("#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."),
    "W": ("#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#."),
    "X": ("#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"),
    "Y": ("#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."),
    "Z": ("#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"),
    "0": (".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."),
    "1": ("..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."),
    "2": (".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"),
    "3": ("#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."),
    "4": ("...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."),
    "5": ("#####", "#....", "####.", "....#", "....#", "#...#", ".###."),
    "6": ("..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."),
    "7": ("#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."),
    "8": (".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."),
    "9": (".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."),
    " ": (".....",) * 7,
    ".": (".....", ".....", ".....", ".....", ".....", ".##..", ".##.."),
    ",": (".....", ".....", ".....", ".....", ".##..", "..#..", ".#..."),
    "-": (".....", ".....", ".....", "#####", ".....", ".....", "....."),
    "'": ("..#..", "..#..", ".#...", ".....", ".....", ".....", "....."),
    "/": (".....", "....#", "...#.", "..#..", ".#...", "#....", "....."),
    "%": ("##...", "##..#", "...#.", "..#..", ".#...", "#..##", "...##"),
    "*": (".....", "..#..", "#.#.#", ".###.", "#.#.#", "..#..", "....."),
    ":": (".....", ".##..", ".##..", ".....", ".##..", ".##..", "....."),
    "€": ("..###", ".#...", "####.", ".#...", "####.", ".#...", "..###"),
    "$": ("..#..", ".####", "#.#..", ".###.", "..#.#", "####.", "..#.."),
    "£": ("..##.", ".#..#", ".#...", "###..", ".#...", ".#..#", "#.##."),
    "&": (".##..", "#..#.", "#.#..", ".#...", "#.#.#", "#..#.", ".##.#"),
    "(": ("...#.", "..#..", ".#...", ".#...", ".#...", "..#..", "...#."),
    ")": (".#...", "..#..", "...#.", "...#.", "...#.", "..#..", ".#..."),
    "+": (".....", "..#..", "..#..", "#####", "..#..", "..#..", "....."),
    "=": (".....", ".....", "#####", ".....", "#####", ".....", "....."),
    "#": (".#.#.", ".#.#.", "#####", ".#.#.", "#####", ".#.#.", ".#.#."),
    "!": ("..#..", "..#..", "..#..", "..#..", "..#..", ".....", "..#.."),
    "?": (".###.", "#...#", "....#", "...#.", "..#..", ".....", "..#.."),
}


def fold(ch: str) -> str:
    """Строчные -> прописные, буквы с диакритикой -> базовая буква"""
    if ch in _GLYPHS:
        return ch
    base = strip_diacritics(ch).upper()
    return base if len(base) == 1 else ch


@lru_cache(maxsize=None)
def glyph(ch: str) -> np.ndarray:
    """Битовая маска глифа (7, 5)"""
    key = fold(ch)
    rows = _GLYPHS.get(key)
    if rows is None:
        raise AssetError(f"No glyph for character {ch!r}", asset="font")
    bitmap = np.array([[cell == "#" for cell in row] for row in rows], dtype=bool)
    bitmap.setflags(write=False)
    return bitmap


def advance(scale: int) -> int:
    return (GLYPH_WIDTH + SPACING) * scale


def text_width(text: str, scale: int) -> int:
    """Ширина строки без завершающего межбуквенного интервала"""
    if not text:
        return 0
    return len(text) * advance(scale) - SPACING * scale


def render_text(text: str, scale: int = 2) -> np.ndarray:
    """Маска строки высотой 7·scale"""
    height = GLYPH_HEIGHT * scale
    bitmap = np.zeros((height, max(text_width(text, scale), 1)), dtype=bool)
    for index, ch in enumerate(text):
        cell = np.kron(glyph(ch), np.ones((scale, scale), dtype=bool))
        x = index * advance(scale)
        bitmap[:, x:x + GLYPH_WIDTH * scale] |= cell
    return bitmap


def draw_text(canvas: np.ndarray, x: int, y: int, text: str, scale: int = 2, ink: int = 0) -> BBox:
    """
    Нарисовать строку на canvas (uint8) с левым верхним углом (x, y).

    Возвращает плотную рамку чернил в координатах canvas.
    """
    bitmap = render_text(text, scale)
    height, width = bitmap.shape
    region = canvas[y:y + height, x:x + width]
    if region.shape != bitmap.shape:
        raise AssetError(f"Text {text!r} does not fit at ({x}, {y})", asset="font")
    region[bitmap] = ink
    rows = np.flatnonzero(bitmap.any(axis=1))
    cols = np.flatnonzero(bitmap.any(axis=0))
    if rows.size == 0:
        return BBox(x, y, width, height)
    return BBox.from_corners(x + int(cols[0]), y + int(rows[0]), x + int(cols[-1]) + 1, y + int(rows[-1]) + 1)
