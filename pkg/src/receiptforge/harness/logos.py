"""
Процедурные логотипы магазинов: рамка, узор-эмблема и инициалы
"""
import zlib
from pathlib import Path
from typing import Dict, List, Union

import numpy as np

from ..database.models import StoreRecord
from ..database.store_repository import StoreDatabase
from ..imaging.codecs import save_pgm
from ..imaging.models import GrayImage
from .font import GLYPH_HEIGHT, draw_text, text_width

LOGO_SIZES = {"long": (240, 80), "short": (240, 160)}
FRAME = 6
PAPER = 255
INK = 0


def initials(store: StoreRecord) -> str:
    words = [word for word in store.display_name.split() if word[:1].isalnum()]
    return "".join(word[0] for word in words[:3]).upper() or store.store_id.upper()


def _emblem(store_id: str, size: int) -> np.ndarray:
    """Квадратный блочный узор, детерминированный по store_id"""
    rng = np.random.default_rng(zlib.crc32(store_id.encode("utf-8")))
    cells = 5 + int(rng.integers(2))
    pattern = rng.random((cells, cells)) < 0.5
    # симметрия по вертикали делает узор похожим на эмблему
    pattern[:, cells - cells // 2:] = pattern[:, :cells // 2][:, ::-1]
    pattern[0, :] = pattern[-1, :] = True
    block = max(size // cells, 1)
    return np.kron(pattern, np.ones((block, block), dtype=bool))


def make_logo(store: StoreRecord) -> GrayImage:
    """Логотип магазина: 240x80 (long) или 240x160 (short)"""
    width, height = LOGO_SIZES[store.logo_aspect]
    canvas = np.full((height, width), PAPER, dtype=np.uint8)
    canvas[:FRAME, :] = INK
    canvas[-FRAME:, :] = INK
    canvas[:, :FRAME] = INK
    canvas[:, -FRAME:] = INK

    inner = height - 4 * FRAME
    emblem = _emblem(store.store_id, inner)
    ey = (height - emblem.shape[0]) // 2
    ex = 2 * FRAME
    canvas[ey:ey + emblem.shape[0], ex:ex + emblem.shape[1]][emblem] = INK

    text = initials(store)
    left = ex + emblem.shape[1] + FRAME
    room = width - left - 2 * FRAME
    scale = max(1, min(inner // GLYPH_HEIGHT, room // max(text_width(text, 1), 1)))
    tx = left + max(0, (room - text_width(text, scale)) // 2)
    ty = (height - GLYPH_HEIGHT * scale) // 2
    draw_text(canvas, tx, ty, text, scale, INK)
    return GrayImage(canvas)


def make_logos(stores: StoreDatabase) -> Dict[str, GrayImage]:
    return {store.store_id: make_logo(store) for store in stores}


def write_logo_templates(stores: StoreDatabase, directory: Union[str, Path]) -> List[Path]:
    """Шаблоны `<store_id>_0.pgm` для template-бэкендов"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return [
        save_pgm(logo, directory / f"{store_id}_0.pgm")
        for store_id, logo in make_logos(stores).items()
    ]
