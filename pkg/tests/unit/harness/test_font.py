"""
Тесты встроенного растрового шрифта
"""
import numpy as np
import pytest

from receiptforge.core.exceptions import AssetError
from receiptforge.harness.font import advance, draw_text, glyph, render_text, text_width
from receiptforge.imaging.models import BBox


class TestGlyphs:
    """Тест набора глифов"""

    def test_case_and_accents_fold(self):
        assert np.array_equal(glyph("a"), glyph("A"))
        assert np.array_equal(glyph("é"), glyph("E"))
        assert glyph("A").shape == (7, 5)

    def test_missing_glyph(self):
        with pytest.raises(AssetError) as exc:
            glyph("~")
        assert exc.value.error_code == "ASSET_ERROR"

    def test_metrics(self):
        assert advance(2) == 12
        assert text_width("AB", 2) == 22
        assert text_width("", 2) == 0
        assert render_text("I", 1).shape == (7, 5)
        assert render_text("PAIN", 2).shape == (14, text_width("PAIN", 2))


class TestDrawText:
    """Тест отрисовки строки"""

    def test_tight_ink_box(self):
        canvas = np.full((40, 100), 255, dtype=np.uint8)
        box = draw_text(canvas, 3, 5, "I", scale=2, ink=0)
        # у «I» крайние столбцы глифа пустые
        assert box == BBox(5, 5, 6, 14)
        assert int((canvas == 0).sum()) == 11 * 4

    def test_blank_text_keeps_cell(self):
        canvas = np.full((40, 100), 255, dtype=np.uint8)
        assert draw_text(canvas, 0, 0, " ") == BBox(0, 0, 10, 14)
        assert (canvas == 255).all()

    def test_text_must_fit(self):
        canvas = np.full((20, 30), 255, dtype=np.uint8)
        with pytest.raises(AssetError):
            draw_text(canvas, 0, 0, "MERCI")
