"""
Image ingestion (PGM, PNG, JPEG) and PGM output
"""
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..core.exceptions import DecodeError
from .models import GrayImage
from .raster import to_luminance


def load_image(path: Union[str, Path]) -> GrayImage:
    """Decode an image file into luminance"""
    path = Path(path)
    try:
        with Image.open(path) as pil:
            pil.load()
            if pil.mode == "L":
                return GrayImage(np.asarray(pil))
            if pil.mode in ("I;16", "I;16B", "I"):
                # the decoder rescales the header maxval to the 16-bit full scale
                wide = np.asarray(pil, dtype=np.float64)
                return GrayImage(wide * (255.0 / 65535.0))
            if pil.mode not in ("RGB", "RGBA"):
                pil = pil.convert("RGB")
            return to_luminance(np.asarray(pil))
    except FileNotFoundError:
        raise DecodeError(f"Image not found: {path}", path=str(path))
    except (UnidentifiedImageError, OSError, ValueError) as e:
        raise DecodeError(f"Cannot decode {path}: {e}", path=str(path))


def save_pgm(img: GrayImage, path: Union[str, Path]) -> Path:
    """Write a binary (P5) PGM"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.ascontiguousarray(img.pixels)).save(path, format="PPM")
    return path
