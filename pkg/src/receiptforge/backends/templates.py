"""
Template-correlation logo backends

Both backends compare mean-subtracted, unit-norm pixel vectors (normalized
cross-correlation at zero shift) against per-store logo templates.
"""
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage
from scipy.special import expit, softmax

from ..core.exceptions import ConfigError
from ..core.interfaces import IClassifierBackend
from ..core.logging import get_logger
from ..core.settings import BackendSpec
from ..imaging.codecs import load_image
from ..imaging.models import GrayImage
from ..imaging.raster import resize
from .sliding import WindowedSegmentationBackend

logger = get_logger(__name__)

LOGO_CLASS = "logo"
BACKGROUND_CLASS = "background"


def load_logo_templates(directory: Union[str, Path]) -> Dict[str, List[GrayImage]]:
    """Read `<class_label>_<k>.pgm` files grouped by class label"""
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError(f"Logo template directory not found: {directory}", config_key="logo_templates")
    templates: Dict[str, List[GrayImage]] = {}
    for path in sorted(directory.glob("*.pgm")):
        label, sep, index = path.stem.rpartition("_")
        if not sep or not label or not index.isdigit():
            logger.warning(f"Skipping logo template with unexpected name: {path.name}")
            continue
        templates.setdefault(label, []).append(load_image(path))
    if not templates:
        raise ConfigError(f"No logo templates in {directory}", config_key="logo_templates")
    return templates


def _normalize_rows(vectors: np.ndarray) -> np.ndarray:
    """Mean-subtract and scale each row to unit norm (zero rows stay zero)"""
    centered = vectors - vectors.mean(axis=-1, keepdims=True)
    norms = np.linalg.norm(centered, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(norms > 1e-9, centered / np.where(norms > 1e-9, norms, 1.0), 0.0)
    return unit


class TemplateLogoClassifier(IClassifierBackend):
    """Softmax over classes of the best template correlation"""

    def __init__(
        self,
        templates: Mapping[str, Sequence[GrayImage]],
        input_size: int = 227,
        temperature: float = 0.1,
    ):
        if not templates or any(len(images) == 0 for images in templates.values()):
            raise ConfigError("Template classifier needs at least one template per class",
                              config_key="logo_templates")
        self.input_size = input_size
        self.temperature = temperature
        self._labels: Tuple[str, ...] = tuple(templates.keys())
        self._owners: List[int] = []
        vectors = []
        for index, label in enumerate(self._labels):
            for image in templates[label]:
                vectors.append(self._vectorize(image))
                self._owners.append(index)
        self._matrix = _normalize_rows(np.stack(vectors))
        self._owners_array = np.array(self._owners)

    def _vectorize(self, image: GrayImage) -> np.ndarray:
        return resize(image, self.input_size, self.input_size).as_float().ravel()

    @property
    def class_labels(self) -> Sequence[str]:
        return self._labels

    def correlations(self, image: GrayImage) -> np.ndarray:
        """Max correlation per class, in class_labels order"""
        query = _normalize_rows(self._vectorize(image)[None, :])[0]
        per_template = self._matrix @ query
        best = np.full(len(self._labels), -1.0)
        np.maximum.at(best, self._owners_array, per_template)
        return best

    def probabilities(self, image: GrayImage) -> np.ndarray:
        return softmax(self.correlations(image) / self.temperature)

    def rank(self, image: GrayImage) -> List[Tuple[str, float]]:
        probs = self.probabilities(image)
        ranked = sorted(zip(self._labels, probs.tolist()), key=lambda item: (-item[1], item[0]))
        return [(label, float(p)) for label, p in ranked]


class TemplateLogoSegmentation(WindowedSegmentationBackend):
    """
    Two-class {logo, background} map: logo score = σ(gain·(max NCC − 0.5))
    computed on windows pooled by `pool` and lightly smoothed.
    """

    def __init__(
        self,
        templates: Mapping[str, Sequence[GrayImage]],
        spec: Optional[BackendSpec] = None,
        pool: int = 4,
        gain: float = 10.0,
        smoothing: float = 2.0,
    ):
        spec = spec or BackendSpec(
            input_size=227, stride=38, class_labels=[LOGO_CLASS, BACKGROUND_CLASS]
        )
        if list(spec.class_labels[:2]) != [LOGO_CLASS, BACKGROUND_CLASS]:
            raise ConfigError("Logo segmentation classes must be [logo, background]",
                              config_key="sign.logo_backend.class_labels")
        if not templates or not any(templates.values()):
            raise ConfigError("Logo segmentation needs templates", config_key="logo_templates")
        super().__init__(spec)
        self.pool = pool
        self.gain = gain
        self.smoothing = smoothing
        self._cells = spec.input_size // pool
        vectors = [
            self._pool(resize(image, spec.input_size, spec.input_size).as_float())
            for images in templates.values()
            for image in images
        ]
        self._matrix = _normalize_rows(np.stack([v.ravel() for v in vectors]))

    def _pool(self, windows: np.ndarray) -> np.ndarray:
        """Block-mean pooling over the last two axes, then Gaussian smoothing"""
        n, p = self._cells, self.pool
        trimmed = windows[..., : n * p, : n * p].astype(np.float64)
        pooled = trimmed.reshape(trimmed.shape[:-2] + (n, p, n, p)).mean(axis=(-3, -1))
        if self.smoothing > 0:
            sigma = [0.0] * (pooled.ndim - 2) + [self.smoothing, self.smoothing]
            pooled = ndimage.gaussian_filter(pooled, sigma=sigma, mode="nearest")
        return pooled

    def score_windows(self, windows: np.ndarray) -> np.ndarray:
        grid_h, grid_w = windows.shape[:2]
        logo = np.empty((grid_h, grid_w), dtype=np.float64)
        for i in range(grid_h):
            pooled = self._pool(np.asarray(windows[i]))
            unit = _normalize_rows(pooled.reshape(grid_w, -1))
            best = (unit @ self._matrix.T).max(axis=1)
            logo[i] = expit(self.gain * (best - 0.5))
        scores = np.zeros((grid_h, grid_w, self.spec.class_count), dtype=np.float64)
        scores[..., 0] = logo
        scores[..., 1] = 1.0 - logo
        return scores
