"""
Sliding-window inference shared by the reference segmentation backends
"""
from abc import abstractmethod
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..core.interfaces import ISegmentationBackend
from ..core.logging import get_logger
from ..core.settings import BackendSpec
from ..imaging.models import GrayImage
from ..imaging.raster import pad_to
from .models import HeatMap, grid_shape

logger = get_logger(__name__)


class WindowedSegmentationBackend(ISegmentationBackend):
    """Scores every input_size² window placed at multiples of the stride"""

    def __init__(self, spec: BackendSpec):
        self._spec = spec

    @property
    def spec(self) -> BackendSpec:
        return self._spec

    @abstractmethod
    def score_windows(self, windows: np.ndarray) -> np.ndarray:
        """
        Class probabilities for a batch of windows.

        windows: (grid_h, grid_w, input_size, input_size) uint8
        returns: (grid_h, grid_w, class_count), rows summing to 1
        """

    def infer_heatmap(self, image: GrayImage, sample_id: Optional[str] = None) -> HeatMap:
        spec = self._spec
        padded = pad_to(image, spec.input_size, spec.input_size, fill=255)
        grid_h, grid_w = grid_shape(padded.height, padded.width, spec)

        windows = sliding_window_view(
            padded.pixels, (spec.input_size, spec.input_size)
        )[::spec.stride, ::spec.stride][:grid_h, :grid_w]
        scores = self.score_windows(windows)

        logger.debug(
            f"{type(self).__name__}: {grid_h}x{grid_w} grid",
            extra={'stage': 'backend', 'sample_id': sample_id or '-'},
        )
        return HeatMap(spec.stride, spec.input_size, tuple(spec.class_labels), scores)
