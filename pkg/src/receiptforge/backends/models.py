"""
Heat map produced by segmentation backends
"""
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from ..core.exceptions import ClassMismatch, HeatMapError
from ..core.settings import BackendSpec
from ..imaging.models import BBox

SUM_TOLERANCE = 1e-6


def grid_shape(height: int, width: int, spec: BackendSpec) -> Tuple[int, int]:
    """(grid_h, grid_w) of a sliding window over an image at least input_size on both axes"""
    height = max(height, spec.input_size)
    width = max(width, spec.input_size)
    grid_h = (height - spec.input_size) // spec.stride + 1
    grid_w = (width - spec.input_size) // spec.stride + 1
    return grid_h, grid_w


@dataclass(frozen=True, eq=False)
class HeatMap:
    """Per-cell, per-class probabilities with the window geometry that produced them"""

    stride: int
    input_size: int
    class_labels: Tuple[str, ...]
    scores: np.ndarray  # (grid_h, grid_w, class_count)

    def __post_init__(self):
        scores = np.array(self.scores, dtype=np.float64, copy=True)
        labels = tuple(self.class_labels)
        if scores.ndim != 3:
            raise HeatMapError(f"Scores must be (grid_h, grid_w, classes), got {scores.shape}")
        if scores.shape[0] < 1 or scores.shape[1] < 1:
            raise HeatMapError("Heat map grid must have at least one cell")
        if scores.shape[2] != len(labels) or len(labels) < 2:
            raise HeatMapError(
                f"{scores.shape[2]} score channels for {len(labels)} class labels"
            )
        if self.stride <= 0 or self.input_size <= 0 or self.stride > self.input_size:
            raise HeatMapError(f"Invalid window geometry stride={self.stride} input={self.input_size}")
        if np.any(scores < 0.0) or np.any(scores > 1.0):
            raise HeatMapError("Scores must lie in [0, 1]")
        sums = scores.sum(axis=2)
        if np.any(np.abs(sums - 1.0) > SUM_TOLERANCE):
            worst = float(np.max(np.abs(sums - 1.0)))
            raise HeatMapError(f"Cell scores must sum to 1 (worst deviation {worst:.2e})")
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "class_labels", labels)

    @property
    def grid_h(self) -> int:
        return int(self.scores.shape[0])

    @property
    def grid_w(self) -> int:
        return int(self.scores.shape[1])

    @property
    def class_count(self) -> int:
        return len(self.class_labels)

    def channel(self, label: str) -> np.ndarray:
        """Score plane of one class"""
        if label not in self.class_labels:
            raise ClassMismatch(label, list(self.class_labels))
        return self.scores[:, :, self.class_labels.index(label)]

    def cell_rect(self, i: int, j: int) -> BBox:
        """Source window of cell (row i, column j)"""
        return BBox(j * self.stride, i * self.stride, self.input_size, self.input_size)

    def positive_cells(self, label: str, threshold: float) -> Sequence[Tuple[int, int]]:
        rows, cols = np.nonzero(self.channel(label) >= threshold)
        return list(zip(rows.tolist(), cols.tolist()))

    @classmethod
    def from_probabilities(
        cls,
        receipt_scores: np.ndarray,
        spec: BackendSpec,
    ) -> "HeatMap":
        """Two-class heat map from the first class's probabilities"""
        first = np.clip(np.asarray(receipt_scores, dtype=np.float64), 0.0, 1.0)
        scores = np.stack([first, 1.0 - first], axis=2)
        return cls(spec.stride, spec.input_size, tuple(spec.class_labels[:2]), scores)
