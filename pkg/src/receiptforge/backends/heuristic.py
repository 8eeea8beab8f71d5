"""
Desk-scale receipt / not-receipt backend

Stands in for a trained segmentation network: a window looks like receipt paper
when it is mostly bright and carries rows of dark print on that bright paper.
"""
from typing import Optional

import numpy as np
from scipy.special import expit

from ..core.settings import BackendSpec, HeuristicBackendConfig
from .sliding import WindowedSegmentationBackend


def brightness_fraction(window: np.ndarray, config: HeuristicBackendConfig) -> np.ndarray:
    """Fraction of pixels brighter than bright_level, over the last two axes"""
    return (window > config.bright_level).mean(axis=(-2, -1))


def ink_row_fraction(window: np.ndarray, config: HeuristicBackendConfig) -> np.ndarray:
    """Fraction of rows holding print: enough dark pixels on otherwise bright paper"""
    dark = (window < config.dark_level).sum(axis=-1)
    bright = (window > config.bright_level).mean(axis=-1)
    ink_rows = (dark >= config.min_dark_per_row) & (bright >= config.paper_row_fraction)
    return ink_rows.mean(axis=-1)


def receipt_score(
    brightness_frac: np.ndarray,
    ink_row_frac: np.ndarray,
    config: HeuristicBackendConfig,
) -> np.ndarray:
    x = config.alpha * (brightness_frac - 0.5) + config.beta * (ink_row_frac - config.ink_row_offset)
    return expit(x)


class HeuristicReceiptBackend(WindowedSegmentationBackend):
    """Two-class {receipt, not_receipt} scoring from brightness and print rows"""

    def __init__(
        self,
        spec: Optional[BackendSpec] = None,
        config: Optional[HeuristicBackendConfig] = None,
    ):
        super().__init__(spec or BackendSpec())
        self.config = config or HeuristicBackendConfig()

    def score_window(self, window: np.ndarray) -> float:
        """Receipt probability of a single window"""
        return float(
            receipt_score(
                brightness_fraction(window, self.config),
                ink_row_fraction(window, self.config),
                self.config,
            )
        )

    def score_windows(self, windows: np.ndarray) -> np.ndarray:
        receipt = receipt_score(
            brightness_fraction(windows, self.config),
            ink_row_fraction(windows, self.config),
            self.config,
        )
        receipt = np.asarray(receipt, dtype=np.float64)
        # extra classes beyond the first two get no mass
        scores = np.zeros(receipt.shape + (self.spec.class_count,), dtype=np.float64)
        scores[..., 0] = receipt
        scores[..., 1] = 1.0 - receipt
        return scores
