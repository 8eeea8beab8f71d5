"""
File-oracle backend: replays a heat map stored in a text sidecar

Sidecar format:
    HEATMAP v1
    grid_h grid_w class_count stride input_size
    label_1 ... label_N
    grid_h·grid_w lines of N floats, row-major
"""
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from ..core.exceptions import HeatMapError, OracleLoadError, OracleShapeError
from ..core.interfaces import ISegmentationBackend
from ..core.logging import get_logger
from ..core.settings import BackendSpec
from ..imaging.models import GrayImage
from .models import HeatMap, grid_shape

logger = get_logger(__name__)

MAGIC = "HEATMAP v1"


def read_heatmap_sidecar(path: Union[str, Path]) -> HeatMap:
    path = Path(path)
    try:
        lines = [line.strip() for line in path.read_text(encoding="utf-8").splitlines()]
    except FileNotFoundError:
        raise OracleLoadError(f"Heat map sidecar not found: {path}", path=str(path))
    except (OSError, UnicodeDecodeError) as e:
        raise OracleLoadError(f"Cannot read heat map sidecar {path}: {e}", path=str(path))

    lines = [line for line in lines if line]
    if len(lines) < 3 or lines[0] != MAGIC:
        raise OracleLoadError(f"{path} is not a '{MAGIC}' sidecar", path=str(path))
    try:
        grid_h, grid_w, class_count, stride, input_size = (int(v) for v in lines[1].split())
        labels = lines[2].split()
        rows = [[float(v) for v in line.split()] for line in lines[3:]]
    except ValueError as e:
        raise OracleLoadError(f"Malformed sidecar {path}: {e}", path=str(path))

    if len(labels) != class_count:
        raise OracleLoadError(
            f"{path} declares {class_count} classes but lists {len(labels)} labels", path=str(path)
        )
    if len(rows) != grid_h * grid_w or any(len(row) != class_count for row in rows):
        raise OracleLoadError(
            f"{path} must hold {grid_h * grid_w} rows of {class_count} scores", path=str(path)
        )
    try:
        scores = np.array(rows, dtype=np.float64).reshape(grid_h, grid_w, class_count)
        return HeatMap(stride, input_size, tuple(labels), scores)
    except HeatMapError as e:
        raise OracleLoadError(f"Invalid heat map in {path}: {e.message}", path=str(path))


def write_heatmap_sidecar(heatmap: HeatMap, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines: List[str] = [
        MAGIC,
        f"{heatmap.grid_h} {heatmap.grid_w} {heatmap.class_count} {heatmap.stride} {heatmap.input_size}",
        " ".join(heatmap.class_labels),
    ]
    for i in range(heatmap.grid_h):
        for j in range(heatmap.grid_w):
            lines.append(" ".join(repr(float(v)) for v in heatmap.scores[i, j]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class FileOracleBackend(ISegmentationBackend):
    """Ignores pixel content and returns the stored heat map"""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self.heatmap = read_heatmap_sidecar(self.path)
        self._spec = BackendSpec(
            input_size=self.heatmap.input_size,
            stride=self.heatmap.stride,
            class_labels=list(self.heatmap.class_labels),
        )

    @property
    def spec(self) -> BackendSpec:
        return self._spec

    def infer_heatmap(self, image: GrayImage, sample_id: Optional[str] = None) -> HeatMap:
        expected = grid_shape(image.height, image.width, self._spec)
        actual = (self.heatmap.grid_h, self.heatmap.grid_w)
        if expected != actual:
            raise OracleShapeError(expected=expected, actual=actual)
        logger.debug(
            f"Oracle heat map replayed from {self.path.name}",
            extra={'stage': 'backend', 'sample_id': sample_id or '-'},
        )
        return self.heatmap
