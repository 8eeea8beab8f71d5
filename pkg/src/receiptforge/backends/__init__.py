"""
Сегментационные и классификационные бэкенды
"""
from ..core.settings import BackendSpec
from .heuristic import HeuristicReceiptBackend
from .models import HeatMap, grid_shape
from .oracle import FileOracleBackend, read_heatmap_sidecar, write_heatmap_sidecar
from .registry import create_backend, registry
from .templates import TemplateLogoClassifier, TemplateLogoSegmentation, load_logo_templates

__all__ = [
    "BackendSpec",
    "FileOracleBackend",
    "HeatMap",
    "HeuristicReceiptBackend",
    "TemplateLogoClassifier",
    "TemplateLogoSegmentation",
    "create_backend",
    "grid_shape",
    "load_logo_templates",
    "read_heatmap_sidecar",
    "registry",
    "write_heatmap_sidecar",
]
