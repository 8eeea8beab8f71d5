"""
Unified configuration system for ReceiptForge
"""
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, Field, ValidationError as PydanticValidationError
from pydantic import field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class BackendSpec(BaseModel):
    """Sliding-window backend geometry"""

    model_config = {"frozen": True}

    input_size: int = Field(default=227, gt=0)
    stride: int = Field(default=227, gt=0)
    class_labels: List[str] = Field(default_factory=lambda: ["receipt", "not_receipt"])

    @property
    def class_count(self) -> int:
        return len(self.class_labels)

    @field_validator('class_labels')
    @classmethod
    def validate_class_labels(cls, v):
        if len(v) < 2:
            raise ValueError('class_labels must name at least 2 classes')
        if len(set(v)) != len(v):
            raise ValueError('class_labels must be unique')
        return list(v)

    @model_validator(mode='after')
    def validate_stride(self):
        if self.stride > self.input_size:
            raise ValueError('stride must not exceed input_size')
        return self


class HeuristicBackendConfig(BaseModel):
    """Calibration knobs of the desk-scale receipt backend"""

    model_config = {"frozen": True}

    alpha: float = 6.0
    beta: float = 4.0
    bright_level: int = Field(default=200, ge=0, le=255)
    dark_level: int = Field(default=100, ge=0, le=255)
    ink_row_offset: float = 0.15
    min_dark_per_row: int = Field(default=3, ge=1)
    paper_row_fraction: float = Field(default=0.5, ge=0.0, le=1.0)


class DetectionConfig(BaseModel):
    """Receipt / not-receipt thresholds"""

    model_config = {"frozen": True}

    heat_threshold: float = Field(default=0.70, gt=0.0, lt=1.0)
    receipt_ratio: float = Field(default=0.25, gt=0.0, lt=1.0)
    target_class: str = "receipt"
    grammar_version: str = "product-line-v1"


class CropConfig(BaseModel):
    """Wide crop and step-edge detector parameters"""

    model_config = {"frozen": True}

    margin: float = Field(default=0.05, ge=0.0, lt=1.0)
    strip_width: int = Field(default=7, ge=1)
    contrast: float = Field(default=40.0, gt=0.0)
    min_support: int = Field(default=8, ge=2)
    quasi_angle: float = Field(default=20.0, gt=0.0, le=45.0)
    outlier_rounds: int = Field(default=2, ge=0)
    residual_floor: float = Field(default=1.0, ge=0.0)
    bounds_factor: float = Field(default=1.5, ge=1.0)
    # 0 оставляет внутренний прямоугольник повернутой ленты целиком
    inset: int = Field(default=2, ge=0, description="Pixels trimmed from each rectified side")


class SignConfig(BaseModel):
    """Store sign recognition parameters"""

    model_config = {"frozen": True}

    name_threshold: float = Field(default=0.75, ge=0.0, le=1.0)
    name_window_slack: int = Field(default=2, ge=0)
    terminology_threshold: float = Field(default=0.85, ge=0.0, le=1.0)
    logo_threshold: float = Field(default=0.70, gt=0.0, lt=1.0)
    long_ratio: float = Field(default=3.0, gt=0.0)
    short_ratio: float = Field(default=1.5, gt=0.0)
    logo_width_fraction: float = Field(default=0.6, gt=0.0, le=1.0)
    softmax_temperature: float = Field(default=0.1, gt=0.0)
    default_country_code: str = "33"
    logo_backend: BackendSpec = Field(
        default_factory=lambda: BackendSpec(
            input_size=227, stride=38, class_labels=["logo", "background"]
        )
    )
    logo_pool: int = Field(default=4, ge=1)


class BinarizeParams(BaseModel):
    """Sauvola binarization parameters"""

    model_config = {"frozen": True}

    window: int = Field(default=31, ge=3)
    k: float = Field(default=0.2, gt=0.0, lt=1.0)
    dynamic_range: float = Field(default=128.0, gt=0.0)

    @field_validator('window')
    @classmethod
    def validate_window(cls, v):
        if v % 2 == 0:
            raise ValueError('window must be odd')
        return v


class LayoutConfig(BaseModel):
    """Projection-profile segmentation parameters"""

    model_config = {"frozen": True}

    binarize: BinarizeParams = Field(default_factory=BinarizeParams)
    row_ink_min: int = Field(default=2, ge=1)
    col_ink_min: int = Field(default=1, ge=1)
    band_gap_factor: float = Field(default=0.8, gt=0.0)
    line_gap_factor: float = Field(default=0.3, gt=0.0)
    col_gap_factor: float = Field(default=2.0, gt=0.0)
    col_gap_line_factor: float = Field(default=2.0, ge=0.0)
    prior_tolerance: float = Field(default=0.03, ge=0.0, lt=0.5)


class OcrConfig(BaseModel):
    """OCR backend and repair parameters"""

    model_config = {"frozen": True}

    min_overlap: float = Field(default=0.5, gt=0.0, le=1.0)
    noise_rate: float = Field(default=0.0, ge=0.0, le=0.3)


class SemanticsConfig(BaseModel):
    """Product line parsing and concept matching"""

    model_config = {"frozen": True}

    match_threshold: float = Field(default=0.65, ge=0.0, le=1.0)
    stop_words: List[str] = Field(
        default_factory=lambda: [
            "TOTAL", "SOUS-TOTAL", "TVA", "CB", "ESPECES", "RENDU", "MONTANT",
        ]
    )


class CorpusConfig(BaseModel):
    """Synthetic corpus defaults"""

    model_config = {"frozen": True}

    receipts: int = Field(default=200, ge=0)
    non_receipts: int = Field(default=100, ge=0)
    stores: int = Field(default=10, ge=1)
    canvas_width: int = Field(default=683, ge=227)
    canvas_height: int = Field(default=911, ge=227)
    oracle_stride: int = Field(
        default=57, gt=0, description="Window step of the simulated receipt heat map"
    )
    max_rotation: float = Field(default=8.0, ge=0.0, le=45.0)
    noise_sigma: float = Field(default=4.0, ge=0.0)
    ocr_noise_rate: float = Field(default=0.05, ge=0.0, le=0.3)
    font_scale: int = Field(default=2, ge=1)


class Settings(BaseSettings):
    """Unified settings for ReceiptForge"""

    # Stages
    receipt_backend: BackendSpec = Field(default_factory=BackendSpec)
    heuristic: HeuristicBackendConfig = Field(default_factory=HeuristicBackendConfig)
    detection: DetectionConfig = Field(default_factory=DetectionConfig)
    crop: CropConfig = Field(default_factory=CropConfig)
    sign: SignConfig = Field(default_factory=SignConfig)
    layout: LayoutConfig = Field(default_factory=LayoutConfig)
    ocr: OcrConfig = Field(default_factory=OcrConfig)
    semantics: SemanticsConfig = Field(default_factory=SemanticsConfig)
    corpus: CorpusConfig = Field(default_factory=CorpusConfig)

    # Runtime
    seed: int = 42
    jobs: int = Field(default=1, ge=1)
    debug: bool = False

    # Logging
    log_level: str = "INFO"
    log_format: str = "json"  # json or text
    log_file: Optional[str] = None
    log_retention: int = Field(default=5, ge=0)

    @field_validator('log_level')
    @classmethod
    def validate_log_level(cls, v):
        valid_levels = ['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL']
        if v.upper() not in valid_levels:
            raise ValueError(f'log_level must be one of {valid_levels}')
        return v.upper()

    @field_validator('log_format')
    @classmethod
    def validate_log_format(cls, v):
        valid_formats = ['json', 'text']
        if v.lower() not in valid_formats:
            raise ValueError(f'log_format must be one of {valid_formats}')
        return v.lower()

    model_config = SettingsConfigDict(
        env_prefix="RECEIPTFORGE_",
        env_nested_delimiter="__",
        env_file=".env",
        case_sensitive=False,
        validate_assignment=True,
        extra="ignore",
    )


def _read_config_file(path: Path) -> Dict[str, Any]:
    """Прочитать TOML или JSON файл конфигурации"""
    try:
        if path.suffix.lower() == ".toml":
            with path.open("rb") as fh:
                return tomllib.load(fh)
        with path.open("r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"Config file not found: {path}", config_key=str(path))
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"Config file {path} is not valid: {e}", config_key=str(path))


def _merge(base: Dict[str, Any], updates: Dict[str, Any]) -> Dict[str, Any]:
    """Рекурсивное слияние; None в updates не переопределяет значение"""
    merged = dict(base)
    for key, value in updates.items():
        if value is None:
            continue
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        elif isinstance(value, dict):
            merged[key] = _merge({}, value)
        else:
            merged[key] = value
    return merged


def load_settings(
    path: Optional[Union[str, Path]] = None,
    **overrides: Any,
) -> Settings:
    """
    Собрать Settings из файла (TOML/JSON), окружения и явных переопределений.

    Явные переопределения (флаги CLI) имеют наивысший приоритет; вложенные
    словари сливаются с разделами файла по ключам.
    """
    data: Dict[str, Any] = {}
    if path is not None:
        data = _read_config_file(Path(path))
    data = _merge(data, overrides)
    try:
        return Settings(**data)
    except PydanticValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(part) for part in first.get("loc", ()))
        raise ConfigError(f"Invalid configuration: {first.get('msg')}", config_key=key)


def settings_fingerprint(settings: Settings) -> Dict[str, Any]:
    """Параметры, влияющие на результат (без логирования и параллелизма)"""
    return settings.model_dump(
        exclude={'log_level', 'log_format', 'log_file', 'log_retention', 'jobs', 'debug'}
    )
