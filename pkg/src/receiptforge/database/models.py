"""
Записи справочников: магазины и онтология товаров
"""
from typing import List, Literal

from pydantic import BaseModel, Field, field_validator

from ..utils.phone_normalizer import validate_phone_format


class StoreRecord(BaseModel):
    """Модель магазина"""

    model_config = {"frozen": True}

    store_id: str = Field(min_length=1)
    display_name: str = Field(min_length=1)
    name_variants: List[str] = Field(min_length=1)
    phones: List[str] = Field(default_factory=list)
    terminology: List[str] = Field(default_factory=list)
    logo_aspect: Literal["long", "short"] = "long"
    layout_priors: List[float] = Field(default_factory=list)

    @field_validator('name_variants')
    @classmethod
    def validate_name_variants(cls, v):
        cleaned = [variant.strip() for variant in v if variant and variant.strip()]
        if not cleaned:
            raise ValueError('name_variants must contain at least one non-empty name')
        return cleaned

    @field_validator('phones')
    @classmethod
    def validate_phones(cls, v):
        for phone in v:
            if not validate_phone_format(phone):
                raise ValueError(f'phone {phone!r} must be 6-15 digits')
        return v

    @field_validator('layout_priors')
    @classmethod
    def validate_layout_priors(cls, v):
        for fraction in v:
            if not 0.0 < fraction < 1.0:
                raise ValueError('layout_priors are column fractions in (0, 1)')
        return sorted(v)


class Category(BaseModel):
    """Категория товаров"""

    model_config = {"frozen": True}

    id: str = Field(min_length=1)
    label: str = ""


class Concept(BaseModel):
    """Понятие онтологии с обозначающими его терминами"""

    model_config = {"frozen": True}

    id: str = Field(min_length=1)
    category: str = Field(min_length=1)
    label: str = Field(min_length=1)
    terms: List[str] = Field(min_length=1)

    @field_validator('terms')
    @classmethod
    def validate_terms(cls, v):
        cleaned = [term.strip() for term in v if term and term.strip()]
        if not cleaned:
            raise ValueError('terms must contain at least one non-empty term')
        return cleaned

    @property
    def concept_id(self) -> str:
        return self.id

    @property
    def category_id(self) -> str:
        return self.category
