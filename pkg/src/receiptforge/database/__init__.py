"""
Справочники: база магазинов и онтология товаров
"""
from .models import Category, Concept, StoreRecord
from .ontology_repository import Ontology, load_abbreviations, parse_abbreviations
from .store_repository import StoreDatabase

__all__ = [
    "Category",
    "Concept",
    "Ontology",
    "StoreDatabase",
    "StoreRecord",
    "load_abbreviations",
    "parse_abbreviations",
]
