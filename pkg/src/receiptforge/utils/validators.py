"""
Грамматики строк чека: товарная строка и формат цены
"""
from typing import Dict

import regex

from ..core.exceptions import ConfigError

CURRENCY_SYMBOLS = r"(?:€|\$|£|EUR)"
LABEL_CHAR = r"[\p{L}\d .,'\-/%*]"

# Цена: цифры, необязательная запятая/точка и 1-2 цифры, символ валюты слева или справа
PRICE = (
    rf"(?P<pre>{CURRENCY_SYMBOLS})?"
    r"(?P<amount>\d+(?:[.,]\d{1,2})?)"
    rf"(?:[ ]?(?P<post>{CURRENCY_SYMBOLS}))?"
)

# Метка 2-40 символов, не меньше двух букв; разрыв из 2+ пробелов или табуляций
PRODUCT_LINE_V1 = (
    rf"^(?P<label>{LABEL_CHAR}*?\p{{L}}{LABEL_CHAR}*?\p{{L}}{LABEL_CHAR}*?)(?<=^.{{2,40}})"
    r"(?P<gap>[ ]{2,}|\t+)"
    rf"{PRICE}$"
)

GRAMMARS: Dict[str, str] = {
    "product-line-v1": PRODUCT_LINE_V1,
}

PRICE_TOKEN = regex.compile(rf"^{PRICE}$", regex.IGNORECASE)

_compiled: Dict[str, "regex.Pattern[str]"] = {}


def get_product_line_pattern(version: str = "product-line-v1") -> "regex.Pattern[str]":
    """Скомпилированная грамматика товарной строки по имени версии"""
    if version not in GRAMMARS:
        raise ConfigError(
            f"Unknown product-line grammar '{version}', expected one of {sorted(GRAMMARS)}",
            config_key="detection.grammar_version",
        )
    if version not in _compiled:
        _compiled[version] = regex.compile(GRAMMARS[version], regex.IGNORECASE)
    return _compiled[version]


def is_price_token(token: str) -> bool:
    """Проверка, что строка целиком является ценой"""
    return bool(PRICE_TOKEN.match(token))
