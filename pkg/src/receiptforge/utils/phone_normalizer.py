"""
Модуль для нормализации телефонных номеров, напечатанных на чеках.

Номер приводится к строке цифр в национальном формате:
"+33 4 50 09 65 43", "0033 450096543" и "04.50.09.65.43" дают "0450096543".
"""
import logging
from typing import List, Optional

import regex

logger = logging.getLogger(__name__)

MIN_DIGITS = 6
MAX_DIGITS = 15

# Разделители, допустимые внутри номера
_SEPARATORS = regex.compile(r"[ .\-/()]")
# Кандидат: цифра, затем цифры и разделители, затем цифра
PHONE_CANDIDATE = regex.compile(r"\+?\d[\d .\-/()]{4,}\d")


def normalize_phone_number(phone: str, country_code: str = "33") -> Optional[str]:
    """
    Нормализация номера телефона в строку цифр

    Args:
        phone (str): Исходный номер в любом формате
        country_code (str): Код страны, заменяемый на ведущий 0

    Returns:
        Optional[str]: Строка из 6-15 цифр или None, если номер не распознан

    Поддерживаемые входные форматы:
    - 04 50 09 65 43
    - 04.50.09.65.43
    - 04-50-09-65-43
    - (04) 50/09/65/43
    - +33 4 50 09 65 43
    - 0033 4 50 09 65 43
    """
    if not phone or not isinstance(phone, str):
        return None

    stripped = _SEPARATORS.sub("", phone.strip())
    international = stripped.startswith("+")
    digits_only = stripped.lstrip("+")

    if not digits_only.isdigit():
        logger.debug(f"Phone candidate contains non-digits: '{phone}'")
        return None

    if digits_only.startswith("00"):
        international = True
        digits_only = digits_only[2:]

    if international:
        if country_code and digits_only.startswith(country_code):
            digits_only = "0" + digits_only[len(country_code):]
        # иностранный номер оставляем с кодом страны

    if not MIN_DIGITS <= len(digits_only) <= MAX_DIGITS:
        logger.debug(f"Phone number length out of range ({len(digits_only)}): '{phone}'")
        return None

    return digits_only


def validate_phone_format(phone: str) -> bool:
    """
    Проверяет, что строка уже нормализована: только цифры, 6-15 штук

    Args:
        phone (str): Номер телефона для проверки

    Returns:
        bool: True если номер в нормализованном виде
    """
    return bool(phone) and phone.isdigit() and MIN_DIGITS <= len(phone) <= MAX_DIGITS


def extract_phone_numbers(text: str, country_code: str = "33") -> List[str]:
    """
    Найти в тексте все номера телефонов и нормализовать их

    Args:
        text (str): Распознанный текст чека

    Returns:
        List[str]: Нормализованные номера в порядке появления, без повторов
    """
    found: List[str] = []
    for line in text.splitlines():
        for match in PHONE_CANDIDATE.finditer(line):
            normalized = normalize_phone_number(match.group(0), country_code)
            if normalized and normalized not in found:
                found.append(normalized)
    return found
