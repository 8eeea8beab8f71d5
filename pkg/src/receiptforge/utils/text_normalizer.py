"""
Нормализация текста чека и нечеткое сравнение по биграммам
"""
import unicodedata
from collections import Counter
from functools import lru_cache
from typing import List, Sequence

import regex

_NON_ALNUM = regex.compile(r"[^\p{L}\p{N}]+")
_TOKEN_SPLIT = regex.compile(r"[^\p{L}\p{N}]+")


def strip_diacritics(text: str) -> str:
    decomposed = unicodedata.normalize("NFKD", text)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


@lru_cache(maxsize=65536)
def normalize_text(text: str) -> str:
    """Верхний регистр, без диакритики, только буквы и цифры"""
    return _NON_ALNUM.sub("", strip_diacritics(text).upper())


def tokenize(text: str) -> List[str]:
    """Нормализованные токены строки"""
    cleaned = strip_diacritics(text).upper()
    return [token for token in _TOKEN_SPLIT.split(cleaned) if token]


@lru_cache(maxsize=65536)
def bigrams(text: str) -> Counter:
    return Counter(text[i:i + 2] for i in range(len(text) - 1))


def bigram_dice(a: str, b: str) -> float:
    """
    Коэффициент Дайса по мультимножествам символьных биграмм.

    Строки короче 2 символов дают 1.0 при равенстве и 0.0 иначе.
    """
    if len(a) < 2 or len(b) < 2:
        return 1.0 if a == b else 0.0
    grams_a, grams_b = bigrams(a), bigrams(b)
    shared = sum((grams_a & grams_b).values())
    return 2.0 * shared / ((len(a) - 1) + (len(b) - 1))


def shared_bigrams(a: str, b: str) -> int:
    if len(a) < 2 or len(b) < 2:
        return 0
    return sum((bigrams(a) & bigrams(b)).values())


def best_window_dice(line: str, target: str, slack: int = 0, threshold: float = 0.0) -> float:
    """
    Лучший коэффициент Дайса между target и подстроками line длиной len(target) ± slack.

    Строка целиком отбрасывается, если даже идеальное окно не может достичь threshold.
    """
    if not line or not target:
        return 0.0
    n = len(target)
    if len(line) < 2 or n < 2:
        return 1.0 if target in line else 0.0

    min_len = max(2, n - slack)
    # верхняя граница по всей строке
    if threshold > 0.0:
        shortest = min(min_len, len(line))
        bound = 2.0 * shared_bigrams(line, target) / ((shortest - 1) + (n - 1))
        if bound < threshold:
            return 0.0

    best = 0.0
    for length in range(min_len, n + slack + 1):
        if length > len(line):
            break
        for start in range(len(line) - length + 1):
            score = bigram_dice(line[start:start + length], target)
            if score > best:
                best = score
                if best == 1.0:
                    return best
    if best == 0.0 and len(line) < min_len:
        best = bigram_dice(line, target)
    return best


def token_set_similarity(label_tokens: Sequence[str], term_tokens: Sequence[str]) -> float:
    """Среднее по токенам метки лучшего совпадения среди токенов термина"""
    if not label_tokens or not term_tokens:
        return 0.0
    total = 0.0
    for token in label_tokens:
        total += max(bigram_dice(token, other) for other in term_tokens)
    return total / len(label_tokens)
