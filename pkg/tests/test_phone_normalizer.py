"""
Тесты для модуля нормализации телефонов
"""

import unittest
from receiptforge.utils.phone_normalizer import (
    extract_phone_numbers,
    normalize_phone_number,
    validate_phone_format,
)


class TestPhoneNormalizer(unittest.TestCase):
    """Тесты для функций нормализации телефонов"""

    def test_normalize_national_formats(self):
        """Тест нормализации национальных форматов"""
        test_cases = [
            ("0450096543", "0450096543"),
            ("04 50 09 65 43", "0450096543"),
            ("04.50.09.65.43", "0450096543"),
            ("04-50-09-65-43", "0450096543"),
            ("(04) 50/09/65/43", "0450096543"),
        ]

        for input_phone, expected in test_cases:
            with self.subTest(phone=input_phone):
                self.assertEqual(normalize_phone_number(input_phone), expected)

    def test_normalize_international_formats(self):
        """Тест замены кода страны на ведущий 0"""
        test_cases = [
            ("+33 4 50 09 65 43", "0450096543"),
            ("+33450096543", "0450096543"),
            ("0033 4 50 09 65 43", "0450096543"),
        ]

        for input_phone, expected in test_cases:
            with self.subTest(phone=input_phone):
                self.assertEqual(normalize_phone_number(input_phone), expected)

    def test_foreign_number_keeps_country_code(self):
        """Тест иностранного номера"""
        self.assertEqual(normalize_phone_number("+44 20 7946 0958"), "442079460958")
        self.assertEqual(normalize_phone_number("+44 20 7946 0958", country_code="44"), "02079460958")

    def test_invalid_numbers(self):
        """Тест нераспознаваемых номеров"""
        invalid_phones = [
            "",
            None,
            "abc",
            "04 50 AB 65 43",
            "12345",
            "1234567890123456",
        ]

        for phone in invalid_phones:
            with self.subTest(phone=phone):
                self.assertIsNone(normalize_phone_number(phone))

    def test_validate_phone_format(self):
        """Тест проверки нормализованного вида"""
        valid_phones = ["0450096543", "123456", "442079460958"]
        invalid_phones = ["", "04 50 09 65 43", "12345", "+33450096543"]

        for phone in valid_phones:
            with self.subTest(phone=phone):
                self.assertTrue(validate_phone_format(phone))

        for phone in invalid_phones:
            with self.subTest(phone=phone):
                self.assertFalse(validate_phone_format(phone))

    def test_extract_from_receipt_text(self):
        """Тест поиска номеров в тексте чека"""
        text = "PRIMEUR PLUS\nTEL 04.50.09.65.43\nTel: 04 50 09 65 43\nFAX 01 02 03 04 05\nBANANE   2,10"
        self.assertEqual(extract_phone_numbers(text), ["0450096543", "0102030405"])

    def test_extract_nothing(self):
        """Тест текста без номеров"""
        self.assertEqual(extract_phone_numbers("MERCI DE VOTRE VISITE\nTOTAL   12,40"), [])


if __name__ == '__main__':
    unittest.main()
