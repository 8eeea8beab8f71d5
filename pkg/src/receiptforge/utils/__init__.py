"""
Утилиты: нормализация телефонов и текста, грамматики строк чека
"""
