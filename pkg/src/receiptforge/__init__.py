"""
ReceiptForge - разбор фотографий кассовых чеков
"""
__version__ = "1.0.0"
__author__ = "ReceiptForge Team"
