"""
Тесты ReceiptForge
"""





