"""
Встроенные справочники: магазины, онтология, сокращения
"""
