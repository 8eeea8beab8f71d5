"""
Основные абстракции: настройки, логирование, исключения, интерфейсы
"""
