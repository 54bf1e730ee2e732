"""
Utilidades transversales: logging estructurado y ejecución por caso.
"""
