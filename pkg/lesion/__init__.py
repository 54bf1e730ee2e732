"""Segmentación de lesiones de ictus a partir de PWI 4D y mapas de perfusión."""
