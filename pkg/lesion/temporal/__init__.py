"""Detección del pico de contraste y ventana temporal fija."""

from .window import (
    WINDOW_LENGTH,
    SliceStats,
    TemporalWindow,
    detect_peak,
    extract_window,
    kmeans,
    slice_stats,
)

__all__ = [
    'WINDOW_LENGTH',
    'SliceStats',
    'TemporalWindow',
    'detect_peak',
    'extract_window',
    'kmeans',
    'slice_stats',
]
