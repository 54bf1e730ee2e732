"""Fantomas de perfusión sintéticos."""

from .gamma import gamma_variate
from .synth import LesionEllipsoid, PhantomCase, PhantomConfig, random_config, synth_case, synth_corpus

__all__ = [
    'LesionEllipsoid',
    'PhantomCase',
    'PhantomConfig',
    'gamma_variate',
    'random_config',
    'synth_case',
    'synth_corpus',
]
