"""
Generador pseudoaleatorio determinista con división en sub-flujos.

Algoritmo: PCG64 de numpy. La semilla de un sub-flujo se deriva como los
primeros 8 bytes (little-endian) de BLAKE2b(f"{seed}:{label}"), de modo que
la misma semilla y secuencia de etiquetas reproducen la misma salida en
cualquier plataforma.
"""

import hashlib
from typing import Optional

import numpy as np

SEED_MASK = (1 << 64) - 1


def derive_seed(seed: int, label: str) -> int:
    digest = hashlib.blake2b(f"{int(seed) & SEED_MASK}:{label}".encode('utf-8'), digest_size=8).digest()
    return int.from_bytes(digest, 'little')


class SeededRng:
    """Flujo pseudoaleatorio identificado por una semilla de 64 bits."""

    def __init__(self, seed: int):
        self.seed = int(seed) & SEED_MASK
        self._generator: Optional[np.random.Generator] = None

    @property
    def generator(self) -> np.random.Generator:
        if self._generator is None:
            self._generator = np.random.Generator(np.random.PCG64(self.seed))
        return self._generator

    def split(self, label: str) -> 'SeededRng':
        return SeededRng(derive_seed(self.seed, label))

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def choice(self, n: int, p=None) -> int:
        return int(self.generator.choice(n, p=p))

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def __repr__(self):
        return f"SeededRng(seed={self.seed})"


def rng_split(rng: SeededRng, label: str) -> SeededRng:
    """Deriva un sub-flujo independiente, determinista en (semilla, etiqueta)."""
    return rng.split(label)
