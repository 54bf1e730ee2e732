"""Almacén ordenado de parámetros entrenables con inicialización determinista."""

from collections import OrderedDict
from typing import Dict, Iterator, Tuple

import numpy as np

from lesion.autodiff.graph import Value
from lesion.exceptions import IncompatibleCheckpointError, ValidationError
from lesion.io.rng import SeededRng, rng_split

INITIALIZERS = ('he_uniform', 'gru_uniform', 'zeros')


class ParamStore:
    """
    Parámetros por nombre en orden de registro.

    Inicialización: uniforme escalada por fan-in (√(6/fan_in)) en
    convoluciones, uniforme ±1/√H en matrices de GRU y ceros en sesgos. Cada
    parámetro usa el sub-flujo de su nombre.
    """

    def __init__(self, rng: SeededRng = None, dtype=np.float32):
        self.rng = rng or SeededRng(0)
        self.dtype = np.dtype(dtype)
        self._values: 'OrderedDict[str, Value]' = OrderedDict()
        self._inits: Dict[str, str] = {}

    def add(self, name: str, shape: Tuple[int, ...], init: str = 'zeros') -> Value:
        if name in self._values:
            raise ValidationError(f"Parámetro duplicado: {name}", error_code="DUPLICATE_PARAM")
        if init not in INITIALIZERS:
            raise ValidationError(f"Inicialización desconocida: {init}", error_code="BAD_INIT")
        stream = rng_split(self.rng, name)
        if init == 'he_uniform':
            fan_in = int(np.prod(shape[1:]))
            bound = np.sqrt(6.0 / fan_in)
            data = stream.uniform(-bound, bound, shape)
        elif init == 'gru_uniform':
            bound = 1.0 / np.sqrt(shape[-1] // 3)
            data = stream.uniform(-bound, bound, shape)
        else:
            data = np.zeros(shape)
        value = Value(np.asarray(data, dtype=self.dtype), requires_grad=True, name=name)
        self._values[name] = value
        self._inits[name] = init
        return value

    def __getitem__(self, name: str) -> Value:
        return self._values[name]

    def __contains__(self, name: str) -> bool:
        return name in self._values

    def __iter__(self) -> Iterator[str]:
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def names(self):
        return list(self._values)

    def items(self):
        return self._values.items()

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {name: tuple(v.shape) for name, v in self._values.items()}

    def numel(self) -> int:
        return int(sum(v.data.size for v in self._values.values()))

    def zero_grad(self):
        for value in self._values.values():
            value.zero_grad()

    def state_dict(self) -> 'OrderedDict[str, np.ndarray]':
        return OrderedDict((name, v.data.copy()) for name, v in self._values.items())

    def load_state(self, state: Dict[str, np.ndarray]):
        """Sustituye los datos validando nombres y dimensiones."""
        expected, received = self.shapes(), {k: tuple(np.shape(v)) for k, v in state.items()}
        if expected != received:
            missing = sorted(set(expected) - set(received))
            extra = sorted(set(received) - set(expected))
            mismatched = sorted(k for k in set(expected) & set(received) if expected[k] != received[k])
            raise IncompatibleCheckpointError(
                "Los parámetros no coinciden con la arquitectura",
                error_code="PARAM_MISMATCH",
                details={'missing': missing, 'unexpected': extra, 'mismatched': mismatched},
            )
        for name, value in self._values.items():
            value.data = np.array(state[name], dtype=self.dtype)
            value.grad = None

    def astype(self, dtype) -> 'ParamStore':
        """Copia con otra precisión (p. ej. doble para verificar gradientes)."""
        clone = ParamStore(self.rng, dtype)
        for name, value in self._values.items():
            clone._values[name] = Value(value.data.astype(dtype), requires_grad=True, name=name)
            clone._inits[name] = self._inits[name]
        return clone
