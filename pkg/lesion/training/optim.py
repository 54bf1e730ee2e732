"""Configuración de entrenamiento y optimizador ADAM con corrección de sesgo."""

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from lesion.exceptions import ShapeError, ValidationError

REFERENCE_LEARNING_RATE = 1e-5


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 4
    epochs: int = 50
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    split: Tuple[int, int] = (36, 7)

    @classmethod
    def reference_hparams(cls, **overrides) -> 'TrainConfig':
        values = {'learning_rate': REFERENCE_LEARNING_RATE, 'batch_size': 4}
        values.update(overrides)
        return cls(**values)

    def validate(self) -> 'TrainConfig':
        problems = []
        if self.batch_size < 1:
            problems.append("batch_size debe ser >= 1")
        if self.learning_rate < 0:
            problems.append("learning_rate no puede ser negativo")
        if self.epochs < 1:
            problems.append("epochs debe ser >= 1")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1) or not self.eps > 0:
            problems.append("betas en [0, 1) y eps > 0")
        if len(self.split) != 2 or self.split[0] < 1 or self.split[1] < 0:
            problems.append("split debe ser (entrenamiento >= 1, validación >= 0)")
        if problems:
            raise ValidationError("Configuración de entrenamiento inválida", error_code="BAD_TRAIN",
                                  details={'problems': problems})
        return self


@dataclass
class AdamState:
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def for_params(cls, params) -> 'AdamState':
        return cls(
            m={name: np.zeros_like(value.data) for name, value in params.items()},
            v={name: np.zeros_like(value.data) for name, value in params.items()},
        )

    def copy(self) -> 'AdamState':
        return AdamState(m={k: a.copy() for k, a in self.m.items()},
                         v={k: a.copy() for k, a in self.v.items()}, t=self.t)


def adam_step(params, grads: Dict[str, np.ndarray], state: AdamState, config: TrainConfig) -> AdamState:
    """
    Un paso de ADAM sobre todos los parámetros (actualización en sitio).

    Un gradiente ausente cuenta como cero.
    """
    state.t += 1
    b1, b2 = config.beta1, config.beta2
    correction1 = 1 - b1 ** state.t
    correction2 = 1 - b2 ** state.t
    for name, value in params.items():
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(value.data)
        if grad.shape != value.data.shape or state.m[name].shape != value.data.shape:
            raise ShapeError(f"Gradiente de {name} con forma {grad.shape}, se esperaba {value.data.shape}",
                             error_code="ADAM_SHAPE")
        m = b1 * state.m[name] + (1 - b1) * grad
        v = b2 * state.v[name] + (1 - b2) * grad * grad
        state.m[name], state.v[name] = m, v
        update = config.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + config.eps)
        value.data = (value.data - update).astype(value.data.dtype, copy=False)
    return state
