"""
Bucle de entrenamiento con pérdida soft-dice y retención del mejor modelo
en validación.
"""

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from lesion.autodiff import soft_dice
from lesion.exceptions import DataError, NumericalError
from lesion.io.rng import SeededRng, rng_split
from lesion.models import ArchConfig, ModelSpec, build_model, normalize_kind
from lesion.training.dataset import PatchSet, split_cases
from lesion.training.optim import AdamState, TrainConfig, adam_step
from lesion.utils.logging_utils import get_logger

logger = get_logger(__name__)


@dataclass
class Checkpoint:
    kind: str
    arch: ArchConfig
    params: 'OrderedDict[str, np.ndarray]'
    adam: AdamState
    metadata: Dict[str, Any] = field(default_factory=dict)

    def build(self) -> ModelSpec:
        """Instancia el modelo y carga los parámetros guardados."""
        spec = build_model(self.kind, self.arch, int(self.metadata.get('seed', 0)))
        spec.params.load_state(self.params)
        return spec

    @property
    def history(self) -> List[Dict[str, float]]:
        return self.metadata.get('history', [])


def _grads(spec: ModelSpec) -> Dict[str, np.ndarray]:
    return {name: value.grad for name, value in spec.params.items() if value.grad is not None}


def _step(spec: ModelSpec, inputs, gt: np.ndarray, state: AdamState, config: TrainConfig) -> float:
    spec.params.zero_grad()
    _, loss = soft_dice(spec.forward(inputs), gt)
    value = float(loss.data)
    if not np.isfinite(value):
        raise NumericalError("Pérdida no finita durante el entrenamiento", error_code="NAN_LOSS",
                             details={'step': state.t})
    loss.backward()
    adam_step(spec.params, _grads(spec), state, config)
    return value


def evaluate_dice(spec: ModelSpec, patches: PatchSet, batch_size: int) -> float:
    """Soft-dice medio por parche, sin actualizar parámetros."""
    if len(patches) == 0:
        return float('nan')
    scores = []
    for start in range(0, len(patches), batch_size):
        idx = np.arange(start, min(start + batch_size, len(patches)))
        prob = spec.forward(patches.inputs(spec.kind, idx)).data
        dice, _ = soft_dice(prob, patches.gt[idx])
        scores.append(dice * len(idx))
    return float(np.sum(scores) / len(patches))


def fit_batch(spec: ModelSpec, inputs, gt: np.ndarray, steps: int, config: TrainConfig) -> List[float]:
    """Repite pasos de ADAM sobre un lote fijo; devuelve la pérdida de cada paso."""
    state = AdamState.for_params(spec.params)
    return [_step(spec, inputs, gt, state, config) for _ in range(steps)]


def train(patches: PatchSet, model_kind: str, arch: Optional[ArchConfig] = None,
          config: Optional[TrainConfig] = None) -> Checkpoint:
    """
    Entrena un modelo sobre parches con partición por caso.

    Cada época baraja los parches de entrenamiento con el sub-flujo
    ``epoch_{e}`` y procesa lotes de ``batch_size``. Se conserva el estado
    con mejor soft-dice de validación (o menor pérdida si no hay validación).
    """
    kind = normalize_kind(model_kind)
    arch = (arch or ArchConfig()).validate()
    config = (config or TrainConfig()).validate()
    if len(patches) == 0:
        raise DataError("Corpus de parches vacío", error_code="EMPTY_CORPUS")

    root = SeededRng(config.seed)
    train_cases, val_cases = split_cases(patches.case_ids, config.split, rng_split(root, 'split'))
    train_set, val_set = patches.for_cases(train_cases), patches.for_cases(val_cases)
    spec = build_model(kind, arch, config.seed)
    state = AdamState.for_params(spec.params)
    logger.info("Inicio de entrenamiento", extra={'step': 'train', 'details': {
        'kind': kind, 'train_cases': len(train_cases), 'val_cases': len(val_cases),
        'train_patches': len(train_set), 'epochs': config.epochs}})

    history, best_score, best_epoch = [], -np.inf, 0
    best_state, best_adam = spec.params.state_dict(), state.copy()
    for epoch in range(config.epochs):
        order = rng_split(root, f"epoch_{epoch}").permutation(len(train_set))
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            total += _step(spec, train_set.inputs(kind, idx), train_set.gt[idx], state, config) * len(idx)
        train_loss = total / len(train_set)
        val_dice = evaluate_dice(spec, val_set, config.batch_size) if len(val_set) else None
        score = val_dice if len(val_set) else -train_loss
        history.append({'epoch': epoch, 'train_loss': train_loss, 'val_dice': val_dice})
        logger.info("Época completada", extra={'step': 'train_epoch', 'details': history[-1]})
        if score > best_score:
            best_score, best_epoch = score, epoch
            best_state, best_adam = spec.params.state_dict(), state.copy()

    metadata = {
        'seed': config.seed,
        'best_epoch': best_epoch,
        'history': history,
        'train_cases': train_cases,
        'val_cases': val_cases,
        'learning_rate': config.learning_rate,
        'batch_size': config.batch_size,
    }
    return Checkpoint(kind=kind, arch=arch, params=best_state, adam=best_adam, metadata=metadata)
