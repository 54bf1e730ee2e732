"""Entrenamiento con ADAM, partición por caso y checkpoints."""

from .checkpoint import decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from .dataset import PatchSet, load_patch_dir, split_cases
from .optim import AdamState, TrainConfig, adam_step
from .trainer import Checkpoint, evaluate_dice, fit_batch, train

__all__ = [
    'AdamState',
    'Checkpoint',
    'PatchSet',
    'TrainConfig',
    'adam_step',
    'decode_checkpoint',
    'encode_checkpoint',
    'evaluate_dice',
    'fit_batch',
    'load_checkpoint',
    'load_patch_dir',
    'save_checkpoint',
    'split_cases',
    'train',
]
