"""
Servicio de entrenamiento: parches preprocesados -> checkpoint + loss.csv.
"""

import csv
from dataclasses import replace
from pathlib import Path
from typing import Optional

from lesion.models import ArchConfig, normalize_kind
from lesion.training import Checkpoint, PatchSet, TrainConfig, load_patch_dir, save_checkpoint, train
from lesion.training.optim import REFERENCE_LEARNING_RATE

from .base_service import BaseService, ServiceException

LOSS_FILE = 'loss.csv'


def write_loss_csv(history, path) -> None:
    with open(path, 'w', newline='') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(('epoch', 'train_loss', 'val_dice'))
        for entry in history:
            val = entry['val_dice']
            writer.writerow((entry['epoch'], f"{entry['train_loss']:.10g}",
                             'NA' if val is None else f"{val:.10g}"))


class TrainingService(BaseService):

    def fit(self, patches: PatchSet, kind: str, arch: Optional[ArchConfig] = None,
            config: Optional[TrainConfig] = None, reference_hparams: bool = False) -> Checkpoint:
        config = config or TrainConfig()
        if reference_hparams:
            config = replace(config, learning_rate=REFERENCE_LEARNING_RATE)
        arch = arch or ArchConfig()
        # el número de adquisiciones de la ventana fija el contrato de la rama PWI
        if patches.pwi.shape[1] != arch.pwi_channels:
            arch = replace(arch, pwi_channels=int(patches.pwi.shape[1]))
        self.log_operation('train_start', {'kind': normalize_kind(kind), 'patches': len(patches),
                                           'learning_rate': config.learning_rate, 'epochs': config.epochs})
        checkpoint = train(patches, kind, arch, config)
        checkpoint.metadata['patch_size'] = int(patches.pwi.shape[-1])
        best = checkpoint.history[checkpoint.metadata['best_epoch']]
        self.log_operation('train_done', {'kind': checkpoint.kind, 'best_epoch': checkpoint.metadata['best_epoch'],
                                          'train_loss': best['train_loss'], 'val_dice': best['val_dice']})
        return checkpoint

    def run(self, data_dir, kind: str, out_path, arch: Optional[ArchConfig] = None,
            config: Optional[TrainConfig] = None, reference_hparams: bool = False) -> Checkpoint:
        """Entrena sobre todos los casos de ``data_dir`` y escribe el checkpoint y ``loss.csv`` junto a él."""
        try:
            checkpoint = self.fit(load_patch_dir(data_dir), kind, arch, config, reference_hparams)
            out_path = Path(out_path)
            out_path.parent.mkdir(parents=True, exist_ok=True)
            save_checkpoint(checkpoint, out_path)
            write_loss_csv(checkpoint.history, out_path.parent / LOSS_FILE)
            self.log_operation('checkpoint_written', {'path': str(out_path)})
            return checkpoint
        except ServiceException as e:
            self.log_error("train", e, {'data_dir': str(data_dir), 'kind': kind})
            raise
