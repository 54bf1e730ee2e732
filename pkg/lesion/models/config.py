"""Configuración de arquitectura y tipos de modelo."""

from dataclasses import dataclass

from lesion.autodiff.gru import GRU_MERGES
from lesion.exceptions import ValidationError

MODEL_KINDS = ('standard', 'data_driven', 'single', 'branched')


def normalize_kind(kind: str) -> str:
    key = kind.replace('-', '_')
    if key not in MODEL_KINDS:
        raise ValidationError(f"Tipo de modelo desconocido: {kind}", error_code="BAD_MODEL_KIND",
                              details={'valid': list(MODEL_KINDS)})
    return key


@dataclass(frozen=True)
class ArchConfig:
    unet_levels: int = 3
    base_filters: int = 8
    kernel: int = 3
    gru_hidden: int = 16
    pwi_channels: int = 26
    map_channels: int = 6
    expansion_factor: int = 4
    merge_filters: int = 16
    gru_merge: str = 'sum'
    post_fusion_gru: bool = False

    @property
    def gru_out_channels(self) -> int:
        return self.gru_hidden * (4 if self.gru_merge == 'concat' else 1)

    @property
    def expanded_channels(self) -> int:
        return self.pwi_channels * self.expansion_factor

    def validate(self) -> 'ArchConfig':
        problems = []
        for name in ('unet_levels', 'base_filters', 'gru_hidden', 'pwi_channels', 'map_channels',
                     'expansion_factor', 'merge_filters'):
            if getattr(self, name) < 1:
                problems.append(f"{name} debe ser >= 1")
        if self.kernel < 1 or self.kernel % 2 == 0:
            problems.append("kernel debe ser impar")
        if self.gru_merge not in GRU_MERGES:
            problems.append(f"gru_merge debe ser uno de {GRU_MERGES}")
        if problems:
            raise ValidationError("Configuración de arquitectura inválida", error_code="BAD_ARCH",
                                  details={'problems': problems})
        return self
