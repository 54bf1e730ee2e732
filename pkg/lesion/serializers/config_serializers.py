"""
Serializadores de la configuración del pipeline (documento JSON).

Cada sección (phantom, preproc, arch, train) valida tipos, rechaza claves
desconocidas y comprueba los invariantes de su dataclass antes de que
empiece cualquier trabajo.
"""

import json
from collections.abc import Mapping
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Optional

from rest_framework import serializers

from lesion.exceptions import PipelineError, ValidationError
from lesion.models.config import ArchConfig
from lesion.phantom.synth import LesionEllipsoid, PhantomConfig
from lesion.preprocessing.patches import PreprocConfig
from lesion.training.optim import TrainConfig


class StrictSerializer(serializers.Serializer):
    """Serializer que rechaza claves no declaradas en cualquier nivel de anidamiento."""

    def to_internal_value(self, data):
        if isinstance(data, Mapping):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ["Clave desconocida"] for key in unknown})
        return super().to_internal_value(data)


def _triple(child):
    return serializers.ListField(child=child, min_length=3, max_length=3, required=False)


def _pair(child):
    return serializers.ListField(child=child, min_length=2, max_length=2, required=False)


def _to_dataclass(cls, data: Dict[str, Any], **extra):
    values = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
    values.update(extra)
    try:
        return cls(**values).validate()
    except PipelineError as exc:
        raise serializers.ValidationError(exc.details.get('problems', [exc.message]))


class LesionSerializer(StrictSerializer):
    center = serializers.ListField(child=serializers.FloatField(), min_length=3, max_length=3)
    radii = serializers.ListField(child=serializers.FloatField(min_value=0.0), min_length=3, max_length=3)
    attenuation = serializers.FloatField(min_value=0.0, max_value=1.0, required=False, default=0.0)
    delay = serializers.FloatField(min_value=0.0, required=False, default=0.0)


class PhantomSectionSerializer(StrictSerializer):
    dims = serializers.ListField(child=serializers.IntegerField(min_value=1), min_length=4, max_length=4,
                                 required=False)
    dt = serializers.FloatField(required=False)
    t0 = serializers.FloatField(required=False)
    alpha = serializers.FloatField(required=False)
    beta = serializers.FloatField(required=False)
    s0 = serializers.FloatField(required=False)
    kappa = serializers.FloatField(required=False)
    lesions = serializers.ListField(child=LesionSerializer(), required=False)
    penumbra_growth = serializers.FloatField(required=False)
    noise = serializers.FloatField(required=False)
    seed = serializers.IntegerField(min_value=0, required=False)
    spacing = _triple(serializers.FloatField())
    core_threshold = serializers.FloatField(required=False)
    hypoperfusion_threshold = serializers.FloatField(required=False)

    def validate(self, data):
        lesions = tuple(
            LesionEllipsoid(center=tuple(l['center']), radii=tuple(l['radii']),
                            attenuation=l['attenuation'], delay=l['delay'])
            for l in data.pop('lesions', [])
        )
        extra = {'lesions': lesions} if lesions else {}
        return _to_dataclass(PhantomConfig, data, **extra)


class PreprocSectionSerializer(StrictSerializer):
    target_dims = _triple(serializers.IntegerField(min_value=1))
    tmax_clip = _pair(serializers.FloatField())
    adc_clip = _pair(serializers.FloatField())
    scale_range = _pair(serializers.FloatField())
    patch_size = serializers.IntegerField(min_value=1, required=False)
    patches_per_case = serializers.IntegerField(min_value=1, required=False)
    window_length = serializers.IntegerField(min_value=2, required=False)
    lesion_biased = serializers.BooleanField(required=False)
    lesion_fraction = serializers.FloatField(min_value=0.0, max_value=1.0, required=False)

    def validate(self, data):
        return _to_dataclass(PreprocConfig, data)


class ArchSectionSerializer(StrictSerializer):
    unet_levels = serializers.IntegerField(min_value=1, required=False)
    base_filters = serializers.IntegerField(min_value=1, required=False)
    kernel = serializers.IntegerField(min_value=1, required=False)
    gru_hidden = serializers.IntegerField(min_value=1, required=False)
    pwi_channels = serializers.IntegerField(min_value=1, required=False)
    map_channels = serializers.IntegerField(min_value=1, required=False)
    expansion_factor = serializers.IntegerField(min_value=1, required=False)
    merge_filters = serializers.IntegerField(min_value=1, required=False)
    gru_merge = serializers.ChoiceField(choices=['sum', 'concat'], required=False)
    post_fusion_gru = serializers.BooleanField(required=False)

    def validate(self, data):
        return _to_dataclass(ArchConfig, data)


class TrainSectionSerializer(StrictSerializer):
    learning_rate = serializers.FloatField(min_value=0.0, required=False)
    batch_size = serializers.IntegerField(min_value=1, required=False)
    epochs = serializers.IntegerField(min_value=1, required=False)
    beta1 = serializers.FloatField(required=False)
    beta2 = serializers.FloatField(required=False)
    eps = serializers.FloatField(required=False)
    seed = serializers.IntegerField(min_value=0, required=False)
    split = _pair(serializers.IntegerField(min_value=0))

    def validate(self, data):
        return _to_dataclass(TrainConfig, data)


class PipelineConfigSerializer(StrictSerializer):
    seed = serializers.IntegerField(min_value=0, required=False)
    phantom = PhantomSectionSerializer(required=False)
    preproc = PreprocSectionSerializer(required=False)
    arch = ArchSectionSerializer(required=False)
    train = TrainSectionSerializer(required=False)


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    phantom: PhantomConfig = field(default_factory=PhantomConfig)
    preproc: PreprocConfig = field(default_factory=PreprocConfig)
    arch: ArchConfig = field(default_factory=ArchConfig)
    train: TrainConfig = field(default_factory=TrainConfig)


def _with_seed(section, raw: Optional[Mapping], seed: int):
    """Propaga la semilla global a las secciones que no declaran la suya."""
    if any(f.name == 'seed' for f in fields(section)) and not (raw and 'seed' in raw):
        return type(section)(**{**{f.name: getattr(section, f.name) for f in fields(section)}, 'seed': seed})
    return section


def parse_pipeline_config(document: Optional[Mapping] = None, seed: Optional[int] = None) -> PipelineConfig:
    """
    Valida un documento de configuración y devuelve las dataclasses de cada sección.

    ``seed`` (de --seed o PWTK_SEED) sustituye a la semilla global del documento.

    Raises:
        ValidationError: tipos incorrectos, claves desconocidas o invariantes violados
    """
    document = document or {}
    serializer = PipelineConfigSerializer(data=document)
    if not serializer.is_valid():
        raise ValidationError("Configuración inválida", error_code="BAD_CONFIG",
                              details={'errors': json.loads(json.dumps(serializer.errors, default=str))})
    data = serializer.validated_data
    global_seed = int(seed if seed is not None else data.get('seed', 0))
    sections = {
        'phantom': data.get('phantom') or PhantomConfig(),
        'preproc': data.get('preproc') or PreprocConfig(),
        'arch': data.get('arch') or ArchConfig(),
        'train': data.get('train') or TrainConfig(),
    }
    sections = {name: _with_seed(value, document.get(name), global_seed) for name, value in sections.items()}
    return PipelineConfig(seed=global_seed, **sections)


def load_pipeline_config(path=None, seed: Optional[int] = None) -> PipelineConfig:
    if path is None:
        return parse_pipeline_config({}, seed)
    try:
        document = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ValidationError(f"No existe el archivo de configuración {path}", error_code="CONFIG_NOT_FOUND") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"JSON inválido en {path}: {exc}", error_code="CONFIG_NOT_JSON") from exc
    if not isinstance(document, Mapping):
        raise ValidationError("La configuración debe ser un objeto JSON", error_code="CONFIG_NOT_OBJECT")
    return parse_pipeline_config(document, seed)
