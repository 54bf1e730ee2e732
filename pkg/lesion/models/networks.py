"""
Las cuatro redes comparadas: rama estándar (mapas), rama guiada por datos
(PWI cruda con expansión/reducción x4), rama única (ambas entradas
concatenadas) y red ramificada (dos troncos fusionados).
"""

from typing import Dict, List, Tuple, Union

import numpy as np

from lesion.autodiff import ParamStore, Value, concat_channels, relu
from lesion.exceptions import ShapeError, ValidationError
from lesion.io.rng import SeededRng
from lesion.models.config import ArchConfig, normalize_kind
from lesion.models.unet import ConvLayer, DirectionalGRU, Head, Trunk, UNet

Inputs = Union[np.ndarray, Value, Tuple]


class ModelSpec:
    """
    Red construida: tipo, configuración, parámetros y bloques.

    Contrato de entrada por tipo: standard 6 canales, data_driven 26,
    single 32 y branched el par (26, 6).
    """

    def __init__(self, kind: str, config: ArchConfig, seed: int = 0, dtype=np.float32):
        self.kind = normalize_kind(kind)
        self.config = config.validate()
        self.seed = int(seed)
        self.params = ParamStore(SeededRng(seed).split(f"init_{self.kind}"), dtype)
        store, cfg = self.params, self.config
        self.trunks: Dict[str, Trunk] = {}
        if self.kind == 'standard':
            self.trunks['standard'] = Trunk(store, 'std', cfg.map_channels, cfg)
        elif self.kind == 'data_driven':
            self.trunks['data_driven'] = Trunk(store, 'dd', cfg.pwi_channels, cfg, expansion=True)
        elif self.kind == 'single':
            self.trunks['single'] = Trunk(store, 'single', cfg.pwi_channels + cfg.map_channels, cfg)
        else:
            self.trunks['data_driven'] = Trunk(store, 'dd', cfg.pwi_channels, cfg, expansion=True)
            self.trunks['standard'] = Trunk(store, 'std', cfg.map_channels, cfg)
        head_in = self.trunks[next(iter(self.trunks))].out_channels
        self.merge: List[ConvLayer] = []
        self.fusion_gru = None
        if self.kind == 'branched':
            fused = sum(trunk.out_channels for trunk in self.trunks.values())
            self.merge = [
                ConvLayer(store, 'merge.conv1', fused, cfg.merge_filters, cfg.kernel),
                ConvLayer(store, 'merge.conv2', cfg.merge_filters, cfg.merge_filters, cfg.kernel),
            ]
            head_in = cfg.merge_filters
            if cfg.post_fusion_gru:
                self.fusion_gru = DirectionalGRU(store, 'merge.gru', cfg.merge_filters, cfg)
                head_in = self.fusion_gru.out_channels
        self.head = Head(store, 'head', head_in)

    @property
    def input_contract(self):
        cfg = self.config
        return {
            'standard': cfg.map_channels,
            'data_driven': cfg.pwi_channels,
            'single': cfg.pwi_channels + cfg.map_channels,
            'branched': (cfg.pwi_channels, cfg.map_channels),
        }[self.kind]

    def _check(self, x, channels: int, what: str):
        if len(x.shape) != 4 or x.shape[1] != channels:
            raise ShapeError(f"Entrada {what} debe ser [B,{channels},H,W], recibida {tuple(x.shape)}",
                             error_code="INPUT_CONTRACT", details={'kind': self.kind})

    def split_inputs(self, inputs: Inputs) -> Dict[str, Value]:
        """Valida el contrato y asigna cada entrada a su tronco."""
        contract = self.input_contract
        if self.kind == 'branched':
            if not isinstance(inputs, (tuple, list)) or len(inputs) != 2:
                raise ShapeError("La red ramificada espera el par (pwi, mapas)", error_code="INPUT_CONTRACT")
            pwi, maps = inputs
            self._check(pwi, contract[0], 'pwi')
            self._check(maps, contract[1], 'mapas')
            if tuple(pwi.shape[2:]) != tuple(maps.shape[2:]) or pwi.shape[0] != maps.shape[0]:
                raise ShapeError("PWI y mapas deben compartir B, H y W", error_code="INPUT_CONTRACT")
            return {'data_driven': pwi, 'standard': maps}
        if isinstance(inputs, (tuple, list)):
            raise ShapeError(f"El modelo {self.kind} espera una única entrada", error_code="INPUT_CONTRACT")
        self._check(inputs, contract, self.kind)
        return {self.kind: inputs}

    def features(self, inputs: Inputs) -> Dict[str, Value]:
        routed = self.split_inputs(inputs)
        return {name: trunk(routed[name]) for name, trunk in self.trunks.items()}

    def forward(self, inputs: Inputs) -> Value:
        """Mapa de probabilidades [B, 1, H, W]."""
        feats = self.features(inputs)
        if self.kind != 'branched':
            return self.head(feats[self.kind])
        x = concat_channels([feats['standard'], feats['data_driven']])
        for conv in self.merge:
            x = relu(conv(x))
        if self.fusion_gru is not None:
            x = self.fusion_gru(x)
        return self.head(x)

    __call__ = forward

    def parameter_count(self) -> int:
        return self.params.numel()

    def astype(self, dtype) -> 'ModelSpec':
        """Copia con parámetros en otra precisión (modo verificación en doble)."""
        clone = ModelSpec(self.kind, self.config, self.seed, dtype)
        clone.params.load_state({name: value.data for name, value in self.params.items()})
        return clone


def build_standard_branch(config: ArchConfig = None, seed: int = 0) -> ModelSpec:
    return ModelSpec('standard', config or ArchConfig(), seed)


def build_data_driven_branch(config: ArchConfig = None, seed: int = 0) -> ModelSpec:
    return ModelSpec('data_driven', config or ArchConfig(), seed)


def build_single_branch(config: ArchConfig = None, seed: int = 0) -> ModelSpec:
    return ModelSpec('single', config or ArchConfig(), seed)


def build_branched(config: ArchConfig = None, seed: int = 0) -> ModelSpec:
    return ModelSpec('branched', config or ArchConfig(), seed)


BUILDERS = {
    'standard': build_standard_branch,
    'data_driven': build_data_driven_branch,
    'single': build_single_branch,
    'branched': build_branched,
}


def build_model(kind: str, config: ArchConfig = None, seed: int = 0) -> ModelSpec:
    return BUILDERS[normalize_kind(kind)](config, seed)


def forward(spec: ModelSpec, inputs: Inputs) -> Value:
    return spec.forward(inputs)


def extract_features(spec: ModelSpec, inputs: Inputs, layer_tag: str = 'data_driven') -> List[Tuple[str, np.ndarray]]:
    """
    Mapas de características post-GRU del tronco ``layer_tag`` para la
    primera muestra del lote, nombrados ``feature_k``.
    """
    tag = layer_tag.replace('-', '_')
    if tag not in spec.trunks:
        raise ValidationError(f"El modelo {spec.kind} no tiene la rama {layer_tag}", error_code="BAD_LAYER_TAG",
                              details={'available': list(spec.trunks)})
    maps = spec.features(inputs)[tag].data[0]
    return [(f"feature_{k}", maps[k]) for k in range(maps.shape[0])]


def _conv_params(c_in: int, c_out: int, k: int) -> int:
    return c_out * c_in * k * k + c_out


def _unet_params(c_in: int, cfg: ArchConfig) -> int:
    k = cfg.kernel
    filters = [cfg.base_filters * 2 ** level for level in range(cfg.unet_levels)]
    total, channels = 0, c_in
    for width in filters:
        total += _conv_params(channels, width, k) + _conv_params(width, width, k)
        channels = width
    total += 2 * _conv_params(channels, channels, k)
    for width in reversed(filters):
        total += _conv_params(channels + width, width, k) + _conv_params(width, width, k)
        channels = width
    return total


def _gru_params(c_in: int, cfg: ArchConfig) -> int:
    hidden = cfg.gru_hidden
    return 4 * (c_in * 3 * hidden + hidden * 3 * hidden + 3 * hidden)


def _trunk_params(c_in: int, cfg: ArchConfig, expansion: bool) -> int:
    total = 0
    if expansion:
        wide = c_in * cfg.expansion_factor
        total += _conv_params(c_in, wide, 1) + _conv_params(wide, c_in, 1)
    return total + _unet_params(c_in, cfg) + _gru_params(cfg.base_filters, cfg)


def expected_parameter_count(kind: str, config: ArchConfig = None) -> int:
    """Recuento cerrado capa a capa, independiente del ParamStore."""
    cfg = config or ArchConfig()
    kind = normalize_kind(kind)
    feat = cfg.gru_out_channels
    if kind == 'standard':
        return _trunk_params(cfg.map_channels, cfg, False) + _conv_params(feat, 1, 1)
    if kind == 'data_driven':
        return _trunk_params(cfg.pwi_channels, cfg, True) + _conv_params(feat, 1, 1)
    if kind == 'single':
        return _trunk_params(cfg.pwi_channels + cfg.map_channels, cfg, False) + _conv_params(feat, 1, 1)
    merge = _conv_params(2 * feat, cfg.merge_filters, cfg.kernel) + _conv_params(cfg.merge_filters, cfg.merge_filters, cfg.kernel)
    head_in = cfg.merge_filters
    if cfg.post_fusion_gru:
        merge += _gru_params(cfg.merge_filters, cfg)
        head_in = feat
    return (_trunk_params(cfg.pwi_channels, cfg, True) + _trunk_params(cfg.map_channels, cfg, False)
            + merge + _conv_params(head_in, 1, 1))


def trunk_parameter_counts(config: ArchConfig = None) -> Dict[str, int]:
    cfg = config or ArchConfig()
    return {
        'standard': _trunk_params(cfg.map_channels, cfg, False),
        'data_driven': _trunk_params(cfg.pwi_channels, cfg, True),
    }


__all__ = [
    'ModelSpec',
    'UNet',
    'build_branched',
    'build_data_driven_branch',
    'build_model',
    'build_single_branch',
    'build_standard_branch',
    'expected_parameter_count',
    'extract_features',
    'forward',
    'trunk_parameter_counts',
]
