"""
Bloques de red: U-Net 2D, tronco de rama (expansión opcional + U-Net + GRU)
y cabeza 1x1 con sigmoide.

Cada bloque registra sus parámetros en un :class:`ParamStore` compartido con
nombres jerárquicos (``<prefijo>.enc0.conv1.w`` ...).
"""

from lesion.autodiff import ParamStore, Value, concat_channels, conv2d, four_dir_gru, maxpool2, relu, sigmoid, upsample2
from lesion.autodiff.gru import DIRECTIONS
from lesion.exceptions import ShapeError, ValidationError
from lesion.models.config import ArchConfig


class ConvLayer:
    def __init__(self, store: ParamStore, name: str, in_channels: int, out_channels: int, kernel: int):
        self.w = store.add(f"{name}.w", (out_channels, in_channels, kernel, kernel), 'he_uniform')
        self.b = store.add(f"{name}.b", (out_channels,), 'zeros')
        self.pad = kernel // 2

    def __call__(self, x) -> Value:
        return conv2d(x, self.w, self.b, pad=self.pad)


class UNet:
    """
    Codificador de ``unet_levels`` etapas (dos conv+ReLU y maxpool; los
    filtros se duplican por nivel), cuello con los filtros del último nivel
    y decodificador simétrico con conexiones de salto.
    """

    def __init__(self, store: ParamStore, prefix: str, in_channels: int, config: ArchConfig):
        if in_channels < 1:
            raise ValidationError("La U-Net necesita al menos un canal de entrada", error_code="BAD_CHANNELS")
        self.levels = config.unet_levels
        self.in_channels = in_channels
        k = config.kernel
        filters = [config.base_filters * 2 ** level for level in range(self.levels)]
        self.encoder, self.decoder = [], []
        channels = in_channels
        for level, width in enumerate(filters):
            self.encoder.append((ConvLayer(store, f"{prefix}.enc{level}.conv1", channels, width, k),
                                 ConvLayer(store, f"{prefix}.enc{level}.conv2", width, width, k)))
            channels = width
        self.bottleneck = (ConvLayer(store, f"{prefix}.mid.conv1", channels, channels, k),
                           ConvLayer(store, f"{prefix}.mid.conv2", channels, channels, k))
        for level in reversed(range(self.levels)):
            width = filters[level]
            self.decoder.append((ConvLayer(store, f"{prefix}.dec{level}.conv1", channels + width, width, k),
                                 ConvLayer(store, f"{prefix}.dec{level}.conv2", width, width, k)))
            channels = width
        self.out_channels = channels
        self.bottleneck_channels = filters[-1]

    def check_input(self, x):
        factor = 2 ** self.levels
        height, width = x.shape[2], x.shape[3]
        if height % factor or width % factor:
            raise ShapeError(f"Parche {height}x{width} no divisible por 2^{self.levels}",
                             error_code="UNET_DIVISIBILITY")

    def encode(self, x):
        self.check_input(x)
        skips = []
        for conv1, conv2 in self.encoder:
            x = relu(conv2(relu(conv1(x))))
            skips.append(x)
            x = maxpool2(x)
        conv1, conv2 = self.bottleneck
        return relu(conv2(relu(conv1(x)))), skips

    def __call__(self, x) -> Value:
        x, skips = self.encode(x)
        for (conv1, conv2), skip in zip(self.decoder, reversed(skips)):
            x = concat_channels([upsample2(x), skip])
            x = relu(conv2(relu(conv1(x))))
        return x


class DirectionalGRU:
    def __init__(self, store: ParamStore, prefix: str, in_channels: int, config: ArchConfig):
        hidden = config.gru_hidden
        self.merge = config.gru_merge
        self.params = {
            direction: (
                store.add(f"{prefix}.{direction}.W", (in_channels, 3 * hidden), 'gru_uniform'),
                store.add(f"{prefix}.{direction}.U", (hidden, 3 * hidden), 'gru_uniform'),
                store.add(f"{prefix}.{direction}.b", (3 * hidden,), 'zeros'),
            )
            for direction in DIRECTIONS
        }
        self.out_channels = config.gru_out_channels

    def __call__(self, x) -> Value:
        return four_dir_gru(x, self.params, merge=self.merge)


class Trunk:
    """Rama completa hasta las características post-GRU."""

    def __init__(self, store: ParamStore, prefix: str, in_channels: int, config: ArchConfig,
                 expansion: bool = False):
        self.in_channels = in_channels
        self.expand = self.reduce = None
        if expansion:
            wide = in_channels * config.expansion_factor
            self.expand = ConvLayer(store, f"{prefix}.expand", in_channels, wide, 1)
            self.reduce = ConvLayer(store, f"{prefix}.reduce", wide, in_channels, 1)
        self.unet = UNet(store, f"{prefix}.unet", in_channels, config)
        self.gru = DirectionalGRU(store, f"{prefix}.gru", self.unet.out_channels, config)
        self.out_channels = self.gru.out_channels

    def __call__(self, x) -> Value:
        if self.expand is not None:
            x = relu(self.reduce(relu(self.expand(x))))
        return self.gru(self.unet(x))


class Head:
    def __init__(self, store: ParamStore, prefix: str, in_channels: int):
        self.conv = ConvLayer(store, f"{prefix}.conv", in_channels, 1, 1)

    def __call__(self, x) -> Value:
        return sigmoid(self.conv(x))


def build_unet(in_channels: int, config: ArchConfig, store: ParamStore = None, prefix: str = 'unet') -> UNet:
    return UNet(store if store is not None else ParamStore(), prefix, in_channels, config.validate())
