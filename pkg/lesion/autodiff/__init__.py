"""Diferenciación automática en modo inverso sobre numpy."""

from .gradcheck import grad_check
from .graph import Function, Value
from .gru import DIRECTIONS, GRU_MERGES, four_dir_gru, gru2d
from .loss import DICE_EPS, printed_dice_gradient, soft_dice, soft_dice_gradient
from .ops import add, concat_channels, conv2d, maxpool2, relu, sigmoid, upsample2
from .params import ParamStore

__all__ = [
    'DICE_EPS',
    'DIRECTIONS',
    'GRU_MERGES',
    'Function',
    'ParamStore',
    'Value',
    'add',
    'concat_channels',
    'conv2d',
    'printed_dice_gradient',
    'four_dir_gru',
    'grad_check',
    'gru2d',
    'maxpool2',
    'relu',
    'sigmoid',
    'soft_dice',
    'soft_dice_gradient',
    'upsample2',
]
