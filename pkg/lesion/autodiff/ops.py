"""Núcleos diferenciables para redes convolucionales 2D (layout B, C, H, W)."""

from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from lesion.autodiff.graph import Function, Value
from lesion.exceptions import ShapeError


class Conv2D(Function):
    """Correlación cruzada con relleno de ceros y paso configurable."""

    def forward(self, x, w, b, stride=1, pad=0):
        if x.ndim != 4 or w.ndim != 4:
            raise ShapeError("conv2d espera x [B,C,H,W] y w [F,C,k,k]", error_code="CONV_RANK")
        n_filters, channels, kh, kw = w.shape
        if channels != x.shape[1]:
            raise ShapeError(f"Canales incompatibles: x tiene {x.shape[1]}, w espera {channels}",
                             error_code="CONV_CHANNELS")
        if kh != kw or kh % 2 == 0:
            raise ShapeError(f"El kernel debe ser cuadrado e impar: {kh}x{kw}", error_code="CONV_KERNEL")
        if b.shape != (n_filters,):
            raise ShapeError("El sesgo debe tener un valor por filtro", error_code="CONV_BIAS")
        if stride < 1 or pad < 0:
            raise ShapeError("stride >= 1 y pad >= 0", error_code="CONV_ARGS")
        h, wd = x.shape[2] + 2 * pad, x.shape[3] + 2 * pad
        if h < kh or wd < kw:
            raise ShapeError("Entrada menor que el kernel", error_code="CONV_SMALL")

        xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
        windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
        self.saved = (x.shape, xp.shape, windows, w, stride, pad)
        out = np.tensordot(windows, w, axes=([1, 4, 5], [1, 2, 3]))
        return (out.transpose(0, 3, 1, 2) + b[None, :, None, None]).astype(x.dtype, copy=False)

    def backward(self, grad):
        x_shape, xp_shape, windows, w, stride, pad = self.saved
        k = w.shape[2]
        out_h, out_w = grad.shape[2], grad.shape[3]
        grad_w = np.tensordot(grad, windows, axes=([0, 2, 3], [0, 2, 3]))
        grad_b = grad.sum(axis=(0, 2, 3))
        grad_xp = np.zeros(xp_shape, dtype=grad.dtype)
        for i in range(k):
            for j in range(k):
                contrib = np.einsum('bfhw,fc->bchw', grad, w[:, :, i, j])
                grad_xp[:, :, i:i + stride * out_h:stride, j:j + stride * out_w:stride] += contrib
        grad_x = grad_xp[:, :, pad:pad + x_shape[2], pad:pad + x_shape[3]] if pad else grad_xp
        return grad_x, grad_w, grad_b


class ReLU(Function):
    def forward(self, x):
        self.mask = x > 0
        return np.where(self.mask, x, 0).astype(x.dtype, copy=False)

    def backward(self, grad):
        return (grad * self.mask,)


class Sigmoid(Function):
    def forward(self, x):
        self.out = expit(x)
        return self.out

    def backward(self, grad):
        return (grad * self.out * (1 - self.out),)


class MaxPool2(Function):
    """Máximo 2x2 con paso 2; el gradiente vuelve solo a la posición del máximo."""

    def forward(self, x):
        b, c, h, w = x.shape
        if h % 2 or w % 2:
            raise ShapeError(f"maxpool2 requiere H y W pares: {h}x{w}", error_code="POOL_ODD")
        blocks = x.reshape(b, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, h // 2, w // 2, 4)
        self.argmax = blocks.argmax(axis=-1)
        self.shape = x.shape
        return np.take_along_axis(blocks, self.argmax[..., None], axis=-1)[..., 0]

    def backward(self, grad):
        b, c, h, w = self.shape
        routed = np.zeros((b, c, h // 2, w // 2, 4), dtype=grad.dtype)
        np.put_along_axis(routed, self.argmax[..., None], grad[..., None], axis=-1)
        routed = routed.reshape(b, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
        return (routed.reshape(b, c, h, w),)


class Upsample2(Function):
    """Vecino más próximo x2; el gradiente suma cada bloque 2x2."""

    def forward(self, x):
        return x.repeat(2, axis=2).repeat(2, axis=3)

    def backward(self, grad):
        b, c, h, w = grad.shape
        return (grad.reshape(b, c, h // 2, 2, w // 2, 2).sum(axis=(3, 5)),)


class ConcatChannels(Function):
    def forward(self, *xs):
        reference = xs[0].shape
        for x in xs[1:]:
            if x.ndim != 4 or (x.shape[0], x.shape[2], x.shape[3]) != (reference[0], reference[2], reference[3]):
                raise ShapeError("concat_channels requiere B, H y W iguales", error_code="CONCAT_MISMATCH",
                                 details={'shapes': [list(v.shape) for v in xs]})
        self.sizes = [x.shape[1] for x in xs]
        return np.concatenate(xs, axis=1)

    def backward(self, grad):
        bounds = np.cumsum(self.sizes)[:-1]
        return tuple(np.split(grad, bounds, axis=1))


class Add(Function):
    def forward(self, x, y):
        if x.shape != y.shape:
            raise ShapeError(f"add requiere formas iguales: {x.shape} vs {y.shape}", error_code="ADD_MISMATCH")
        return x + y

    def backward(self, grad):
        return grad, grad


def conv2d(x, w, b, stride: int = 1, pad: int = 0) -> Value:
    return Conv2D.apply(x, w, b, stride=stride, pad=pad)


def relu(x) -> Value:
    return ReLU.apply(x)


def sigmoid(x) -> Value:
    return Sigmoid.apply(x)


def maxpool2(x) -> Value:
    return MaxPool2.apply(x)


def upsample2(x) -> Value:
    return Upsample2.apply(x)


def concat_channels(xs: Sequence) -> Value:
    xs = list(xs)
    if not xs:
        raise ShapeError("concat_channels necesita al menos una entrada", error_code="CONCAT_EMPTY")
    return ConcatChannels.apply(*xs)


def add(x, y) -> Value:
    return Add.apply(x, y)
