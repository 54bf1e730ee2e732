"""
Grafo de cómputo con diferenciación en modo inverso.

Cada operación es una subclase de :class:`Function` con ``forward`` sobre
arrays de numpy y ``backward`` que devuelve un gradiente por padre. Los
nodos :class:`Value` registran su contexto y el gradiente se acumula en un
recorrido topológico inverso.
"""

from typing import Optional

import numpy as np


class Value:
    """Nodo del grafo: datos, gradiente (perezoso) y la operación que lo produjo."""

    __slots__ = ('data', 'grad', 'ctx', 'requires_grad', 'name')

    def __init__(self, data, ctx: Optional['Function'] = None, requires_grad: bool = False,
                 name: Optional[str] = None):
        array = np.asarray(data)
        if array.dtype not in (np.float32, np.float64):
            array = array.astype(np.float32)
        self.data = array
        self.grad = None
        self.ctx = ctx
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def zero_grad(self):
        self.grad = None

    def __add__(self, other):
        from lesion.autodiff.ops import add
        return add(self, other)

    def __repr__(self):
        label = f" {self.name}" if self.name else ''
        return f"<Value{label} shape={self.shape} dtype={self.dtype}>"

    def _topological_order(self):
        order, visited = [], set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            if node.ctx is not None:
                for parent in node.ctx.parents:
                    if id(parent) not in visited:
                        stack.append((parent, False))
        return order

    def backward(self, grad=None):
        """Propaga ``grad`` (por defecto unos) hacia todas las hojas con requires_grad."""
        seed = np.ones_like(self.data) if grad is None else np.asarray(grad, dtype=self.data.dtype)
        self.grad = seed if self.grad is None else self.grad + seed
        for node in reversed(self._topological_order()):
            if node.ctx is None or node.grad is None:
                continue
            for parent, parent_grad in zip(node.ctx.parents, node.ctx.backward(node.grad)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                parent.grad = parent_grad if parent.grad is None else parent.grad + parent_grad
            if node is not self:
                # los intermedios no conservan gradiente tras propagarlo
                node.grad = None


def as_value(x) -> Value:
    return x if isinstance(x, Value) else Value(x)


class Function:
    """Operación diferenciable; ``apply`` construye el nodo de salida."""

    def __init__(self, *parents: Value):
        self.parents = parents

    @classmethod
    def apply(cls, *inputs, **kwargs) -> Value:
        values = [as_value(x) for x in inputs]
        ctx = cls(*values)
        out = ctx.forward(*[v.data for v in values], **kwargs)
        requires = any(v.requires_grad for v in values)
        return Value(out, ctx=ctx if requires else None, requires_grad=requires)

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def backward(self, grad):
        raise NotImplementedError
