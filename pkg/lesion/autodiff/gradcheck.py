"""Verificación del gradiente analítico contra diferencias finitas centradas."""

from typing import Callable, Iterable, Optional

import numpy as np

from lesion.autodiff.graph import Value
from lesion.io.rng import SeededRng

KINK_RETRY_FACTORS = (1.0, 0.1, 0.01)


def _relative_error(analytic: float, numeric: float, floor: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def grad_check(fn: Callable[[], Value], inputs: Iterable[Value], eps: float = 1e-5,
               rng: Optional[SeededRng] = None, floor: float = 1e-4) -> float:
    """
    Peor error relativo entre backward y diferencias finitas centradas.

    ``fn`` reconstruye el grafo a partir de ``inputs`` (Values de doble
    precisión con requires_grad). Una salida no escalar se proyecta con un
    vector aleatorio fijo. Si una coordenada cruza un punto no diferenciable
    (ReLU, máximo) se repite con pasos eps/10 y eps/100 y se conserva el menor
    error.
    """
    inputs = [v for v in inputs if v.requires_grad]
    for value in inputs:
        value.data = np.ascontiguousarray(value.data)
    rng = rng or SeededRng(0)
    out = fn()
    projection = np.asarray(rng.split('projection').normal(size=out.shape), dtype=out.dtype).reshape(out.shape)

    for value in inputs:
        value.zero_grad()
    out.backward(projection)
    analytic = [np.zeros_like(v.data) if v.grad is None else v.grad.copy() for v in inputs]

    def objective() -> float:
        return float(np.sum(fn().data * projection))

    worst = 0.0
    for value, grad in zip(inputs, analytic):
        flat = value.data.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            best = np.inf
            for factor in KINK_RETRY_FACTORS:
                step = eps * factor
                flat[i] = original + step
                plus = objective()
                flat[i] = original - step
                minus = objective()
                flat[i] = original
                numeric = (plus - minus) / (2 * step)
                best = min(best, _relative_error(float(grad.reshape(-1)[i]), numeric, floor))
                if best < 1e-6:
                    break
            worst = max(worst, best)
    return worst
