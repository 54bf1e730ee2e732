"""
Autoverificación: gradientes de todos los núcleos diferenciables, auditoría
del gradiente soft-dice y oráculos de las métricas.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from lesion.autodiff import (
    DIRECTIONS,
    Value,
    concat_channels,
    conv2d,
    printed_dice_gradient,
    four_dir_gru,
    grad_check,
    gru2d,
    maxpool2,
    relu,
    sigmoid,
    soft_dice,
    soft_dice_gradient,
    upsample2,
)
from lesion.autodiff.loss import dice_terms
from lesion.io.rng import SeededRng, rng_split
from lesion.metrics import assd, dice_binary, hausdorff, nmi, precision, recall
from lesion.models import ArchConfig, ModelSpec

from .base_service import BaseService, NumericalError

KERNEL_TOLERANCE = 1e-5
MODEL_TOLERANCE = 1e-4
AUDIT_TOLERANCE = 1e-12
FD_TOLERANCE = 1e-8
DISTANCE_TOLERANCE = 1e-9

GradCase = Tuple[Callable[[], Value], List[Value]]


def _leaf(rng: SeededRng, shape, scale: float = 1.0) -> Value:
    return Value(rng.normal(0.0, scale, shape).astype(np.float64), requires_grad=True)


def _away_from_zero(rng: SeededRng, shape) -> Value:
    x = rng.normal(0.0, 1.0, shape)
    return Value(np.sign(x) * (np.abs(x) + 0.1), requires_grad=True)


def _gru_params(rng: SeededRng, channels: int, hidden: int):
    return (_leaf(rng, (channels, 3 * hidden), 0.5), _leaf(rng, (hidden, 3 * hidden), 0.5),
            _leaf(rng, (3 * hidden,), 0.1))


def _conv_case(rng):
    x, w, b = _leaf(rng, (2, 2, 5, 5)), _leaf(rng, (3, 2, 3, 3), 0.5), _leaf(rng, (3,), 0.1)
    return (lambda: conv2d(x, w, b, pad=1)), [x, w, b]


def _conv_stride_case(rng):
    x, w, b = _leaf(rng, (1, 2, 6, 6)), _leaf(rng, (2, 2, 3, 3), 0.5), _leaf(rng, (2,), 0.1)
    return (lambda: conv2d(x, w, b, stride=2, pad=1)), [x, w, b]


def _unary_case(op, make):
    def build(rng):
        x = make(rng, (2, 3, 4, 4))
        return (lambda: op(x)), [x]
    return build


def _upsample_case(rng):
    x = _leaf(rng, (2, 2, 3, 3))
    return (lambda: upsample2(x)), [x]


def _concat_case(rng):
    a, b = _leaf(rng, (2, 2, 3, 3)), _leaf(rng, (2, 3, 3, 3))
    return (lambda: concat_channels([a, b])), [a, b]


def _gru_case(direction):
    def build(rng):
        x = _leaf(rng, (2, 3, 3, 4))
        params = _gru_params(rng, 3, 2)
        return (lambda: gru2d(x, params, direction)), [x, *params]
    return build


def _four_dir_case(merge):
    def build(rng):
        x = _leaf(rng, (1, 2, 3, 3))
        params = {d: _gru_params(rng_split(rng, d), 2, 2) for d in DIRECTIONS}
        leaves = [x] + [p for d in DIRECTIONS for p in params[d]]
        return (lambda: four_dir_gru(x, params, merge)), leaves
    return build


def _soft_dice_case(rng):
    p = Value(rng.uniform(0.05, 0.95, (2, 1, 4, 4)), requires_grad=True)
    g = (rng.uniform(size=(2, 1, 4, 4)) < 0.5).astype(np.float64)
    return (lambda: soft_dice(p, g)[1]), [p]


KERNEL_CASES: Dict[str, Callable[[SeededRng], GradCase]] = {
    'conv2d': _conv_case,
    'conv2d_stride2': _conv_stride_case,
    'relu': _unary_case(relu, _away_from_zero),
    'sigmoid': _unary_case(sigmoid, _leaf),
    'maxpool2': _unary_case(maxpool2, _leaf),
    'upsample2': _upsample_case,
    'concat_channels': _concat_case,
    **{f"gru2d_{d}": _gru_case(d) for d in DIRECTIONS},
    'four_dir_gru_sum': _four_dir_case('sum'),
    'four_dir_gru_concat': _four_dir_case('concat'),
    'soft_dice': _soft_dice_case,
}

TINY_ARCH = ArchConfig(unet_levels=1, base_filters=2, gru_hidden=2, pwi_channels=2, map_channels=2,
                       expansion_factor=2, merge_filters=2)


def model_case(kind: str, rng: SeededRng, arch: ArchConfig = TINY_ARCH, size: int = 4) -> GradCase:
    """Pérdida soft-dice de un modelo diminuto en doble precisión respecto a todos sus parámetros."""
    spec = ModelSpec(kind, arch, seed=int(rng.integers(0, 2 ** 31)), dtype=np.float64)
    pwi = rng.uniform(0.0, 1.0, (1, arch.pwi_channels, size, size))
    maps = rng.uniform(0.0, 1.0, (1, arch.map_channels, size, size))
    inputs = {
        'standard': maps,
        'data_driven': pwi,
        'single': np.concatenate([pwi, maps], axis=1),
        'branched': (pwi, maps),
    }[spec.kind]
    gt = (rng.uniform(size=(1, 1, size, size)) < 0.5).astype(np.float64)
    return (lambda: soft_dice(spec.forward(inputs), gt)[1]), [value for _, value in spec.params.items()]


def brute_force_surface(mask: np.ndarray) -> np.ndarray:
    """Vóxeles con algún 6-vecino fuera de la máscara (o fuera del volumen)."""
    padded = np.pad(np.asarray(mask, dtype=bool), 1, constant_values=False)
    inner = padded[1:-1, 1:-1, 1:-1]
    neighbours_inside = np.ones_like(inner)
    for axis in range(3):
        for shift in (-1, 1):
            neighbours_inside &= np.roll(padded, shift, axis=axis)[1:-1, 1:-1, 1:-1]
    return inner & ~neighbours_inside


def brute_force_distances(a, b, spacing) -> Tuple[float, float]:
    """(hausdorff, assd) por distancias entre todos los pares de vóxeles de superficie."""
    spacing = np.asarray(spacing, dtype=np.float64)
    pa = np.argwhere(brute_force_surface(a)) * spacing
    pb = np.argwhere(brute_force_surface(b)) * spacing
    pairwise = np.sqrt(((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=-1))
    to_b, to_a = pairwise.min(axis=1), pairwise.min(axis=0)
    return float(max(to_b.max(), to_a.max())), float((to_b.sum() + to_a.sum()) / (len(to_b) + len(to_a)))


def random_mask_pair(rng: SeededRng, max_side: int = 8):
    shape = tuple(int(s) for s in rng.integers(1, max_side + 1, size=3))
    density = rng.uniform(0.1, 0.6)
    a = rng.uniform(size=shape) < density
    b = rng.uniform(size=shape) < density
    a.flat[int(rng.integers(0, a.size))] = True
    b.flat[int(rng.integers(0, b.size))] = True
    spacing = tuple(float(s) for s in rng.uniform(0.5, 2.0, size=3))
    return a, b, spacing


@dataclass(frozen=True)
class CheckResult:
    name: str
    error: float
    tolerance: float
    instances: int

    @property
    def passed(self) -> bool:
        return bool(self.error < self.tolerance)

    def as_dict(self) -> dict:
        return {'check': self.name, 'error': self.error, 'tolerance': self.tolerance,
                'instances': self.instances, 'passed': self.passed}


class SelftestService(BaseService):

    def kernel_checks(self, rng: SeededRng, instances: int) -> List[CheckResult]:
        results = []
        for name, build in KERNEL_CASES.items():
            worst = 0.0
            for i in range(instances):
                stream = rng_split(rng, f"{name}_{i}")
                fn, leaves = build(stream)
                worst = max(worst, grad_check(fn, leaves, rng=stream))
            results.append(CheckResult(f"grad_{name}", worst, KERNEL_TOLERANCE, instances))
        return results

    def model_checks(self, rng: SeededRng, kinds: Sequence[str] = ('branched',)) -> List[CheckResult]:
        results = []
        for kind in kinds:
            stream = rng_split(rng, f"model_{kind}")
            fn, leaves = model_case(kind, stream)
            results.append(CheckResult(f"grad_model_{kind}", grad_check(fn, leaves, rng=stream),
                                       MODEL_TOLERANCE, 1))
        return results

    def dice_audit(self, rng: SeededRng, instances: int = 1000) -> List[CheckResult]:
        """El backward implementado es exactamente 2x la expresión publicada (sin suavizado)."""
        audit, fd_worst = 0.0, 0.0
        for i in range(instances):
            stream = rng_split(rng, f"dice_{i}")
            n = int(stream.integers(1, 64))
            p = stream.uniform(0.01, 1.0, n)
            g = (stream.uniform(size=n) < 0.5).astype(np.float64)
            implemented = soft_dice_gradient(p, g, eps=0.0)
            printed = 2.0 * printed_dice_gradient(p, g)
            scale = max(np.abs(printed).max(), 1e-300)
            audit = max(audit, float(np.abs(implemented - printed).max() / scale))
            if i < 50:
                step = 1e-6
                for j in range(n):
                    plus, minus = p.copy(), p.copy()
                    plus[j] += step
                    minus[j] -= step
                    numeric = (dice_terms(plus, g, 0.0)[0][0] - dice_terms(minus, g, 0.0)[0][0]) / (2 * step)
                    fd_worst = max(fd_worst, abs(numeric - implemented[j]) / max(abs(numeric), 1.0))
        dice, _, _ = dice_terms(np.array([0.5]), np.array([1.0]), 0.0)
        canonical = max(abs(float(dice[0]) - 0.8),
                        abs(float(soft_dice_gradient(np.array([0.5]), np.array([1.0]), eps=0.0)[0]) - 0.96))
        return [
            CheckResult('dice_backward_vs_printed_x2', audit, AUDIT_TOLERANCE, instances),
            CheckResult('dice_backward_vs_finite_differences', fd_worst, FD_TOLERANCE, min(instances, 50)),
            CheckResult('dice_canonical_example', canonical, AUDIT_TOLERANCE, 1),
        ]

    def metric_checks(self, rng: SeededRng, instances: int = 200) -> List[CheckResult]:
        a = np.zeros((1, 1, 6), dtype=bool)
        b = np.zeros((1, 1, 6), dtype=bool)
        a[0, 0, :4] = True
        b[0, 0, 2:] = True
        counts = max(abs(dice_binary(a, b) - 0.5), abs(precision(a, b) - 0.5), abs(recall(a, b) - 0.5))

        p = np.zeros((1, 4, 5), dtype=bool)
        q = np.zeros((1, 4, 5), dtype=bool)
        p[0, 0, 0] = True
        q[0, 3, 4] = True
        single = max(abs(hausdorff(p, q, (1, 1, 1)) - 5.0), abs(assd(p, q, (1, 1, 1)) - 5.0))

        distance_worst, ordering = 0.0, 0.0
        for i in range(instances):
            m1, m2, spacing = random_mask_pair(rng_split(rng, f"masks_{i}"))
            expected_hd, expected_assd = brute_force_distances(m1, m2, spacing)
            hd, mean = hausdorff(m1, m2, spacing), assd(m1, m2, spacing)
            distance_worst = max(distance_worst, abs(hd - expected_hd), abs(mean - expected_assd))
            ordering = max(ordering, mean - hd)

        x = rng_split(rng, 'nmi').uniform(0.0, 255.0, 4096)
        self_nmi = abs(nmi(x, x) - 1.0)
        return [
            CheckResult('overlap_counts', counts, 1e-15, 1),
            CheckResult('single_voxel_distance', single, DISTANCE_TOLERANCE, 1),
            CheckResult('surface_distance_brute_force', distance_worst, DISTANCE_TOLERANCE, instances),
            CheckResult('hausdorff_ge_assd', max(ordering, 0.0), 1e-12, instances),
            CheckResult('nmi_self', self_nmi, 1e-9, 1),
        ]

    def run(self, seed: int = 0, instances: int = 20, model: bool = True) -> List[CheckResult]:
        """
        Ejecuta toda la batería.

        Raises:
            NumericalError: si alguna comprobación supera su tolerancia
        """
        root = SeededRng(seed)
        results = self.kernel_checks(rng_split(root, 'kernels'), instances)
        if model:
            results += self.model_checks(rng_split(root, 'models'))
        results += self.dice_audit(rng_split(root, 'dice'))
        results += self.metric_checks(rng_split(root, 'metrics'))
        for result in results:
            self.log_operation('selftest_check', result.as_dict())
        failed = [r.name for r in results if not r.passed]
        if failed:
            raise NumericalError("Fallaron comprobaciones de la autoverificación", error_code="SELFTEST_FAILED",
                                 details={'failed': failed})
        return results
