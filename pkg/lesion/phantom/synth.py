"""
Generador de casos sintéticos de perfusión con verdad conocida.

Modelo de señal dentro del cerebro (elipsoide centrado en el volumen):

    S(t) = S0 · exp(−κ · λ · C(t − δ)) + ruido

con C la gamma-variate normalizada, λ la atenuación de perfusión del vóxel
(1 sano, 0 core) y δ el retraso de llegada. Fuera del cerebro la señal es 0.
Si un vóxel cae en varios elipsoides de lesión se toma el λ mínimo y el δ
máximo.
"""

from dataclasses import asdict, dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from lesion.exceptions import ValidationError
from lesion.io.rng import SeededRng, rng_split
from lesion.io.tensor import CaseBundle, Tensor, Volume3D, Volume4D
from lesion.phantom.gamma import gamma_variate
from lesion.utils.logging_utils import get_logger, log_step
from lesion.utils.parallel import map_ordered

logger = get_logger(__name__)

ADC_HEALTHY = 800.0
ADC_CORE_FACTOR = 0.5


@dataclass(frozen=True)
class LesionEllipsoid:
    center: Tuple[float, float, float]
    radii: Tuple[float, float, float]
    attenuation: float = 0.0
    delay: float = 0.0

    def contains(self, grid, scale: float = 1.0) -> np.ndarray:
        zz, yy, xx = grid
        cz, cy, cx = self.center
        rz, ry, rx = (r * scale for r in self.radii)
        return ((zz - cz) / rz) ** 2 + ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0


@dataclass(frozen=True)
class PhantomConfig:
    """Parámetros de un caso sintético. Tiempos en segundos, espaciado en mm."""

    dims: Tuple[int, int, int, int] = (40, 8, 64, 64)
    dt: float = 1.0
    t0: float = 8.0
    alpha: float = 2.0
    beta: float = 2.0
    s0: float = 100.0
    kappa: float = 1.0
    lesions: Tuple[LesionEllipsoid, ...] = field(default_factory=tuple)
    penumbra_growth: float = 1.0
    noise: float = 0.0
    seed: int = 0
    spacing: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    core_threshold: float = 0.2
    hypoperfusion_threshold: float = 0.9

    def validate(self) -> 'PhantomConfig':
        problems = []
        if len(self.dims) != 4 or any(int(d) < 1 for d in self.dims) or self.dims[0] < 2:
            problems.append(f"dims inválidas: {self.dims}")
        if not self.dt > 0:
            problems.append("dt debe ser positivo")
        if not self.alpha > 0 or not self.beta > 0:
            problems.append("alpha y beta deben ser positivos")
        elif not self.t0 + self.alpha * self.beta < self.dims[0] * self.dt:
            problems.append("el pico t0 + alpha·beta debe caer dentro de la adquisición")
        if not self.s0 > 0 or not self.kappa > 0:
            problems.append("s0 y kappa deben ser positivos")
        if self.penumbra_growth < 1:
            problems.append("penumbra_growth debe ser >= 1")
        if self.noise < 0:
            problems.append("noise debe ser >= 0")
        for lesion in self.lesions:
            if not 0 <= lesion.attenuation <= 1 or lesion.delay < 0:
                problems.append(f"lesión inválida: {lesion}")
            if any(not r > 0 for r in lesion.radii):
                problems.append(f"radios de lesión no positivos: {lesion.radii}")
        if problems:
            raise ValidationError("Configuración de fantoma inválida", error_code="BAD_PHANTOM",
                                  details={'problems': problems})
        return self

    def echo(self) -> dict:
        payload = asdict(self)
        payload['lesions'] = [asdict(lesion) for lesion in self.lesions]
        return payload


@dataclass(frozen=True)
class PhantomCase:
    bundle: CaseBundle
    true_peak_index: int
    core_mask: Volume3D
    follow_up_mask: Volume3D
    brain_mask: Volume3D
    config: PhantomConfig


def _grid(spatial_dims):
    return np.ogrid[tuple(slice(0, n) for n in spatial_dims)]


def _brain_ellipsoid(spatial_dims) -> LesionEllipsoid:
    nz, ny, nx = spatial_dims
    center = ((nz - 1) / 2.0, (ny - 1) / 2.0, (nx - 1) / 2.0)
    radii = (nz / 2.0 + 0.5, 0.42 * ny, 0.42 * nx)
    return LesionEllipsoid(center=center, radii=radii, attenuation=1.0)


def _perfusion_fields(config: PhantomConfig, grid, brain):
    attenuation = np.ones(brain.shape)
    delay = np.zeros(brain.shape)
    for lesion in config.lesions:
        inside = lesion.contains(grid)
        attenuation[inside] = np.minimum(attenuation[inside], lesion.attenuation)
        delay[inside] = np.maximum(delay[inside], lesion.delay)
    return attenuation, delay


@log_step(logger)
def synth_case(config: PhantomConfig, case_id: str = 'case_000') -> PhantomCase:
    """
    Construye un caso con PWI cruda, mapas derivados y máscaras de verdad.

    Mapas: TTP = argmin_t S (segundos, centinela T·dt donde λ = 0),
    Tmax = max(TTP − t0, 0), rCBV = S0 − min_t S, MTT = αβ/λ acotado a T·dt,
    rCBF = rCBV/MTT y ADC constante con reducción en el core.
    """
    config.validate()
    n_t = int(config.dims[0])
    spatial = tuple(int(d) for d in config.dims[1:])
    grid = _grid(spatial)
    brain = _brain_ellipsoid(spatial).contains(grid)
    attenuation, delay = _perfusion_fields(config, grid, brain)

    times = np.arange(n_t, dtype=np.float64) * config.dt
    concentration = gamma_variate(times[:, None, None, None] - delay[None], config.t0, config.alpha, config.beta)
    clean = config.s0 * np.exp(-config.kappa * attenuation[None] * concentration)
    clean *= brain[None]

    signal = clean
    if config.noise > 0:
        noise = SeededRng(config.seed).split('noise').normal(0.0, config.noise, clean.shape)
        signal = clean + noise * brain[None]

    brain_mean = clean[:, brain].mean(axis=1) if brain.any() else np.zeros(n_t)
    true_peak_index = int(np.argmin(brain_mean))

    horizon = n_t * config.dt
    ttp = np.argmin(signal, axis=0) * config.dt
    ttp[attenuation == 0] = horizon
    ttp *= brain
    tmax = np.maximum(ttp - config.t0, 0.0) * brain
    rcbv = (config.s0 - signal.min(axis=0)) * brain
    with np.errstate(divide='ignore'):
        mtt = np.where(attenuation > 0, config.alpha * config.beta / attenuation, horizon)
    mtt = np.minimum(mtt, horizon) * brain
    rcbf = np.divide(rcbv, mtt, out=np.zeros_like(rcbv), where=mtt > 0)

    core = brain & (attenuation < config.core_threshold)
    adc = np.where(core, ADC_HEALTHY * ADC_CORE_FACTOR, ADC_HEALTHY) * brain

    follow_up = core.copy()
    for lesion in config.lesions:
        if lesion.attenuation < config.hypoperfusion_threshold:
            follow_up |= brain & lesion.contains(grid, scale=config.penumbra_growth)

    def vol(array):
        return Volume3D(Tensor(np.asarray(array, dtype=np.float32)), config.spacing)

    maps = {
        'rCBF': vol(rcbf),
        'rCBV': vol(rcbv),
        'MTT': vol(mtt),
        'TTP': vol(ttp),
        'Tmax': vol(tmax),
        'ADC': vol(adc),
    }
    bundle = CaseBundle(
        case_id=case_id,
        pwi=Volume4D(Tensor(signal.astype(np.float32)), config.spacing, config.dt),
        maps=maps,
        lesion_gt=vol(follow_up),
    )
    return PhantomCase(
        bundle=bundle,
        true_peak_index=true_peak_index,
        core_mask=vol(core),
        follow_up_mask=vol(follow_up),
        brain_mask=vol(brain),
        config=config,
    )


def random_config(rng: SeededRng, base: PhantomConfig) -> PhantomConfig:
    """
    Sortea los parámetros de un caso del corpus.

    Rangos: t0 ∈ [4, 10] s, α ∈ [1.5, 3], β ∈ [1, 2.5] s, S0 ∈ [80, 120],
    κ ∈ [0.8, 1.2], σ ∈ [0, 0.02·S0]. Lesión = core (λ ∈ [0, 0.15]) más
    penumbra concéntrica 1.3–2 veces mayor (λ ∈ [0.35, 0.75], δ ∈ [0.5, 3] s),
    crecimiento γ ∈ [1, 1.3].
    """
    n_t, nz, ny, nx = base.dims
    t0 = rng.uniform(4.0, 10.0)
    alpha = rng.uniform(1.5, 3.0)
    beta = rng.uniform(1.0, 2.5)
    limit = n_t * base.dt - 8.0 - t0
    if alpha * beta > limit:
        beta = max(limit / alpha, 0.5)
    s0 = rng.uniform(80.0, 120.0)

    center = (
        rng.uniform(0.3, 0.7) * (nz - 1),
        (ny - 1) / 2.0 + rng.uniform(-0.15, 0.15) * ny,
        (nx - 1) / 2.0 + rng.uniform(-0.15, 0.15) * nx,
    )
    core_radii = (
        rng.uniform(0.5, 0.2 * nz + 0.5),
        rng.uniform(0.04, 0.10) * ny,
        rng.uniform(0.04, 0.10) * nx,
    )
    growth = rng.uniform(1.3, 2.0)
    penumbra_radii = tuple(r * growth for r in core_radii)
    core = LesionEllipsoid(center=center, radii=core_radii, attenuation=rng.uniform(0.0, 0.15), delay=0.0)
    penumbra = LesionEllipsoid(center=center, radii=penumbra_radii,
                               attenuation=rng.uniform(0.35, 0.75), delay=rng.uniform(0.5, 3.0))
    return replace(
        base,
        t0=float(t0),
        alpha=float(alpha),
        beta=float(beta),
        s0=float(s0),
        kappa=float(rng.uniform(0.8, 1.2)),
        lesions=(core, penumbra),
        penumbra_growth=float(rng.uniform(1.0, 1.3)),
        noise=float(rng.uniform(0.0, 0.02) * s0),
        seed=int(rng.split('noise_seed').seed),
    )


def synth_corpus(n: int, base_seed: int, base: Optional[PhantomConfig] = None,
                 threads: int = 1) -> List[PhantomCase]:
    """Genera ``n`` casos deterministas; el caso i usa rng_split(base_seed, case_id)."""
    if n < 1:
        raise ValidationError("El corpus necesita al menos un caso", error_code="EMPTY_CORPUS",
                              details={'n': n})
    base = base or PhantomConfig()
    root = SeededRng(base_seed)
    case_ids = [f"case_{i:03d}" for i in range(n)]
    configs = [random_config(rng_split(root, case_id), base) for case_id in case_ids]
    logger.info("Generando corpus sintético", extra={'step': 'synth_corpus',
                                                     'details': {'n': n, 'seed': base_seed}})
    return map_ordered(lambda pair: synth_case(pair[1], pair[0]), list(zip(case_ids, configs)), threads)
