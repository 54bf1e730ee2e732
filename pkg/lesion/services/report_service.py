"""
Servicio de informes: figuras SVG renderizadas con plantillas Django.

- ``hd_vs_dice.svg``: dispersión Hausdorff frente a Dice por método
- ``nmi_heatmap.svg``: matriz NMI mapas aprendidos x mapas estándar
- ``feature_panel.svg``: mapas de la rama guiada por datos de un corte
"""

import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from django.template.loader import render_to_string
from scipy.ndimage import binary_erosion

from lesion.exceptions import ValidationError
from lesion.io.tensor import MAP_NAMES
from lesion.metrics import MetricsReport, NmiMatrix, feature_volume
from lesion.metrics.report import read_metrics_csv
from lesion.preprocessing import PreprocConfig, PreprocessedCase
from lesion.training import load_checkpoint

from .base_service import BaseService
from .evaluation_service import read_nmi_csv
from .preprocess_service import PreprocessService

METHOD_COLORS = ('#1f77b4', '#ff7f0e', '#2ca02c', '#d62728', '#9467bd', '#8c564b')
GRAY_LEVELS = 32


def _nice_ceiling(value: float) -> float:
    if not value > 0 or not math.isfinite(value):
        return 1.0
    magnitude = 10 ** math.floor(math.log10(value))
    for step in (1, 2, 2.5, 5, 10):
        if step * magnitude >= value:
            return step * magnitude
    return 10 * magnitude


def scatter_context(reports: Sequence[Tuple[str, MetricsReport]]) -> dict:
    width, height = 640, 480
    left, right, top, bottom = 70, 170, 30, 60
    plot_w, plot_h = width - left - right, height - top - bottom
    finite = [row.hd for _, report in reports for row in report.rows if row.distance_defined]
    y_max = _nice_ceiling(max(finite) if finite else 1.0)

    def sx(dice):
        return round(left + dice * plot_w, 2)

    def sy(hd):
        return round(top + plot_h - hd / y_max * plot_h, 2)

    series = []
    for i, (label, report) in enumerate(reports):
        color = METHOD_COLORS[i % len(METHOD_COLORS)]
        points = [
            {'cx': sx(row.dice), 'cy': sy(row.hd), 'title': f"{row.case_id}: dice {row.dice:.3f}, hd {row.hd:.2f}"}
            for row in report.rows if row.distance_defined
        ]
        mean = None
        if math.isfinite(report.mean['hd']):
            mean = {'x': round(sx(report.mean['dice']) - 5, 2), 'y': round(sy(report.mean['hd']) - 5, 2)}
        series.append({'label': label, 'color': color, 'points': points, 'mean': mean,
                       'legend_y': top + 20 + 22 * i, 'dice': f"{report.mean['dice']:.3f}"})
    return {
        'width': width, 'height': height,
        'left': left, 'top': top, 'right_edge': left + plot_w, 'bottom_edge': top + plot_h,
        'legend_x': left + plot_w + 20,
        'x_ticks': [{'pos': sx(v), 'label': f"{v:.1f}"} for v in np.linspace(0, 1, 6)],
        'y_ticks': [{'pos': sy(v), 'label': f"{v:g}"} for v in np.linspace(0, y_max, 6)],
        'series': series,
    }


def heatmap_context(matrix: NmiMatrix, cell: int = 48) -> dict:
    left, top = 110, 60
    cells = []
    for i, row in enumerate(matrix.values):
        for j, value in enumerate(row):
            shade = int(round(255 * (1 - float(value))))
            cells.append({
                'x': left + j * cell, 'y': top + i * cell, 'fill': f"rgb({shade},{shade},255)",
                'text': f"{value:.2f}", 'text_fill': '#ffffff' if value > 0.5 else '#000000',
            })
    return {
        'width': left + cell * len(matrix.columns) + 30,
        'height': top + cell * len(matrix.rows) + 30,
        'cell': cell, 'half': cell // 2,
        'cells': cells,
        'columns': [{'x': left + j * cell + cell // 2, 'label': name} for j, name in enumerate(matrix.columns)],
        'rows': [{'y': top + i * cell + cell // 2, 'label': name} for i, name in enumerate(matrix.rows)],
        'label_x': left - 8, 'header_y': top - 10, 'bins': matrix.bins,
    }


def raster_runs(image: np.ndarray, x0: int, y0: int, scale: int) -> List[Dict]:
    """Imagen en grises como rectángulos; los píxeles contiguos de igual nivel se fusionan por fila."""
    image = np.asarray(image, dtype=np.float64)
    lo, hi = image.min(), image.max()
    norm = (image - lo) / (hi - lo) if hi > lo else np.zeros_like(image)
    levels = np.round(norm * (GRAY_LEVELS - 1)).astype(int)
    rects = []
    for y, row in enumerate(levels):
        x = 0
        while x < len(row):
            end = x
            while end + 1 < len(row) and row[end + 1] == row[x]:
                end += 1
            gray = int(round(row[x] * 255 / (GRAY_LEVELS - 1)))
            rects.append({'x': x0 + x * scale, 'y': y0 + y * scale, 'w': (end - x + 1) * scale, 'h': scale,
                          'fill': f"rgb({gray},{gray},{gray})"})
            x = end + 1
    return rects


def outline_pixels(mask: np.ndarray, x0: int, y0: int, scale: int) -> List[Dict]:
    mask = np.asarray(mask, dtype=bool)
    border = mask & ~binary_erosion(mask, border_value=0)
    return [{'x': x0 + int(x) * scale, 'y': y0 + int(y) * scale} for y, x in np.argwhere(border)]


def panel_context(features: Sequence[Tuple[str, np.ndarray]], adc: np.ndarray, gt: Optional[np.ndarray],
                  case_id: str, z: int, columns: int = 4, scale: int = 3) -> dict:
    ny, nx = adc.shape
    pad, title = 12, 16
    panels = [('ADC', adc)] + list(features)
    rows = int(math.ceil(len(panels) / columns))
    tiles = []
    for k, (name, image) in enumerate(panels):
        x0 = pad + (k % columns) * (nx * scale + pad)
        y0 = pad + title + (k // columns) * (ny * scale + pad + title)
        tiles.append({
            'name': name, 'label_x': x0, 'label_y': y0 - 4,
            'rects': raster_runs(image, x0, y0, scale),
            'outline': outline_pixels(gt, x0, y0, scale) if (k == 0 and gt is not None) else [],
        })
    return {
        'width': pad + columns * (nx * scale + pad),
        'height': pad + rows * (ny * scale + pad + title),
        'scale': scale, 'tiles': tiles, 'case_id': case_id, 'z': z,
    }


class ReportService(BaseService):

    def __init__(self):
        super().__init__()
        self.preprocess = PreprocessService()

    def _write(self, out_dir: Path, template: str, context: dict) -> Path:
        path = out_dir / template
        path.write_text(render_to_string(f"lesion/{template}", context))
        self.log_operation('report_figure', {'path': str(path)})
        return path

    def scatter(self, metrics: Sequence[Tuple[str, str]], out_dir) -> Path:
        reports = [(label, read_metrics_csv(path)) for label, path in metrics]
        return self._write(Path(out_dir), 'hd_vs_dice.svg', scatter_context(reports))

    def heatmap(self, nmi_path, out_dir) -> Path:
        return self._write(Path(out_dir), 'nmi_heatmap.svg', heatmap_context(read_nmi_csv(nmi_path)))

    def feature_panel(self, model_path, case_dir, out_dir, z: Optional[int] = None,
                      config: Optional[PreprocConfig] = None, seed: int = 0) -> Path:
        spec = load_checkpoint(model_path).build()
        if 'data_driven' not in spec.trunks:
            raise ValidationError("El panel requiere un modelo con rama guiada por datos", error_code="NO_DD_BRANCH")
        case: PreprocessedCase = self.preprocess.resolve(case_dir, config, seed)
        nz = case.brain.shape[0]
        if z is None:
            z = int(np.argmax(case.gt.sum(axis=(1, 2)))) if case.gt is not None else nz // 2
        if not 0 <= z < nz:
            raise ValidationError(f"Corte fuera de rango: {z}", error_code="BAD_SLICE", details={'z': z, 'nz': nz})
        features = [(name, volume[z]) for name, volume in feature_volume(spec, case, 'data_driven')]
        adc = case.map_channels[MAP_NAMES.index('ADC'), z]
        gt = case.gt[z] if case.gt is not None else None
        return self._write(Path(out_dir), 'feature_panel.svg', panel_context(features, adc, gt, case.case_id, z))

    def run(self, out_dir, metrics: Sequence[Tuple[str, str]] = (), nmi_path=None, features=None) -> List[Path]:
        """
        Genera las figuras pedidas en ``out_dir``.

        ``metrics`` son pares (etiqueta, csv); ``features`` es un dict con
        ``model``, ``case`` y opcionalmente ``z``, ``config`` y ``seed``.
        """
        if not metrics and nmi_path is None and features is None:
            raise ValidationError("No hay nada que representar", error_code="EMPTY_REPORT")
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        if metrics:
            written.append(self.scatter(metrics, out_dir))
        if nmi_path is not None:
            written.append(self.heatmap(nmi_path, out_dir))
        if features is not None:
            written.append(self.feature_panel(features['model'], features['case'], out_dir, features.get('z'),
                                              features.get('config'), features.get('seed', 0)))
        return written
