"""
Comando Django para generar las figuras SVG del informe.
"""
from pathlib import Path

from lesion.exceptions import ValidationError
from lesion.management.base import PipelineCommand
from lesion.services import ReportService


def parse_metrics_arg(value: str):
    """``etiqueta=ruta`` o solo ``ruta`` (la etiqueta es el directorio que contiene el CSV)."""
    if '=' in value:
        label, path = value.split('=', 1)
        return label, path
    path = Path(value)
    return path.parent.name or path.stem, value


class Command(PipelineCommand):
    help = ('Genera hd_vs_dice.svg (métricas por método), nmi_heatmap.svg (matriz NMI) '
            'y feature_panel.svg (mapas aprendidos de un corte)')
    step = 'report'
    uses_config = True

    def add_stage_arguments(self, parser):
        parser.add_argument(
            '--metrics',
            nargs='+',
            default=[],
            help='CSV de métricas, uno por método, como etiqueta=ruta o ruta'
        )
        parser.add_argument(
            '--nmi',
            default=None,
            help='CSV de la matriz NMI'
        )
        parser.add_argument(
            '--features',
            action='store_true',
            help='Generar el panel de mapas aprendidos (requiere --model y --case)'
        )
        parser.add_argument(
            '--model',
            default=None,
            help='Checkpoint para --features'
        )
        parser.add_argument(
            '--case',
            default=None,
            help='Caso para --features'
        )
        parser.add_argument(
            '--z',
            type=int,
            default=None,
            help='Corte del panel (por defecto: el de mayor área de lesión)'
        )
        parser.add_argument(
            '--out',
            required=True,
            help='Directorio de salida'
        )

    def run(self, **options):
        features = None
        if options['features']:
            if not options['model'] or not options['case']:
                raise ValidationError("--features requiere --model y --case", error_code="MISSING_ARGS")
            features = {'model': options['model'], 'case': options['case'], 'z': options['z'],
                        'config': self.load_config(options).preproc, 'seed': options['seed']}
        metrics = [parse_metrics_arg(value) for value in options['metrics']]
        written = ReportService().run(options['out'], metrics, options['nmi'], features)
        return '\n'.join(f"Figura escrita: {path}" for path in written)
