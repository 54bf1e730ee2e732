"""
Comando Django para evaluar predicciones contra la verdad.
"""
from lesion.management.base import PipelineCommand
from lesion.metrics import DEFAULT_THRESHOLD
from lesion.services import EvaluationService


class Command(PipelineCommand):
    help = 'Calcula Dice, Hausdorff, ASSD, precisión y exhaustividad por caso y escribe el CSV de métricas'
    step = 'evaluate'

    def add_stage_arguments(self, parser):
        parser.add_argument(
            '--pred',
            required=True,
            help='Directorio con <case_id>.pwt'
        )
        parser.add_argument(
            '--gt',
            required=True,
            help='Directorio con los casos originales (con gt)'
        )
        parser.add_argument(
            '--report',
            required=True,
            help='CSV de métricas de salida'
        )
        parser.add_argument(
            '--threshold',
            type=float,
            default=DEFAULT_THRESHOLD,
            help='Umbral de binarización estricto (por defecto: %(default)s)'
        )

    def run(self, **options):
        report = EvaluationService().run(options['pred'], options['gt'], options['report'],
                                         options['threshold'], options['threads'])
        return f"Dice {report.mean['dice']:.4f} ± {report.sd['dice']:.4f} sobre {len(report.rows)} casos"
