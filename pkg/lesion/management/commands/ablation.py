"""
Comando Django para la ablación de las cuatro arquitecturas.
"""
import json

from lesion.management.base import PipelineCommand
from lesion.models import MODEL_KINDS, normalize_kind
from lesion.services import AblationService
from lesion.services.ablation_service import ranking


class Command(PipelineCommand):
    help = ('Entrena y evalúa standard, data-driven, single y branched sobre un corpus sintético '
            'con varias semillas y escribe métricas por método y summary.json')
    step = 'ablation'
    uses_config = True

    def add_stage_arguments(self, parser):
        parser.add_argument(
            '--out',
            required=True,
            help='Directorio de salida'
        )
        parser.add_argument(
            '--n',
            type=int,
            default=40,
            help='Casos del corpus (por defecto: %(default)s)'
        )
        parser.add_argument(
            '--seeds',
            type=int,
            nargs='+',
            default=[0, 1, 2],
            help='Semillas (por defecto: %(default)s)'
        )
        parser.add_argument(
            '--kinds',
            nargs='+',
            default=[kind.replace('_', '-') for kind in MODEL_KINDS],
            help='Arquitecturas a comparar (por defecto: %(default)s)'
        )

    def run(self, **options):
        config = self.load_config(options)
        kinds = [normalize_kind(kind) for kind in options['kinds']]
        summary = AblationService().run(options['out'], options['n'], options['seeds'], config, kinds,
                                        options['threads'])
        self.stdout.write(json.dumps(summary, indent=2, sort_keys=True))
        return f"Orden por Dice mediana: {' > '.join(ranking(summary))}"
