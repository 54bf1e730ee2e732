"""
Comando Django para la matriz de información mutua normalizada.
"""
from lesion.management.base import PipelineCommand
from lesion.metrics import DEFAULT_BINS
from lesion.services import NmiService


class Command(PipelineCommand):
    help = 'NMI entre los mapas aprendidos por la rama de PWI y los seis mapas estándar de un caso'
    step = 'nmi'
    uses_config = True

    def add_stage_arguments(self, parser):
        parser.add_argument(
            '--model',
            required=True,
            help='Checkpoint de la red ramificada'
        )
        parser.add_argument(
            '--case',
            required=True,
            help='Caso preprocesado o crudo'
        )
        parser.add_argument(
            '--out',
            required=True,
            help='CSV de salida'
        )
        parser.add_argument(
            '--bins',
            type=int,
            default=DEFAULT_BINS,
            help='Intervalos del histograma por eje (por defecto: %(default)s)'
        )

    def run(self, **options):
        config = self.load_config(options).preproc
        matrix = NmiService().run(options['model'], options['case'], options['out'], options['bins'],
                                  config, options['seed'])
        return f"Matriz NMI {matrix.shape[0]}x{matrix.shape[1]} escrita en {options['out']}"
