"""
Comando Django para la autoverificación numérica.
"""
from lesion.management.base import PipelineCommand
from lesion.services import SelftestService


class Command(PipelineCommand):
    help = 'Comprueba gradientes de todos los núcleos, la auditoría soft-dice y los oráculos de métricas'
    step = 'selftest'

    def add_stage_arguments(self, parser):
        parser.add_argument(
            '--instances',
            type=int,
            default=20,
            help='Instancias aleatorias por núcleo (por defecto: %(default)s)'
        )
        parser.add_argument(
            '--skip-model',
            action='store_true',
            help='Omitir la verificación extremo a extremo del modelo ramificado'
        )

    def run(self, **options):
        results = SelftestService().run(options['seed'], options['instances'], model=not options['skip_model'])
        for result in results:
            self.stdout.write(f"{result.name:40s} {result.error:.3e} < {result.tolerance:.0e}")
        return f"{len(results)} comprobaciones superadas"
