"""
Comando Django para entrenar una de las cuatro arquitecturas.
"""
from lesion.management.base import PipelineCommand
from lesion.models import MODEL_KINDS
from lesion.services import TrainingService

ARCH_CHOICES = [kind.replace('_', '-') for kind in MODEL_KINDS]


class Command(PipelineCommand):
    help = 'Entrena un modelo sobre los parches preprocesados y escribe el checkpoint y loss.csv'
    step = 'train'
    uses_config = True

    def add_stage_arguments(self, parser):
        parser.add_argument(
            '--data',
            required=True,
            help='Directorio con los casos preprocesados'
        )
        parser.add_argument(
            '--arch',
            required=True,
            choices=ARCH_CHOICES,
            help='Arquitectura a entrenar'
        )
        parser.add_argument(
            '--out',
            required=True,
            help='Ruta del checkpoint'
        )
        parser.add_argument(
            '--paper-hparams',
            action='store_true',
            help='Usar la tasa de aprendizaje de escala completa (1e-5) en lugar de la de escritorio'
        )

    def run(self, **options):
        config = self.load_config(options)
        checkpoint = TrainingService().run(options['data'], options['arch'], options['out'], config.arch,
                                           config.train, options['paper_hparams'])
        best = checkpoint.metadata['best_epoch']
        return f"Checkpoint {checkpoint.kind} escrito en {options['out']} (mejor época {best})"
