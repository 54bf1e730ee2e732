"""
Comando Django para generar un corpus de fantomas de perfusión.
"""
from lesion.management.base import PipelineCommand
from lesion.services import SynthService


class Command(PipelineCommand):
    help = 'Genera casos sintéticos (PWI 4D, seis mapas, verdad y meta.json), un directorio por caso'
    step = 'synth'
    uses_config = True

    def add_stage_arguments(self, parser):
        parser.add_argument(
            '--out',
            required=True,
            help='Directorio de salida del corpus'
        )
        parser.add_argument(
            '--n',
            type=int,
            default=1,
            help='Número de casos (por defecto: %(default)s)'
        )
        parser.add_argument(
            '--fixed',
            action='store_true',
            help='Usar la sección phantom tal cual en lugar de sortear parámetros por caso'
        )
        parser.add_argument(
            '--nifti',
            action='store_true',
            help='Escribir los volúmenes como NIfTI-1 (.nii) en lugar del formato crudo'
        )

    def run(self, **options):
        config = self.load_config(options)
        paths = SynthService().generate(options['out'], options['n'], options['seed'], config.phantom,
                                        fixed=options['fixed'], nifti=options['nifti'],
                                        threads=options['threads'])
        return f"{len(paths)} casos escritos en {options['out']}"
