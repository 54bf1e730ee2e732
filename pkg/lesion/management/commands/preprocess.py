"""
Comando Django para preprocesar casos y extraer parches de entrenamiento.
"""
from pathlib import Path

from lesion.management.base import PipelineCommand
from lesion.services import PreprocessService
from lesion.services.preprocess_service import expand_case_dirs


class Command(PipelineCommand):
    help = ('Remuestrea, recorta y escala un caso (o todos los casos de un directorio) '
            'y escribe los tensores preprocesados y los parches')
    step = 'preprocess'
    uses_config = True

    def add_stage_arguments(self, parser):
        parser.add_argument(
            '--case',
            required=True,
            help='Directorio de un caso o raíz con varios casos'
        )
        parser.add_argument(
            '--out',
            required=True,
            help='Directorio de salida (con una raíz, un subdirectorio por caso)'
        )
        parser.add_argument(
            '--window',
            default=None,
            help='Ventana precalculada (.pwt) de un caso individual; si falta se calcula'
        )

    def run(self, **options):
        config = self.load_config(options).preproc
        service = PreprocessService()
        dirs, many = expand_case_dirs(options['case'])
        if many:
            outputs = service.run_many(options['case'], options['out'], config, options['seed'], options['threads'])
            return f"{len(outputs)} casos preprocesados en {options['out']}"
        out = service.run(dirs[0], Path(options['out']), config, options['seed'], options['window'])
        return f"Caso preprocesado en {out}"
