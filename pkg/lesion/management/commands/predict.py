"""
Comando Django para la inferencia de volumen completo.
"""
from pathlib import Path

from lesion.io.raw_format import save_raw
from lesion.management.base import PipelineCommand
from lesion.services import PredictionService
from lesion.services.preprocess_service import expand_case_dirs
from lesion.training import load_checkpoint


class Command(PipelineCommand):
    help = ('Predice el mapa de probabilidad de lesión de un caso (o de todos los casos de un directorio, '
            'escribiendo <case_id>.pwt en --out)')
    step = 'predict'
    uses_config = True

    def add_stage_arguments(self, parser):
        parser.add_argument(
            '--model',
            required=True,
            help='Checkpoint entrenado'
        )
        parser.add_argument(
            '--case',
            required=True,
            help='Caso preprocesado o crudo, o raíz con varios casos'
        )
        parser.add_argument(
            '--out',
            required=True,
            help='Archivo .pwt (caso individual) o directorio (raíz)'
        )

    def run(self, **options):
        config = self.load_config(options).preproc
        service = PredictionService()
        dirs, many = expand_case_dirs(options['case'])
        if not many:
            volume = service.run(options['model'], dirs[0], options['out'], config, options['seed'])
            return f"Predicción {volume.dims} escrita en {options['out']}"

        checkpoint = load_checkpoint(options['model'])
        spec = checkpoint.build()
        patch_size = int(checkpoint.metadata.get('patch_size', config.patch_size))
        out_dir = Path(options['out'])
        out_dir.mkdir(parents=True, exist_ok=True)
        for case_dir in dirs:
            case = service.preprocess.resolve(case_dir, config, options['seed'])
            save_raw(out_dir / f"{case.case_id}.pwt", service.predict_case(spec, case, patch_size))
        return f"{len(dirs)} predicciones escritas en {out_dir}"
