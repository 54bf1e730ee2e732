"""
Comando Django para extraer la ventana temporal alrededor del pico de contraste.
"""
from lesion.management.base import PipelineCommand
from lesion.services import WindowService
from lesion.temporal import WINDOW_LENGTH


class Command(PipelineCommand):
    help = 'Detecta el pico de contraste de la PWI y escribe la ventana (.pwt) con su sidecar JSON'
    step = 'window'

    def add_stage_arguments(self, parser):
        parser.add_argument(
            '--in',
            dest='case_dir',
            required=True,
            help='Directorio del caso'
        )
        parser.add_argument(
            '--out',
            required=True,
            help='Archivo .pwt de salida; el sidecar se escribe junto a él con extensión .json'
        )
        parser.add_argument(
            '--length',
            type=int,
            default=WINDOW_LENGTH,
            help='Adquisiciones de la ventana (por defecto: %(default)s)'
        )

    def run(self, **options):
        window = WindowService().run(options['case_dir'], options['out'], options['length'], options['seed'])
        return f"Ventana [{window.start}, {window.start + window.length}) con pico en {window.peak_index}"
