"""
Base común de los comandos del pipeline.

Todos los comandos aceptan ``--seed`` y ``--threads``; los errores del
pipeline se traducen a ``CommandError`` con el código de salida de su
categoría (1 uso, 2 datos/formato, 3 numérico).
"""

import sys
import time

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError, CommandParser

from lesion.exceptions import EXIT_USAGE, PipelineError
from lesion.serializers import load_pipeline_config
from lesion.utils.logging_utils import get_logger

logger = get_logger('lesion.management')


class UsageErrorParser(CommandParser):
    """Los errores de argparse salen con código 1 en lugar de 2."""

    def error(self, message):
        if self.called_from_command_line:
            self.print_usage(sys.stderr)
            self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")
        raise CommandError(f"Error: {message}", returncode=EXIT_USAGE)


class PipelineCommand(BaseCommand):
    """Comando de una etapa; las subclases implementan ``add_stage_arguments`` y ``run``."""

    step = 'command'
    uses_config = False

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser.__class__ = UsageErrorParser
        return parser

    def add_arguments(self, parser):
        parser.add_argument(
            '--seed',
            type=int,
            default=settings.PWINET['SEED'],
            help='Semilla global (por defecto: %(default)s, o PWTK_SEED)'
        )
        parser.add_argument(
            '--threads',
            type=int,
            default=settings.PWINET['THREADS'],
            help='Máximo de hilos de trabajo (por defecto: %(default)s)'
        )
        if self.uses_config:
            parser.add_argument(
                '--config',
                type=str,
                default=None,
                help='Documento JSON de configuración (por defecto: valores de escritorio)'
            )
        self.add_stage_arguments(parser)

    def add_stage_arguments(self, parser):
        pass

    def load_config(self, options):
        return load_pipeline_config(options.get('config'), options['seed'])

    def run(self, **options):
        raise NotImplementedError

    def handle(self, *args, **options):
        if options['threads'] < 1:
            raise CommandError("--threads debe ser >= 1", returncode=EXIT_USAGE)
        start_time = time.perf_counter()
        try:
            message = self.run(**options)
        except PipelineError as exc:
            logger.error(exc.message, extra={'step': self.step, 'details': {
                'error_code': exc.error_code, 'exit_code': exc.exit_code, **exc.details}})
            raise CommandError(f"[{exc.error_code}] {exc.message}", returncode=exc.exit_code) from exc
        logger.info(f"{self.step} - Completed", extra={'step': self.step, 'details': {
            'duration_s': round(time.perf_counter() - start_time, 4)}})
        if message:
            self.stdout.write(self.style.SUCCESS(message))
