#!/usr/bin/env python
"""Utilidad de línea de comandos del pipeline pwinet (comandos de gestión de Django)."""
import os
import sys

USAGE_EXIT_CODE = 1


def main():
    """Run administrative tasks."""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'pwinet.settings')
    try:
        from django.core.management import ManagementUtility, execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    if len(sys.argv) < 2:
        # sin subcomando: ayuda y error de uso
        sys.stderr.write(ManagementUtility(sys.argv).main_help_text() + '\n')
        sys.exit(USAGE_EXIT_CODE)
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
