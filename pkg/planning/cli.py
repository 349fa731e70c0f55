import os
import sys

DEFAULT_SETTINGS = 'viewplan_project.settings'


def cli_dispatch(argv: list[str] | None = None) -> int:
    """
    Run one management command and return its exit status instead of exiting.

    ``argv`` follows ``sys.argv`` conventions (program name first).
    """
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', DEFAULT_SETTINGS)
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed?"
        ) from exc

    argv = list(sys.argv if argv is None else argv)
    try:
        execute_from_command_line(argv)
    except SystemExit as e:
        if e.code is None:
            return 0
        if isinstance(e.code, int):
            return e.code
        print(e.code, file=sys.stderr)
        return 1
    return 0
