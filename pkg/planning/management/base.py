import logging
import sys

from django.core.management.base import BaseCommand, CommandError

from ..exceptions import ViewPlanError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INCOMPLETE = 3


class PlanningCommand(BaseCommand):
    """
    Base for the planning subcommands.

    Exit statuses: 1 for usage errors, 2 for unreadable or invalid data,
    3 when a plan stops short of the requested coverage.
    """

    requires_system_checks = []
    requires_migrations_checks = False

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)

        def usage_error(message):
            if parser.called_from_command_line:
                parser.print_usage(sys.stderr)
                parser.exit(EXIT_USAGE, f"{parser.prog}: error: {message}\n")
            raise CommandError(f"Error: {message}", returncode=EXIT_USAGE)

        parser.error = usage_error
        return parser

    def execute(self, *args, **options):
        try:
            return super().execute(*args, **options)
        except ViewPlanError as e:
            logger.error(f"{type(e).__name__}: {e}")
            raise CommandError(str(e), returncode=EXIT_DATA) from e
        except OSError as e:
            raise CommandError(f"I/O error: {e}", returncode=EXIT_DATA) from e

    def usage(self, message: str) -> CommandError:
        return CommandError(message, returncode=EXIT_USAGE)

    def incomplete(self, message: str) -> CommandError:
        return CommandError(message, returncode=EXIT_INCOMPLETE)
