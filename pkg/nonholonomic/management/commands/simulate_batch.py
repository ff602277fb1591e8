from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from nonholonomic.runner import EXIT_OK, EXIT_USAGE
from nonholonomic.tasks import run_simulation


class Command(BaseCommand):
    help = 'Fan several run configuration files out through the task queue'

    def add_arguments(self, parser):
        parser.add_argument('configs', nargs='+', help='JSON run configuration files')
        parser.add_argument('--timeout', type=float, default=None, help='Seconds to wait for each run')

    def handle(self, *args, **options):
        paths = [Path(p) for p in options['configs']]
        missing = [str(p) for p in paths if not p.is_file()]
        if missing:
            raise CommandError(f"configs: not found: {', '.join(missing)}", returncode=EXIT_USAGE)

        # Queue every run before collecting results
        pending = [(path, run_simulation.delay(str(path))) for path in paths]

        worst = EXIT_OK
        for path, result in pending:
            code = result.get(timeout=options['timeout'])
            worst = max(worst, code)
            if code == EXIT_OK:
                self.stdout.write(self.style.SUCCESS(f"{path}: ok"))
            else:
                self.stdout.write(self.style.ERROR(f"{path}: exit {code}"))

        if worst != EXIT_OK:
            raise CommandError(f"{len(pending)} runs, worst exit code {worst}", returncode=worst)
