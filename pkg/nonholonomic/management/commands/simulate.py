import argparse
import io
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from rest_framework.exceptions import ParseError
from rest_framework.parsers import JSONParser

from nonholonomic.exceptions import ConfigError, InvalidParams, SimulationError, UnknownScenario
from nonholonomic.runner import EXIT_AUDIT_FAILURE, EXIT_OK, EXIT_USAGE, parse_config, run

USAGE_ERRORS = (ConfigError, InvalidParams, UnknownScenario)


def parse_json(text):
    return JSONParser().parse(io.BytesIO(text.encode("utf-8")))


def parse_assignment(text):
    """``key=value`` with a JSON value, falling back to the raw string."""
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise CommandError(f"Expected key=value, got {text!r}", returncode=EXIT_USAGE)
    try:
        return key, parse_json(value)
    except ParseError:
        return key, value


def load_config_file(path):
    try:
        data = parse_json(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CommandError(f"config: cannot read {path}: {exc}", returncode=EXIT_USAGE) from exc
    except ParseError as exc:
        raise CommandError(f"config: {path} is not valid JSON", returncode=EXIT_USAGE) from exc
    if not isinstance(data, dict):
        raise CommandError("config: top level must be a JSON object", returncode=EXIT_USAGE)
    return data


class Command(BaseCommand):
    help = 'Integrate a scenario, audit the trajectory and write the artifacts'

    def add_arguments(self, parser):
        parser.add_argument('--scenario', help='Scenario name (see list_scenarios)')
        parser.add_argument('--config', help='JSON run configuration file')
        parser.add_argument('--mode', help='full, reduced, compare or eps')
        parser.add_argument('--t-final', dest='t_final', type=float)
        parser.add_argument('--dt', dest='h', type=float, help='Step size')
        parser.add_argument('--out-dir', dest='out_dir')
        parser.add_argument('--seed', type=int)
        parser.add_argument(
            '--audit',
            action=argparse.BooleanOptionalAction,
            default=None,
            help='Run the audit harness after integration',
        )
        parser.add_argument(
            '--free-vertical',
            '--paper-literal-vertical',
            dest='free_vertical',
            action='store_true',
            default=None,
            help='Enforce only the shape-space constraint rows in reduced systems',
        )
        parser.add_argument(
            '--param', action='append', default=[], metavar='KEY=VALUE', help='Scenario parameter override'
        )
        parser.add_argument(
            '--tolerance', action='append', default=[], metavar='KEY=VALUE', help='Tolerance override'
        )

    def build_config(self, options):
        data = load_config_file(options['config']) if options.get('config') else {}
        data.setdefault('schema_version', getattr(settings, 'RUN_CONFIG_SCHEMA_VERSION', 1))

        scenario = data.get('scenario') or {}
        if not isinstance(scenario, dict):
            raise CommandError('scenario: must be an object with name and params', returncode=EXIT_USAGE)
        if options.get('scenario') and scenario.get('name') != options['scenario']:
            # Parameters in the file belong to another scenario
            scenario = {'name': options['scenario']}
        if options.get('param'):
            params = dict(scenario.get('params') or {})
            params.update(parse_assignment(text) for text in options['param'])
            scenario = {**scenario, 'params': params}
        if not scenario:
            raise CommandError('scenario: pass --scenario or a config file', returncode=EXIT_USAGE)
        data['scenario'] = scenario

        if options.get('tolerance'):
            tolerances = dict(data.get('tolerances') or {})
            tolerances.update(parse_assignment(text) for text in options['tolerance'])
            data['tolerances'] = tolerances

        for key in ('mode', 't_final', 'h', 'out_dir', 'seed', 'audit', 'free_vertical'):
            if options.get(key) is not None:
                data[key] = options[key]
        return data

    def handle(self, *args, **options):
        try:
            config = parse_config(self.build_config(options))
        except USAGE_ERRORS as exc:
            raise CommandError(exc.message, returncode=EXIT_USAGE) from exc

        try:
            result = run(config)
        except USAGE_ERRORS as exc:
            raise CommandError(exc.message, returncode=EXIT_USAGE) from exc
        except SimulationError as exc:
            raise CommandError(f"{exc.code}: {exc.message}", returncode=EXIT_AUDIT_FAILURE) from exc

        for line in result.summaries:
            self.stdout.write(line)

        if result.exit_code != EXIT_OK:
            failed = [
                f"{report.subject}:{check.name}" for report in result.reports for check in report.failures
            ]
            raise CommandError(f"Audit failed: {', '.join(failed)}", returncode=EXIT_AUDIT_FAILURE)
        self.stdout.write(self.style.SUCCESS(f"Artifacts written to {config.out_dir}"))
