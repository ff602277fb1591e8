from django.core.management.base import BaseCommand

from nonholonomic.scenarios import list_scenarios
from nonholonomic.writers import render_json


class Command(BaseCommand):
    help = 'List registered scenarios with their parameter schemas'

    def add_arguments(self, parser):
        parser.add_argument('--names', action='store_true', help='Print only the scenario names')

    def handle(self, *args, **options):
        entries = list_scenarios()
        if options['names']:
            for entry in entries:
                self.stdout.write(entry['name'])
            return
        self.stdout.write(render_json(entries, indent=2).decode('utf-8'))
