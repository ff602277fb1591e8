#!/usr/bin/env python
"""
Command-line entry point for nonsmooth-nh.

    python manage.py simulate --scenario spherical_pendulum
    python manage.py list_scenarios
    python manage.py simulate_batch runs/*.json
"""
import os
import sys


def main():
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'core.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django, which nonsmooth-nh uses for settings and "
            "commands. Run `poetry install` and try again from the poetry shell."
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
