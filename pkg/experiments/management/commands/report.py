from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from core_utils.exceptions import IPMError
from experiments.services import write_report


class Command(BaseCommand):
    help = "Verify a run directory's manifest and write report.json and report.md."

    def add_arguments(self, parser):
        parser.add_argument("run_dir", type=Path)
        parser.add_argument("--out", type=Path, help="Where to write the report (defaults to the run directory).")

    def handle(self, *args, **options):
        try:
            paths = write_report(options["run_dir"], options["out"])
        except IPMError as exc:
            raise CommandError(str(exc), returncode=exc.exit_code)
        self.stdout.write(self.style.SUCCESS(f"Report written to {paths['markdown']} and {paths['json']}"))
