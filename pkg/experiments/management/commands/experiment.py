"""
Run one experiment.

    python manage.py experiment --config run.yaml --out runs/a
    python manage.py experiment verify-lemmas --out runs/lemmas --tolerance-profile strict
    python manage.py experiment simulate2d --config run.yaml --out runs/b --resume runs/a/checkpoints/checkpoint_00000400.ipmf

Exit codes: 0 pass, 1 tolerance failure, 2 configuration error, 3 numeric blow-up.
"""
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from core_utils.exceptions import IPMError
from experiments.serializers import KINDS, PRESETS
from experiments.services import execute
from experiments.spec import load_config, validate_document


class Command(BaseCommand):
    help = "Run one experiment and write its artifacts and manifest to --out."

    def add_arguments(self, parser):
        parser.add_argument("kind", nargs="?", choices=KINDS, help="Experiment kind; must match the config if both are given.")
        parser.add_argument("--config", type=Path, help="YAML experiment document.")
        parser.add_argument("--out", type=Path, help="Output directory (overrides the document's `output`).")
        parser.add_argument("--seed", type=int, help="Seed override, 0 <= seed < 2**64.")
        parser.add_argument("--resume", type=Path, help="Field checkpoint to continue from (simulations only).")
        parser.add_argument("--preset", choices=sorted(PRESETS), help="Parameter preset, used without --config.")
        parser.add_argument(
            "--tolerance-profile",
            dest="tolerance_profile",
            default="default",
            choices=sorted(settings.IPM_TOLERANCE_PROFILES),
        )

    def handle(self, *args, **options):
        try:
            spec = self._load_spec(options)
        except IPMError as exc:
            raise CommandError(str(exc), returncode=exc.exit_code)

        out = options["out"] or (Path(spec.output) if spec.output else None)
        if out is None:
            raise CommandError("No output directory: pass --out or set `output` in the config", returncode=2)

        try:
            manifest = execute(spec, out, profile=options["tolerance_profile"], resume=options["resume"])
        except IPMError as exc:
            raise CommandError(str(exc), returncode=exc.exit_code)

        message = f"{spec.kind}: {manifest.status} ({len(manifest.files)} files) -> {out}"
        if manifest.exit_code:
            detail = manifest.error["detail"] if manifest.error else "declared tolerances not met"
            raise CommandError(f"{message}: {detail}", returncode=manifest.exit_code)
        self.stdout.write(self.style.SUCCESS(message))

    def _load_spec(self, options):
        kind = options["kind"]
        seed = options["seed"]
        if seed is not None and not 0 <= seed < 2 ** 64:
            raise CommandError("--seed must lie in [0, 2**64)", returncode=2)
        if options["config"]:
            spec = load_config(options["config"])
            if kind and kind != spec.kind:
                raise CommandError(f"Command kind '{kind}' does not match config kind '{spec.kind}'", returncode=2)
            if options["preset"]:
                raise CommandError("--preset applies only without --config; set `preset` in the document", returncode=2)
        elif kind:
            document = {"kind": kind}
            if options["preset"]:
                document["preset"] = options["preset"]
            spec = validate_document(document)
        else:
            raise CommandError("Give an experiment kind or --config", returncode=2)
        return spec.with_overrides(seed=seed)
